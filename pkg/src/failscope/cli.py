"""failscope command line: ingest -> metrics -> mapper/discover -> judge -> stats -> study.

Every subcommand writes its outputs plus a manifest (config snapshot, input
hashes, output paths, seed) so a run can be reproduced offline with the
mock gateway. All randomness flows from --seed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .corpus import (
    CorpusError,
    FORMATS,
    group_by_meta_label,
    join,
    load_dataset,
    load_instances,
    load_predictions,
    save_dataset,
)
from .discovery import (
    METHODS,
    DiscoveryConfig,
    DiscoveryError,
    contrastive_patterns,
    direct_patterns,
    load_patterns_json,
    mapper_patterns,
    region_patterns,
    write_patterns_json,
)
from .embedding_space import EmbeddingError, EmbeddingStore, fetch_store
from .judge import DOMAINS, JudgeError, load_references, recall
from .llm_gateway import GatewayError, HttpBackend, LlmGateway, MockBackend
from .mapper import MapperError, build_cover, build_graph, greedy_merge, top_k_regions, write_graph_json, write_regions_json
from .metrics import MetricsError, compute_metrics, flag_groups
from .report import (
    METRICS_HEADER,
    metrics_rows,
    render_metrics_figure,
    render_study_figure,
    write_json,
    write_tsv,
)
from .stats import StatsError, study_report
from .study.models import StudyError

log = logging.getLogger("failscope")


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(args: argparse.Namespace, inputs: list[Path], outputs: list[Path]) -> None:
    snapshot = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in sorted(vars(args).items())
        if k != "func" and v is not None
    }
    manifest = {
        "tool": f"failscope {__version__}",
        "subcommand": args.subcommand,
        "config": snapshot,
        "inputs": {str(p): _sha256_file(p) for p in inputs if p and Path(p).exists()},
        "outputs": [str(p) for p in outputs],
        "seed": getattr(args, "seed", None),
    }
    manifest["run_id"] = hashlib.sha256(
        json.dumps(manifest, sort_keys=True).encode("utf-8")
    ).hexdigest()[:12]
    primary = Path(outputs[0])
    write_json(manifest, primary.with_name(primary.name + ".manifest.json"))


def _gateway_from_args(args: argparse.Namespace) -> LlmGateway:
    if args.gateway == "mock":
        if not args.mock_fixtures:
            raise GatewayError("--gateway mock requires --mock-fixtures FILE")
        backend = MockBackend.from_fixtures(args.mock_fixtures)
    else:
        backend = HttpBackend()
    return LlmGateway(backend, cache_dir=args.cache_dir)


def _add_gateway_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--gateway", choices=("mock", "http"), default="mock",
                        help="chat backend (default: mock)")
    parser.add_argument("--mock-fixtures", type=Path, default=None,
                        help="JSONL of {request_hash, content} for the mock backend")
    parser.add_argument("--cache-dir", type=Path, default=None,
                        help="directory for the content-addressed response cache")
    parser.add_argument("--model", default=None, help="generation model id override")


# ----- subcommands --------------------------------------------------------


def cmd_ingest(args: argparse.Namespace) -> int:
    instances = load_instances(args.instances, args.format)
    predictions = load_predictions(args.predictions)
    dataset = join(instances, predictions, args.model)
    save_dataset(dataset, args.out)
    print(f"ingested {len(dataset)} instance(s): {len(dataset.correct_ids)} correct, "
          f"{len(dataset.wrong_ids)} wrong -> {args.out}")
    _write_manifest(args, [args.instances, args.predictions], [args.out])
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.dataset)
    groups = group_by_meta_label(dataset, args.group_by)
    report = flag_groups(
        groups, dataset,
        min_error_ratio=args.min_error_ratio,
        include_unbounded=not args.exclude_unbounded,
    )
    all_metrics = sorted(
        (compute_metrics(g, dataset) for g in groups), key=lambda m: m.group_label
    )
    outputs = [args.out]
    write_tsv(METRICS_HEADER, metrics_rows(report.flagged if args.flagged_only else all_metrics), args.out)
    summary = {
        "group_by": args.group_by,
        "min_error_ratio": args.min_error_ratio,
        "n_groups": len(groups),
        "flagged": [m.to_json_dict() for m in report.flagged],
        "total_error_covered": report.total_error_covered,
    }
    if args.json:
        write_json(summary, args.json)
        outputs.append(args.json)
    if args.figure:
        render_metrics_figure(report.flagged if args.flagged_only else all_metrics, args.figure)
        outputs.append(args.figure)
    print(f"{len(report.flagged)}/{len(groups)} group(s) flagged at error ratio >= "
          f"{args.min_error_ratio}; union covers {report.total_error_covered:.1%} of total error")
    _write_manifest(args, [args.dataset], outputs)
    return 0


def _store_from_args(args: argparse.Namespace, dataset) -> EmbeddingStore:
    if args.embeddings and args.embed_model:
        raise EmbeddingError("pass either --embeddings FILE or --embed-model MODEL, not both")
    if args.embeddings:
        return EmbeddingStore.from_jsonl(args.embeddings)
    if args.embed_model:
        gateway = _gateway_from_args(args)
        pairs = [(inst.id, inst.text) for inst in dataset.instances]
        return fetch_store(gateway, args.embed_model, pairs)
    raise EmbeddingError("embeddings required: pass --embeddings FILE or --embed-model MODEL")


def cmd_mapper(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.dataset)
    store = _store_from_args(args, dataset)
    norms = [store.l2_norm(inst.id) for inst in dataset.instances]
    cover = build_cover(norms, n_intervals=args.intervals, overlap=args.overlap)
    graph = build_graph(store, dataset, cover, min_samples=args.min_samples)
    regions = top_k_regions(greedy_merge(graph, dataset), args.top_k)
    write_regions_json(regions, args.out)
    outputs = [args.out]
    if args.graph_out:
        write_graph_json(graph, args.graph_out)
        outputs.append(args.graph_out)
    noise = len(dataset) - len({m for n in graph.nodes for m in n.member_ids})
    print(f"graph: {len(graph.nodes)} node(s), {len(graph.edges)} edge(s); "
          f"{noise} instance(s) in no node; {len(regions)} region(s) -> {args.out}")
    inputs = [args.dataset] + ([args.embeddings] if args.embeddings else [])
    _write_manifest(args, inputs, outputs)
    return 0


def cmd_discover(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.dataset)
    gateway = _gateway_from_args(args)
    config_kwargs = dict(
        num_patterns=args.num_patterns,
        use_cot=args.cot,
        seed=args.seed,
    )
    if args.model:
        config_kwargs["model_id"] = args.model
    config = DiscoveryConfig(**config_kwargs)
    inputs = [args.dataset]

    if args.method == "direct":
        patterns = direct_patterns(dataset, config, gateway)
    elif args.method == "contrastive":
        patterns = contrastive_patterns(dataset, config, gateway)
    else:
        store = _store_from_args(args, dataset)
        if args.embeddings:
            inputs.append(args.embeddings)
        if args.method == "regions":
            patterns = region_patterns(dataset, store, config, gateway)
        else:
            patterns, _regions = mapper_patterns(
                dataset, store, config, gateway,
                n_intervals=args.intervals, overlap=args.overlap, min_samples=args.min_samples,
            )
    write_patterns_json(patterns, args.out)
    print(f"{args.method}: {len(patterns)} pattern(s) -> {args.out}")
    _write_manifest(args, inputs, [args.out])
    return 0


def cmd_judge(args: argparse.Namespace) -> int:
    patterns = load_patterns_json(args.patterns)
    references = load_references(args.references)
    gateway = _gateway_from_args(args)
    kwargs = {}
    if args.model:
        kwargs["model_id"] = args.model
    report = recall(patterns, references, args.domain, gateway, n_runs=args.runs, **kwargs)
    write_json(report.to_json_dict(), args.out)
    print(f"recall over {len(references)} reference(s): "
          f"{report.recall_mean:.2f} ± {report.recall_sd:.2f} ({report.n_runs} runs) -> {args.out}")
    _write_manifest(args, [args.patterns, args.references], [args.out])
    return 0


def cmd_stats_study(args: argparse.Namespace) -> int:
    pre: list[float] = []
    post: list[float] = []
    with open(args.sessions, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            pre.append(row["pretest_accuracy"])
            post.append(row["posttest_accuracy"])
    if not pre:
        raise StatsError(f"{args.sessions}: no session rows")
    summary = study_report(pre, post)
    w_pre, p_pre = summary.shapiro_pre
    w_post, p_post = summary.shapiro_post
    print(f"n = {summary.n}")
    print(f"normality pre:  W = {w_pre:.4f}, p = {p_pre:.4f}")
    print(f"normality post: W = {w_post:.4f}, p = {p_post:.4f}")
    print(f"paired t: t = {summary.t:.4f}, df = {summary.df}, p = {summary.p:.6f}")
    print(f"cohen's d: pooled = {summary.d_pooled:.3f}, paired_dz = {summary.d_paired_dz:.3f}")
    print(f"improved participants: {summary.improved}/{summary.n}")
    outputs = []
    if args.out:
        write_json(summary.to_json_dict(), args.out)
        outputs.append(args.out)
    if args.figure:
        render_study_figure(pre, post, args.figure)
        outputs.append(args.figure)
    if outputs:
        _write_manifest(args, [args.sessions], outputs)
    return 0


def cmd_demo(args: argparse.Namespace) -> int:
    from .demo import build_demo_bundle

    paths = build_demo_bundle(args.out_dir, seed=args.seed)
    for name, path in sorted(paths.items()):
        print(f"{name}: {path}")
    print("\nrun the pipeline offline, e.g.:")
    print(f"  failscope metrics --dataset {paths['dataset']} --group-by standard --out report.tsv")
    print(f"  failscope discover --method mapper --dataset {paths['dataset']} "
          f"--embeddings {paths['embeddings']} --num-patterns 2 "
          f"--gateway mock --mock-fixtures {paths['mock_gateway']} --out patterns.json")
    return 0


def cmd_study_serve(args: argparse.Namespace) -> int:
    from .study.http import serve

    print(f"serving study API from {args.root} on {args.host}:{args.port}")
    serve(str(args.root), host=args.host, port=args.port)
    return 0


def cmd_study_export(args: argparse.Namespace) -> int:
    from .study.service import StudyService

    service = StudyService(args.root)
    export = service.export_cohort(args.study_id, uncertain_policy=args.uncertain_policy)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sessions_path = out_dir / "sessions.jsonl"
    with open(sessions_path, "w", encoding="utf-8") as fh:
        for row in export["sessions"]:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    subjects_path = out_dir / "subjects.tsv"
    write_tsv(
        ["subject", "pre", "post", "delta"],
        [[r["subject"], f"{r['pre']:.4f}", f"{r['post']:.4f}", f"{r['delta']:.4f}"]
         for r in export["per_subject"]],
        subjects_path,
    )
    print(f"exported {len(export['sessions'])} session(s) -> {sessions_path}")
    _write_manifest(args, [], [sessions_path, subjects_path])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="failscope", description=__doc__)
    parser.add_argument("--version", action="version", version=f"failscope {__version__}")
    parser.add_argument("--seed", type=int, default=0, help="seed for all sampling (default: 0)")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("ingest", help="join instances with predictions into a dataset file")
    p.add_argument("--instances", type=Path, required=True)
    p.add_argument("--format", choices=FORMATS, default="generic-jsonl")
    p.add_argument("--predictions", type=Path, required=True)
    p.add_argument("--model", required=True, help="model id whose predictions to join")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("metrics", help="group metrics and worth-to-teach flagging")
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--group-by", required=True, help="meta-label key, e.g. subject or standard")
    p.add_argument("--min-error-ratio", type=float, default=0.5)
    p.add_argument("--exclude-unbounded", action="store_true",
                   help="drop all-wrong groups instead of ranking them on top")
    p.add_argument("--flagged-only", action="store_true", help="restrict the TSV to flagged groups")
    p.add_argument("--out", type=Path, required=True, help="TSV report path")
    p.add_argument("--json", type=Path, default=None, help="optional JSON summary path")
    p.add_argument("--figure", type=Path, default=None, help="optional bar-chart image path")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("mapper", help="build the mapper graph and emit top-k error regions")
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--embeddings", type=Path, default=None, help="embeddings.jsonl path")
    p.add_argument("--embed-model", default=None,
                   help="fetch vectors from the HTTP embeddings endpoint instead of a file")
    p.add_argument("--intervals", type=int, default=100)
    p.add_argument("--overlap", type=float, default=0.5)
    p.add_argument("--min-samples", type=int, default=3)
    p.add_argument("--top-k", type=int, required=True)
    p.add_argument("--out", type=Path, required=True, help="regions.json path")
    p.add_argument("--graph-out", type=Path, default=None, help="node-link graph JSON path")
    _add_gateway_flags(p)
    p.set_defaults(func=cmd_mapper)

    p = sub.add_parser("discover", help="generate failure patterns")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--embeddings", type=Path, default=None,
                   help="embeddings.jsonl; needed by the regions/mapper methods")
    p.add_argument("--embed-model", default=None,
                   help="fetch vectors from the HTTP embeddings endpoint instead of a file")
    p.add_argument("--num-patterns", type=int, default=None)
    p.add_argument("--cot", action="store_true", help="include chains of thought in prompts")
    p.add_argument("--intervals", type=int, default=100)
    p.add_argument("--overlap", type=float, default=0.5)
    p.add_argument("--min-samples", type=int, default=3)
    p.add_argument("--out", type=Path, required=True, help="patterns.json path")
    _add_gateway_flags(p)
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("judge", help="rate patterns against references and compute recall")
    p.add_argument("--patterns", type=Path, required=True)
    p.add_argument("--references", type=Path, required=True)
    p.add_argument("--runs", type=int, default=3)
    p.add_argument("--domain", choices=DOMAINS, required=True)
    p.add_argument("--out", type=Path, required=True, help="recall_report.json path")
    _add_gateway_flags(p)
    p.set_defaults(func=cmd_judge)

    p = sub.add_parser("stats", help="statistical reports")
    stats_sub = p.add_subparsers(dest="stats_subcommand", required=True)
    ps = stats_sub.add_parser("study", help="pre/post study analysis over sessions.jsonl")
    ps.add_argument("--sessions", type=Path, required=True)
    ps.add_argument("--out", type=Path, default=None, help="optional JSON report path")
    ps.add_argument("--figure", type=Path, default=None, help="optional figure image path")
    ps.set_defaults(func=cmd_stats_study)

    p = sub.add_parser("demo", help="write a synthetic offline bundle (fixtures + mock gateway)")
    p.add_argument("--out-dir", type=Path, required=True)
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("study", help="study service administration")
    study_sub = p.add_subparsers(dest="study_subcommand", required=True)
    pserve = study_sub.add_parser("serve", help="run the HTTP study service")
    pserve.add_argument("--root", type=Path, required=True, help="storage directory")
    pserve.add_argument("--host", default="127.0.0.1")
    pserve.add_argument("--port", type=int, default=8000)
    pserve.set_defaults(func=cmd_study_serve)
    pexport = study_sub.add_parser("export", help="export completed sessions to files")
    pexport.add_argument("--root", type=Path, required=True)
    pexport.add_argument("--study-id", required=True)
    pexport.add_argument("--uncertain-policy", choices=("incorrect", "excluded"), default="incorrect")
    pexport.add_argument("--out-dir", type=Path, required=True)
    pexport.set_defaults(func=cmd_study_export)

    return parser


_EXPECTED_ERRORS = (
    CorpusError,
    MetricsError,
    EmbeddingError,
    MapperError,
    GatewayError,
    DiscoveryError,
    JudgeError,
    StatsError,
    StudyError,
    FileNotFoundError,
)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except _EXPECTED_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
