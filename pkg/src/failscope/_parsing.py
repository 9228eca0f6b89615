"""Tolerant parsing of model replies: JSON-ish objects and bullet lists."""

from __future__ import annotations

import ast
import json


def parse_json_object(text: str) -> dict | None:
    """Best-effort extraction of a single JSON object from a model reply.

    Tries a direct parse, then the outermost {...} block, then a Python
    literal parse (models sometimes emit single-quoted dicts). Returns None
    when nothing object-like can be recovered.
    """
    text = (text or "").strip()
    if not text:
        return None
    candidates = [text]
    start, end = text.find("{"), text.rfind("}")
    if start != -1 and end > start:
        candidates.append(text[start : end + 1])
    for candidate in candidates:
        try:
            obj = json.loads(candidate)
            if isinstance(obj, dict):
                return obj
        except json.JSONDecodeError:
            pass
        try:
            obj = ast.literal_eval(candidate)
            if isinstance(obj, dict):
                return obj
        except (ValueError, SyntaxError):
            pass
    return None


def parse_bullets(text: str) -> list[str]:
    """Extract "- item" bullet lines, stripping dashes and wrapping quotes."""
    items = []
    for line in (text or "").splitlines():
        line = line.strip()
        if not line.startswith("-"):
            continue
        item = line.lstrip("-").strip()
        if len(item) >= 2 and item[0] == item[-1] and item[0] in "\"'":
            item = item[1:-1].strip()
        if item:
            items.append(item)
    return items
