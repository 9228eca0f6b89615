/** End-to-end flow against a real study service instance.
 *
 * Covers the release gate for the client: a full pretest -> teaching (with
 * a feedback overlay on a wrong practice answer) -> posttest run, the
 * blinding invariant (no payload before completion carries the model's
 * ground truth), and double-submit safety.
 */

import { spawn, ChildProcess } from 'node:child_process';
import { mkdtempSync } from 'node:fs';
import { createServer } from 'node:net';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ApiError, StudyApi, FetchLike } from '../src/api.js';
import { SessionController } from '../src/session.js';

const STUDY_CONFIG = {
    study_id: 'ui-e2e',
    questions: [
        {
            id: 'q-frac', text: 'What is 3/4 - 1/2?', choices: ['1/4', '1/2'],
            subject: 'fractions', llm_correct: false, matches_taught_pattern: true,
            guideline_index: 0, feedback: null,
        },
        {
            id: 'q-lin', text: 'Solve 2x + 3 = 11.', choices: ['4', '7'],
            subject: 'equations', llm_correct: true, matches_taught_pattern: true,
            guideline_index: 1, feedback: null,
        },
        {
            id: 'q-nomatch', text: 'Name the capital of France.', choices: ['Paris', 'Lyon'],
            subject: 'nomatch', llm_correct: true, matches_taught_pattern: false,
            guideline_index: null, feedback: null,
        },
    ],
    guidelines: [
        'Do not use the LLM for fraction arithmetic.',
        'The LLM handles one-variable linear equations well.',
    ],
    practice_questions: [
        {
            id: 'p-frac', text: 'What is 2/3 + 1/6?', choices: ['5/6', '1/2'],
            subject: 'fractions', llm_correct: false, matches_taught_pattern: true,
            guideline_index: 0, feedback: null,
        },
    ],
    randomize_order: true,
    require_reasoning: true,
};

function freePort(): Promise<number> {
    return new Promise((resolve, reject) => {
        const server = createServer();
        server.listen(0, '127.0.0.1', () => {
            const address = server.address();
            if (address && typeof address === 'object') {
                const port = address.port;
                server.close(() => resolve(port));
            } else {
                reject(new Error('no port'));
            }
        });
    });
}

async function waitReady(base: string, proc: ChildProcess, timeoutMs = 30000): Promise<void> {
    const deadline = Date.now() + timeoutMs;
    while (Date.now() < deadline) {
        if (proc.exitCode !== null) {
            throw new Error(`service exited with ${proc.exitCode}`);
        }
        try {
            await fetch(`${base}/sessions/none/next`);
            return;
        } catch {
            await new Promise((r) => setTimeout(r, 100));
        }
    }
    throw new Error('service did not come up');
}

describe('participant flow end to end', () => {
    let proc: ChildProcess;
    let base: string;
    const payloadLog: Array<{ body: string; atPosition: number }> = [];
    let served = 0;

    const recordingFetch: FetchLike = async (input, init) => {
        const resp = await fetch(input, init);
        const copy = resp.clone();
        const body = await copy.text();
        payloadLog.push({ body, atPosition: served });
        return resp;
    };

    beforeAll(async () => {
        const port = await freePort();
        base = `http://127.0.0.1:${port}`;
        const root = mkdtempSync(join(tmpdir(), 'failscope-ui-'));
        proc = spawn('python3', [
            '-m', 'failscope.cli', 'study', 'serve',
            '--root', root, '--port', String(port),
        ], { stdio: 'ignore' });
        await waitReady(base, proc);
    }, 40000);

    afterAll(() => {
        proc?.kill('SIGKILL');
    });

    it('completes pretest, teaching with feedback overlay, and posttest blind', async () => {
        const api = new StudyApi(base, recordingFetch);
        await api.createStudy(STUDY_CONFIG);
        const { session_id } = await api.createSession('ui-e2e', { participant: 'e2e' });

        const controller = new SessionController(api, session_id);
        await controller.refresh();
        expect(controller.state.phase).toBe('pretest');
        expect(controller.state.item?.kind).toBe('question');

        const phasesSeen: string[] = [];
        let sawIncorrectOverlay = false;
        let guard = 0;
        while (!controller.done && guard++ < 50) {
            const { phase, item } = controller.state;
            if (!phasesSeen.length || phasesSeen[phasesSeen.length - 1] !== phase) {
                phasesSeen.push(phase);
            }
            served = controller.state.progress.position;
            if (!item) {
                break;
            }
            if (item.kind === 'guideline') {
                await controller.acknowledgeGuideline();
                continue;
            }
            if (item.kind === 'practice') {
                // deliberately wrong: the practice LLM answer is wrong, so
                // use_ai must trigger the incorrect-feedback overlay
                await controller.submit('use_ai', 'testing the feedback path');
                expect(controller.state.feedback).not.toBeNull();
                expect(controller.state.feedback?.outcome).toBe('incorrect');
                expect(controller.state.feedback?.guideline).toBe(STUDY_CONFIG.guidelines[0]);
                sawIncorrectOverlay = true;
                controller.dismissFeedback();
                continue;
            }
            await controller.submit('uncertain', 'not sure this matches a guideline');
        }

        expect(controller.done).toBe(true);
        expect(sawIncorrectOverlay).toBe(true);
        expect(phasesSeen).toEqual(['pretest', 'teaching', 'posttest']);

        // blinding: nothing served before completion may carry ground truth
        const totalItems = controller.state.progress.total;
        for (const entry of payloadLog) {
            if (entry.atPosition < totalItems) {
                expect(entry.body).not.toContain('llm_correct');
                expect(entry.body).not.toContain('matches_taught_pattern');
            }
        }

        // completed sessions may be scored (after completion ground truth
        // derived data like accuracies is fine)
        const score = await api.score(session_id);
        expect(score.pretest_accuracy).toBeGreaterThanOrEqual(0);
    }, 30000);

    it('empty reasoning never leaves the client', async () => {
        const api = new StudyApi(base, recordingFetch);
        const { session_id } = await api.createSession('ui-e2e');
        const controller = new SessionController(api, session_id);
        await controller.refresh();
        const before = payloadLog.length;
        await controller.submit('use_ai', '   ');
        expect(payloadLog.length).toBe(before); // no request was sent
        expect(controller.state.validation).toMatch(/explain/i);
        expect(controller.state.progress.position).toBe(0);
    });

    it('double-submit records exactly one response', async () => {
        const api = new StudyApi(base);
        const { session_id } = await api.createSession('ui-e2e');
        const next = await api.nextItem(session_id);
        const item = next.item;
        if (!item || item.kind === 'guideline') {
            throw new Error('expected a question first');
        }
        // raw double-post: the server must keep exactly one
        await api.submitResponse(session_id, item.question_id, 'use_ai', 'first click');
        await expect(
            api.submitResponse(session_id, item.question_id, 'use_ai', 'second click'),
        ).rejects.toSatisfy((err: unknown) => err instanceof ApiError && err.status === 409);
        const after = await api.nextItem(session_id);
        expect(after.progress.position).toBe(1);

        // controller-level double-click: the in-flight guard sends one request
        const controller = new SessionController(api, session_id);
        await controller.refresh();
        const current = controller.state.item;
        if (!current || current.kind === 'guideline') {
            throw new Error('expected a question');
        }
        const [first, second] = await Promise.allSettled([
            controller.submit('not_use_ai', 'double click'),
            controller.submit('not_use_ai', 'double click'),
        ]);
        expect(first.status).toBe('fulfilled');
        expect(second.status).toBe('fulfilled');
        const resumed = await api.nextItem(session_id);
        expect(resumed.progress.position).toBe(2);
    });

    it('a reload resumes at the server item', async () => {
        const api = new StudyApi(base);
        const { session_id } = await api.createSession('ui-e2e');
        const controller = new SessionController(api, session_id);
        await controller.refresh();
        const firstItem = controller.state.item;
        await controller.submit('uncertain', 'step one');
        const positionAfter = controller.state.progress.position;

        // a fresh controller (same session) lands on the same served item
        const reloaded = new SessionController(api, session_id);
        await reloaded.refresh();
        expect(reloaded.state.progress.position).toBe(positionAfter);
        expect(reloaded.state.item).not.toEqual(firstItem);
        expect(reloaded.state.item).toEqual(controller.state.item);
    });
});
