/** Thin typed client for the failscope study service HTTP API. */

export type Decision = 'use_ai' | 'not_use_ai' | 'uncertain' | 'acknowledged';

export interface ServedQuestion {
    kind: 'question' | 'practice';
    question_id: string;
    text: string;
    choices: string[];
    subject: string;
}

export interface ServedGuideline {
    kind: 'guideline';
    guideline_id: string;
    text: string;
}

export type ServedItem = ServedQuestion | ServedGuideline;

export interface Progress {
    position: number;
    total: number;
}

export interface NextItemResponse {
    phase: string; // pretest | teaching | posttest | done
    item: ServedItem | null;
    progress: Progress;
}

export interface PracticeFeedback {
    outcome: 'correct' | 'incorrect';
    expected: string;
    guideline: string | null;
    message: string;
}

export interface SubmitResponse {
    accepted: boolean;
    feedback: PracticeFeedback | null;
}

export interface SessionScore {
    session_id: string;
    pretest_accuracy: number;
    posttest_accuracy: number;
    delta: number;
    per_subject: Record<string, { pre: number; post: number; delta: number }>;
}

export class ApiError extends Error {
    constructor(
        message: string,
        readonly status: number,
        readonly code: string,
    ) {
        super(message);
    }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function readJson(resp: Response): Promise<unknown> {
    const text = await resp.text();
    try {
        return text ? JSON.parse(text) : null;
    } catch {
        return null;
    }
}

export class StudyApi {
    constructor(
        readonly baseUrl: string,
        private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
    ) {}

    private async request<T>(path: string, init?: RequestInit): Promise<T> {
        const resp = await this.fetchFn(`${this.baseUrl}${path}`, {
            headers: { 'Content-Type': 'application/json' },
            ...init,
        });
        const body = (await readJson(resp)) as Record<string, unknown> | null;
        if (!resp.ok) {
            const code = typeof body?.code === 'string' ? body.code : 'HttpError';
            const message = typeof body?.message === 'string' ? body.message : resp.statusText;
            throw new ApiError(message, resp.status, code);
        }
        return body as T;
    }

    createStudy(config: unknown): Promise<{ study_id: string }> {
        return this.request('/studies', { method: 'POST', body: JSON.stringify(config) });
    }

    createSession(studyId: string, participantMeta: Record<string, string> = {}): Promise<{ session_id: string }> {
        return this.request(`/studies/${encodeURIComponent(studyId)}/sessions`, {
            method: 'POST',
            body: JSON.stringify({ participant_meta: participantMeta }),
        });
    }

    nextItem(sessionId: string): Promise<NextItemResponse> {
        return this.request(`/sessions/${encodeURIComponent(sessionId)}/next`);
    }

    submitResponse(sessionId: string, questionId: string, decision: Decision, reasoning: string): Promise<SubmitResponse> {
        return this.request(`/sessions/${encodeURIComponent(sessionId)}/responses`, {
            method: 'POST',
            body: JSON.stringify({ question_id: questionId, decision, reasoning }),
        });
    }

    score(sessionId: string): Promise<SessionScore> {
        return this.request(`/sessions/${encodeURIComponent(sessionId)}/score`);
    }
}
