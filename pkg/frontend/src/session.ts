/** Client-side session flow. The server is authoritative: this controller
 * only mirrors the served phase/item and advances after acknowledged posts.
 */

import {
    ApiError,
    Decision,
    PracticeFeedback,
    Progress,
    ServedItem,
    StudyApi,
} from './api.js';

export interface UiSessionState {
    sessionId: string;
    phase: string; // pretest | teaching | posttest | done
    item: ServedItem | null;
    progress: Progress;
    feedback: PracticeFeedback | null; // pending practice-feedback overlay
    error: string | null; // retry banner text; state is otherwise untouched
    validation: string | null; // inline form validation message
    submitting: boolean;
}

export class SessionController {
    readonly state: UiSessionState;

    constructor(
        private readonly api: StudyApi,
        sessionId: string,
        private readonly requireReasoning = true,
    ) {
        this.state = {
            sessionId,
            phase: 'pretest',
            item: null,
            progress: { position: 0, total: 0 },
            feedback: null,
            error: null,
            validation: null,
            submitting: false,
        };
    }

    /** Pull the current item from the server (also used to resume after a reload). */
    async refresh(): Promise<void> {
        try {
            const next = await this.api.nextItem(this.state.sessionId);
            this.state.phase = next.phase;
            this.state.item = next.item;
            this.state.progress = next.progress;
            this.state.error = null;
        } catch (err) {
            // network failure: show the banner, mutate nothing else
            this.state.error = err instanceof Error ? err.message : String(err);
        }
    }

    get done(): boolean {
        return this.state.phase === 'done';
    }

    /** Answer the currently served question/practice item. */
    async submit(decision: Decision, reasoning: string): Promise<void> {
        const item = this.state.item;
        if (!item || item.kind === 'guideline') {
            return;
        }
        if (this.state.submitting) {
            return; // single active request per session
        }
        if (this.requireReasoning && reasoning.trim() === '') {
            this.state.validation = 'Please explain how you came to your decision.';
            return; // no request is sent
        }
        this.state.validation = null;
        await this.post(item.question_id, decision, reasoning);
    }

    /** Acknowledge the currently served guideline. */
    async acknowledgeGuideline(): Promise<void> {
        const item = this.state.item;
        if (!item || item.kind !== 'guideline' || this.state.submitting) {
            return;
        }
        await this.post(item.guideline_id, 'acknowledged', '');
    }

    /** Dismiss the practice-feedback overlay and show the next item. */
    dismissFeedback(): void {
        this.state.feedback = null;
    }

    private async post(ref: string, decision: Decision, reasoning: string): Promise<void> {
        this.state.submitting = true;
        try {
            const ack = await this.api.submitResponse(this.state.sessionId, ref, decision, reasoning);
            if (ack.feedback) {
                this.state.feedback = ack.feedback;
            }
            await this.refresh();
        } catch (err) {
            if (err instanceof ApiError && (err.code === 'DuplicateResponse' || err.code === 'OutOfOrderResponse')) {
                // someone double-posted or we drifted: the server already
                // holds the truth, so resynchronize instead of erroring
                await this.refresh();
            } else {
                this.state.error = err instanceof Error ? err.message : String(err);
            }
        } finally {
            this.state.submitting = false;
        }
    }
}
