import { describe, expect, it } from 'vitest';

import type { PracticeFeedback, ServedGuideline, ServedQuestion } from '../src/api.js';
import {
    escapeHtml,
    renderCompletion,
    renderErrorBanner,
    renderFeedbackOverlay,
    renderGuideline,
    renderProgress,
    renderQuestion,
    renderState,
} from '../src/render.js';
import type { UiSessionState } from '../src/session.js';

const QUESTION: ServedQuestion = {
    kind: 'question',
    question_id: 'q1',
    text: 'What is 1/2 + 1/3?',
    choices: ['5/6', '2/5', '1/6', '3/5'],
    subject: 'fractions',
};

function state(partial: Partial<UiSessionState>): UiSessionState {
    return {
        sessionId: 's1',
        phase: 'pretest',
        item: QUESTION,
        progress: { position: 3, total: 20 },
        feedback: null,
        error: null,
        validation: null,
        submitting: false,
        ...partial,
    };
}

describe('escapeHtml', () => {
    it('escapes markup-significant characters', () => {
        expect(escapeHtml('<a b="c">&\'')).toBe('&lt;a b=&quot;c&quot;&gt;&amp;&#39;');
    });
});

describe('renderQuestion', () => {
    it('shows three decision controls and a required reasoning box', () => {
        const html = renderQuestion(QUESTION, 'pretest', null);
        expect(html).toContain('value="use_ai"');
        expect(html).toContain('value="not_use_ai"');
        expect(html).toContain('value="uncertain"');
        expect((html.match(/type="radio"/g) ?? []).length).toBe(3);
        expect(html).toContain('<textarea id="reasoning"');
        expect(html).toContain('Explain how you came to your decision');
    });

    it('escapes question text', () => {
        const html = renderQuestion({ ...QUESTION, text: '<script>alert(1)</script>' }, 'pretest', null);
        expect(html).not.toContain('<script>alert');
        expect(html).toContain('&lt;script&gt;');
    });

    it('renders inline validation without touching the form', () => {
        const html = renderQuestion(QUESTION, 'pretest', 'Please explain.');
        expect(html).toContain('class="validation"');
        expect(html).toContain('Please explain.');
    });

    it('marks practice questions', () => {
        const html = renderQuestion({ ...QUESTION, kind: 'practice' }, 'teaching', null);
        expect(html).toContain('practice-note');
    });
});

describe('renderGuideline', () => {
    it('shows the guideline and a continue control', () => {
        const guideline: ServedGuideline = {
            kind: 'guideline',
            guideline_id: 'guideline-0',
            text: 'Do not use the LLM for fraction arithmetic.',
        };
        const html = renderGuideline(guideline);
        expect(html).toContain('Do not use the LLM for fraction arithmetic.');
        expect(html).toContain('id="acknowledge-guideline"');
    });
});

describe('renderFeedbackOverlay', () => {
    const feedback: PracticeFeedback = {
        outcome: 'incorrect',
        expected: 'not_use_ai',
        guideline: 'Do not use the LLM for fraction arithmetic.',
        message: 'Incorrect. Remember this guideline: Do not use the LLM for fraction arithmetic.',
    };

    it('renders an overlay dialog with the guideline', () => {
        const html = renderFeedbackOverlay(feedback);
        expect(html).toContain('role="dialog"');
        expect(html).toContain('feedback-incorrect');
        expect(html).toContain('id="dismiss-feedback"');
        expect(html).toContain('Do not use the LLM for fraction arithmetic.');
    });
});

describe('renderState', () => {
    it('composes progress + current screen', () => {
        const html = renderState(state({}));
        expect(html).toContain('role="progressbar"');
        expect(html).toContain('data-question-id="q1"');
    });

    it('renders completion when done', () => {
        const html = renderState(state({ phase: 'done', item: null }));
        expect(html).toContain('Your responses have been recorded');
    });

    it('renders a retry banner on error without dropping the screen', () => {
        const html = renderState(state({ error: 'network down' }));
        expect(html).toContain('network down');
        expect(html).toContain('id="retry"');
        expect(html).toContain('data-question-id="q1"');
    });

    it('keeps the feedback overlay above the next item', () => {
        const html = renderState(state({
            feedback: {
                outcome: 'correct', expected: 'use_ai', guideline: null, message: 'Correct.',
            },
        }));
        expect(html).toContain('overlay');
        expect(html.indexOf('data-question-id')).toBeLessThan(html.indexOf('overlay-panel'));
    });

    it('progress bar reflects the counters', () => {
        const html = renderProgress({ position: 10, total: 20 });
        expect(html).toContain('aria-valuenow="50"');
        expect(html).toContain('10 / 20');
    });

    it('renderCompletion and renderErrorBanner are standalone screens', () => {
        expect(renderCompletion()).toContain('completion-screen');
        expect(renderErrorBanner('boom')).toContain('boom');
    });
});
