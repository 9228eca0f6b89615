/** Pure HTML-string renderers for every screen; no DOM access here. */

import { PracticeFeedback, ServedGuideline, ServedQuestion, Progress } from './api.js';
import { UiSessionState } from './session.js';

export function escapeHtml(value: string): string {
    return value
        .replace(/&/g, '&amp;')
        .replace(/</g, '&lt;')
        .replace(/>/g, '&gt;')
        .replace(/"/g, '&quot;')
        .replace(/'/g, '&#39;');
}

const PHASE_TITLES: Record<string, string> = {
    pretest: 'Part 1: before teaching',
    teaching: 'Part 2: learn the guidelines',
    posttest: 'Part 3: after teaching',
};

const DECISIONS: Array<{ value: string; label: string }> = [
    { value: 'use_ai', label: 'I would use the AI for this question' },
    { value: 'not_use_ai', label: 'I would not use the AI for this question' },
    { value: 'uncertain', label: 'Uncertain / no guideline applies' },
];

export function renderProgress(progress: Progress): string {
    const pct = progress.total ? Math.round((100 * progress.position) / progress.total) : 0;
    return `<div class="progress" role="progressbar" aria-valuenow="${pct}">
  <div class="progress-bar" style="width:${pct}%"></div>
  <span class="progress-text">${progress.position} / ${progress.total}</span>
</div>`;
}

export function renderQuestion(item: ServedQuestion, phase: string, validation: string | null): string {
    const title = PHASE_TITLES[phase] ?? phase;
    const choices = item.choices.length
        ? `<ol class="choices">${item.choices.map((c) => `<li>${escapeHtml(c)}</li>`).join('')}</ol>`
        : '';
    const note = item.kind === 'practice'
        ? '<p class="practice-note">Practice question: you will see feedback after answering.</p>'
        : '';
    const validationHtml = validation
        ? `<p class="validation" role="alert">${escapeHtml(validation)}</p>`
        : '';
    return `<section class="screen question-screen" data-question-id="${escapeHtml(item.question_id)}">
  <h2>${escapeHtml(title)}</h2>
  ${note}
  <p class="question-text">${escapeHtml(item.text)}</p>
  ${choices}
  <form id="decision-form">
    <fieldset>
      <legend>Would you use the AI's answer for this question?</legend>
      ${DECISIONS.map(
          (d) => `<label class="decision"><input type="radio" name="decision" value="${d.value}"><span>${escapeHtml(d.label)}</span></label>`,
      ).join('\n      ')}
    </fieldset>
    <label class="reasoning-label" for="reasoning">Explain how you came to your decision</label>
    <textarea id="reasoning" name="reasoning" rows="3" required></textarea>
    ${validationHtml}
    <button type="submit" id="submit-response">Submit answer</button>
  </form>
</section>`;
}

export function renderGuideline(item: ServedGuideline): string {
    return `<section class="screen guideline-screen" data-guideline-id="${escapeHtml(item.guideline_id)}">
  <h2>${escapeHtml(PHASE_TITLES.teaching ?? 'teaching')}</h2>
  <p class="guideline-text">${escapeHtml(item.text)}</p>
  <button type="button" id="acknowledge-guideline">Got it, continue</button>
</section>`;
}

export function renderFeedbackOverlay(feedback: PracticeFeedback): string {
    const cls = feedback.outcome === 'correct' ? 'feedback-correct' : 'feedback-incorrect';
    const guideline = feedback.guideline
        ? `<p class="feedback-guideline">${escapeHtml(feedback.guideline)}</p>`
        : '';
    return `<div class="overlay" role="dialog" aria-modal="true">
  <div class="overlay-panel ${cls}">
    <h3>${feedback.outcome === 'correct' ? 'Correct' : 'Incorrect'}</h3>
    <p class="feedback-message">${escapeHtml(feedback.message)}</p>
    ${guideline}
    <button type="button" id="dismiss-feedback">Continue</button>
  </div>
</div>`;
}

export function renderCompletion(): string {
    return `<section class="screen completion-screen">
  <h2>All done</h2>
  <p>Thank you! Your responses have been recorded.</p>
</section>`;
}

export function renderErrorBanner(message: string): string {
    return `<div class="error-banner" role="alert">
  <span>${escapeHtml(message)}</span>
  <button type="button" id="retry">Retry</button>
</div>`;
}

export function renderState(state: UiSessionState): string {
    const parts: string[] = [];
    if (state.error) {
        parts.push(renderErrorBanner(state.error));
    }
    parts.push(renderProgress(state.progress));
    if (state.phase === 'done') {
        parts.push(renderCompletion());
    } else if (state.item?.kind === 'guideline') {
        parts.push(renderGuideline(state.item));
    } else if (state.item) {
        parts.push(renderQuestion(state.item, state.phase, state.validation));
    }
    if (state.feedback) {
        parts.push(renderFeedbackOverlay(state.feedback));
    }
    return parts.join('\n');
}
