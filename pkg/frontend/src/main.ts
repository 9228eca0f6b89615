/** DOM entry point: joins (or resumes) a session and renders each state. */

import { StudyApi } from './api.js';
import { renderState } from './render.js';
import { SessionController } from './session.js';

const SESSION_KEY = 'failscope.session';

function baseUrl(): string {
    const params = new URLSearchParams(window.location.search);
    return params.get('api') ?? 'http://127.0.0.1:8000';
}

async function resumeOrCreate(api: StudyApi): Promise<string> {
    const params = new URLSearchParams(window.location.search);
    const fromUrl = params.get('session');
    if (fromUrl) {
        window.localStorage.setItem(SESSION_KEY, fromUrl);
        return fromUrl;
    }
    const stored = window.localStorage.getItem(SESSION_KEY);
    if (stored) {
        return stored;
    }
    const studyId = params.get('study');
    if (!studyId) {
        throw new Error('open this page with ?study=<id> or ?session=<id>');
    }
    const created = await api.createSession(studyId);
    window.localStorage.setItem(SESSION_KEY, created.session_id);
    return created.session_id;
}

function wire(root: HTMLElement, controller: SessionController): void {
    const redraw = () => {
        root.innerHTML = renderState(controller.state);

        const form = root.querySelector<HTMLFormElement>('#decision-form');
        form?.addEventListener('submit', async (event) => {
            event.preventDefault();
            const decision = form.querySelector<HTMLInputElement>('input[name=decision]:checked');
            const reasoning = form.querySelector<HTMLTextAreaElement>('#reasoning');
            if (!decision) {
                controller.state.validation = 'Pick one of the three options.';
                redraw();
                return;
            }
            await controller.submit(
                decision.value as 'use_ai' | 'not_use_ai' | 'uncertain',
                reasoning?.value ?? '',
            );
            redraw();
        });

        root.querySelector('#acknowledge-guideline')?.addEventListener('click', async () => {
            await controller.acknowledgeGuideline();
            redraw();
        });

        root.querySelector('#dismiss-feedback')?.addEventListener('click', () => {
            controller.dismissFeedback();
            redraw();
        });

        root.querySelector('#retry')?.addEventListener('click', async () => {
            await controller.refresh();
            redraw();
        });
    };
    redraw();
}

export async function start(root: HTMLElement): Promise<SessionController> {
    const api = new StudyApi(baseUrl());
    const sessionId = await resumeOrCreate(api);
    const controller = new SessionController(api, sessionId);
    await controller.refresh();
    wire(root, controller);
    return controller;
}

if (typeof document !== 'undefined') {
    const root = document.getElementById('app');
    if (root) {
        start(root).catch((err) => {
            root.innerHTML = `<div class="error-banner">${String(err)}</div>`;
        });
    }
}
