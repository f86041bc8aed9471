import { ApiError, DaemonClient } from './api';
import type { QuestionView, ScenarioView, StepView } from './types';

// Student-facing scenario runner. Renders the daemon's scenario view into
// a container and drives it action by action; the daemon remains the only
// authority on what is legal next.

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class ScenarioRunner {
  private view: ScenarioView | null = null;
  private error = '';

  constructor(
    private readonly client: DaemonClient,
    private readonly root: HTMLElement,
  ) {}

  async start(): Promise<void> {
    this.view = await this.client.scenario();
    this.render();
  }

  private async dispatch(action: () => Promise<ScenarioView>): Promise<void> {
    try {
      this.view = await action();
      this.error = '';
    } catch (err) {
      if (err instanceof ApiError) {
        const detail = err.detail as { detail?: { error?: string; question_id?: string } };
        if (detail?.detail?.error === 'missing-required-answer') {
          this.error = `Please answer the required question (${detail.detail.question_id}).`;
        } else {
          this.error = 'That action is not available right now.';
        }
      } else {
        this.error = 'The study client is not reachable.';
      }
    }
    this.render();
  }

  private render(): void {
    const view = this.view;
    this.root.replaceChildren();
    if (!view) return;

    const header = el('header');
    header.append(el('h1', 'title', view.research.title));
    if (view.consent === 'granted' && !view.finished) {
      header.append(
        el('p', 'progress', `Step ${view.cursor + 1} of ${view.total_steps}`),
      );
    }
    this.root.append(header);

    if (this.error) {
      const banner = el('p', 'error', this.error);
      banner.setAttribute('role', 'alert');
      this.root.append(banner);
    }

    if (view.consent === 'pending') {
      this.renderConsent(view);
    } else if (view.consent === 'declined') {
      this.root.append(el('p', 'farewell', 'Thanks anyway — nothing was recorded.'));
    } else if (view.finished) {
      this.root.append(el('p', 'farewell', 'All done. Thank you for participating!'));
    } else if (view.step) {
      this.renderStep(view.step);
      this.renderSessionControls(view);
    }
  }

  private renderConsent(view: ScenarioView): void {
    const section = el('section', 'consent');
    section.append(el('p', 'description', view.research.description));
    if (view.research.consent_url) {
      const link = el('a', 'consent-link', 'Read the consent form');
      link.href = view.research.consent_url;
      section.append(link);
    }
    section.append(
      this.button('I consent', 'consent-grant', () =>
        this.dispatch(() => this.client.advance({ kind: 'grant-consent' })),
      ),
      this.button('I do not consent', 'consent-decline', () =>
        this.dispatch(() => this.client.advance({ kind: 'decline-consent' })),
      ),
    );
    this.root.append(section);
  }

  private renderStep(step: StepView): void {
    const section = el('section', `step step-${step.kind}`);
    if (step.kind === 'task' && step.task) {
      section.append(el('h2', 'task-title', step.task.id));
      section.append(el('p', 'task-description', step.task.description));
      for (const file of step.task.files ?? []) {
        section.append(el('code', 'task-file', file));
      }
      section.append(
        this.button('Mark task complete', 'task-complete', () =>
          this.dispatch(() =>
            this.client.advance({ kind: 'complete-task', task_id: step.task!.id }),
          ),
        ),
      );
    } else if (step.kind === 'group' && step.tasks) {
      section.append(el('h2', undefined, 'Complete these tasks in any order'));
      for (const task of step.tasks) {
        const row = el('div', task.done ? 'group-task done' : 'group-task');
        row.append(el('span', 'task-title', task.id));
        if (!task.done) {
          row.append(
            this.button('Complete', `complete-${task.id}`, () =>
              this.dispatch(() =>
                this.client.advance({ kind: 'complete-task', task_id: task.id }),
              ),
            ),
          );
        }
        section.append(row);
      }
    } else if (step.kind === 'choice' && step.tasks) {
      const picked = step.choice_taken;
      section.append(
        el('h2', undefined, picked ? 'Finish your chosen task' : 'Pick one task'),
      );
      for (const task of step.tasks) {
        if (picked && task.id !== picked) continue;
        const row = el('div', 'choice-task');
        row.append(el('span', 'task-title', task.id));
        row.append(
          picked
            ? this.button('Complete', `complete-${task.id}`, () =>
                this.dispatch(() =>
                  this.client.advance({ kind: 'complete-task', task_id: task.id }),
                ),
              )
            : this.button('Choose', `pick-${task.id}`, () =>
                this.dispatch(() =>
                  this.client.advance({ kind: 'pick-choice', task_id: task.id }),
                ),
              ),
        );
        section.append(row);
      }
    } else if (step.kind === 'survey' && step.survey) {
      this.renderSurvey(section, step.survey.id, step.survey.questions);
    } else if (step.kind === 'info') {
      section.append(el('p', 'info-text', step.text ?? ''));
      section.append(
        this.button('Continue', 'acknowledge', () =>
          this.dispatch(() => this.client.advance({ kind: 'acknowledge' })),
        ),
      );
    }
    this.root.append(section);
  }

  private renderSurvey(section: HTMLElement, surveyId: string, questions: QuestionView[]): void {
    section.append(el('h2', undefined, 'A few questions before you finish'));
    const form = el('form', 'survey-form');
    form.id = `survey-${surveyId}`;
    for (const question of questions) {
      const block = el('fieldset', question.required ? 'question required' : 'question');
      block.dataset.questionId = question.id;
      block.append(el('legend', undefined,
        question.required ? `${question.text} *` : question.text));
      if (question.kind === 'open-ended') {
        const input = el('textarea');
        input.name = question.id;
        block.append(input);
      } else {
        const type = question.kind === 'single-choice' ? 'radio' : 'checkbox';
        for (const option of question.options) {
          const label = el('label', 'option');
          const input = el('input');
          input.type = type;
          input.name = question.id;
          input.value = option;
          label.append(input, document.createTextNode(option));
          block.append(label);
        }
      }
      form.append(block);
    }
    form.append(
      this.button('Submit answers', 'survey-submit', () =>
        this.dispatch(() =>
          this.client.answerSurvey(surveyId, collectAnswers(form, questions)),
        ),
      ),
    );
    section.append(form);
  }

  private renderSessionControls(view: ScenarioView): void {
    const kinds = new Set(view.available_actions.map((a) => a.kind));
    const controls = el('footer', 'session-controls');
    if (kinds.has('pause')) {
      controls.append(
        this.button('Pause & sync', 'pause', () =>
          this.dispatch(() => this.client.advance({ kind: 'pause' })),
        ),
      );
    }
    this.root.append(controls);
  }

  private button(label: string, id: string, onClick: () => void): HTMLButtonElement {
    const node = el('button', undefined, label);
    node.type = 'button';
    node.dataset.action = id;
    node.addEventListener('click', onClick);
    return node;
  }
}

export function collectAnswers(
  form: HTMLFormElement,
  questions: QuestionView[],
): Record<string, unknown> {
  const answers: Record<string, unknown> = {};
  for (const question of questions) {
    if (question.kind === 'open-ended') {
      const input = form.querySelector<HTMLTextAreaElement>(
        `textarea[name="${question.id}"]`,
      );
      const value = input?.value.trim() ?? '';
      if (value) answers[question.id] = value;
    } else if (question.kind === 'single-choice') {
      const picked = form.querySelector<HTMLInputElement>(
        `input[name="${question.id}"]:checked`,
      );
      if (picked) answers[question.id] = picked.value;
    } else {
      const picked = [...form.querySelectorAll<HTMLInputElement>(
        `input[name="${question.id}"]:checked`,
      )].map((input) => input.value);
      if (picked.length) answers[question.id] = picked;
    }
  }
  return answers;
}
