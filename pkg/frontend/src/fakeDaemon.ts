import type { Http } from './api';
import type { ActionView, ScenarioView, StepView } from './types';

// In-memory stand-in for the study daemon, implementing the documented
// /v1/scenario contract for the running-example study: one fixed task, a
// two-task group, a binary choice, and a final survey with one required
// question. Used by tests so the UI is exercised against the same
// semantics the real daemon enforces.

interface StepSpec {
  kind: StepView['kind'];
  taskIds: string[];
  surveyId?: string;
}

const STEPS: StepSpec[] = [
  { kind: 'task', taskIds: ['isEvenNumberProblem'] },
  { kind: 'group', taskIds: ['taskA', 'taskB'] },
  { kind: 'choice', taskIds: ['taskC', 'taskD'] },
  { kind: 'survey', taskIds: [], surveyId: 'final' },
];

export class FakeDaemon implements Http {
  consent: 'pending' | 'granted' | 'declined' = 'pending';
  cursor = 0;
  groupDone = new Set<string>();
  choiceTaken: string | null = null;
  surveyAnswers: Record<string, unknown> | null = null;
  pauses = 0;

  private view(): ScenarioView {
    const finished = this.consent === 'granted' && this.cursor >= STEPS.length;
    let step: StepView | null = null;
    if (this.consent === 'granted' && !finished) {
      const spec = STEPS[this.cursor];
      step = { kind: spec.kind, index: this.cursor };
      if (spec.kind === 'task') {
        step.task = {
          id: spec.taskIds[0],
          description: 'Check whether a number is even.',
          files: ['src/IsEven.kt'],
        };
      } else if (spec.kind === 'group' || spec.kind === 'choice') {
        step.tasks = spec.taskIds.map((id) => ({
          id,
          description: id,
          done: this.groupDone.has(id),
        }));
        step.choice_taken = this.choiceTaken;
      } else if (spec.kind === 'survey') {
        step.survey = {
          id: 'final',
          questions: [
            {
              id: 'q0',
              kind: 'single-choice',
              text: 'How difficult was it?',
              required: true,
              options: ['easy', 'medium', 'hard'],
            },
            {
              id: 'q1',
              kind: 'open-ended',
              text: 'Any comments?',
              required: false,
              options: [],
            },
          ],
        };
      }
    }
    return {
      consent: this.consent,
      cursor: this.cursor,
      finished,
      total_steps: STEPS.length,
      step,
      research: {
        title: 'walkthrough-study',
        description: 'Scenario walk-through study',
        consent_url: 'https://example.org/consent',
      },
      available_actions: this.availableActions(),
    };
  }

  private availableActions(): ActionView[] {
    if (this.consent === 'pending') {
      return [{ kind: 'grant-consent' }, { kind: 'decline-consent' }];
    }
    if (this.consent === 'declined') return [];
    const actions: ActionView[] = [];
    if (this.cursor < STEPS.length) {
      const spec = STEPS[this.cursor];
      if (spec.kind === 'task') {
        actions.push({ kind: 'complete-task', task_id: spec.taskIds[0] });
      } else if (spec.kind === 'group') {
        for (const id of spec.taskIds) {
          if (!this.groupDone.has(id)) actions.push({ kind: 'complete-task', task_id: id });
        }
      } else if (spec.kind === 'choice') {
        if (this.choiceTaken === null) {
          for (const id of spec.taskIds) actions.push({ kind: 'pick-choice', task_id: id });
        } else {
          actions.push({ kind: 'complete-task', task_id: this.choiceTaken });
        }
      } else {
        actions.push({ kind: 'answer-survey' });
      }
    }
    actions.push({ kind: 'pause' }, { kind: 'submit' });
    return actions;
  }

  async get(path: string) {
    if (path === '/v1/scenario') return { status: 200, body: this.view() };
    return { status: 404, body: null };
  }

  async post(path: string, body?: unknown) {
    const doc = (body ?? {}) as { kind?: string; task_id?: string; answers?: Record<string, unknown> };
    if (path === '/v1/scenario/advance') return this.advance(doc);
    if (path === '/v1/survey/final') {
      if (this.consent !== 'granted' || STEPS[this.cursor]?.kind !== 'survey') {
        return { status: 409, body: { detail: 'survey is not the current step' } };
      }
      return this.advance({ kind: 'answer-survey', answers: doc.answers ?? {} });
    }
    return { status: 404, body: null };
  }

  private advance(doc: { kind?: string; task_id?: string; answers?: Record<string, unknown> }) {
    const legal = this.availableActions().some(
      (a) => a.kind === doc.kind && (a.task_id === undefined || a.task_id === doc.task_id),
    );
    if (!legal) return { status: 409, body: { detail: 'illegal action' } };

    switch (doc.kind) {
      case 'grant-consent':
        this.consent = 'granted';
        break;
      case 'decline-consent':
        this.consent = 'declined';
        break;
      case 'pause':
        this.pauses += 1;
        break;
      case 'submit':
        break;
      case 'pick-choice':
        this.choiceTaken = doc.task_id ?? null;
        break;
      case 'complete-task': {
        const spec = STEPS[this.cursor];
        if (spec.kind === 'group') {
          this.groupDone.add(doc.task_id ?? '');
          if (this.groupDone.size === spec.taskIds.length) this.cursor += 1;
        } else {
          this.cursor += 1;
        }
        break;
      }
      case 'answer-survey': {
        const answers = doc.answers ?? {};
        if (!('q0' in answers)) {
          return {
            status: 422,
            body: { detail: { error: 'missing-required-answer', question_id: 'q0' } },
          };
        }
        this.surveyAnswers = answers;
        this.cursor += 1;
        break;
      }
    }
    return { status: 200, body: this.view() };
  }
}
