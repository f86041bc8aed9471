// JSON payload shapes of the two HTTP APIs this UI consumes:
// the local study-client daemon and the ingestion server.

export type ConsentState = 'pending' | 'granted' | 'declined';

export interface TaskView {
  id: string;
  description: string;
  files?: string[];
  done?: boolean;
}

export interface QuestionView {
  id: string;
  kind: 'single-choice' | 'multiple-choice' | 'open-ended';
  text: string;
  required: boolean;
  options: string[];
}

export interface SurveyView {
  id: string;
  questions: QuestionView[];
}

export interface StepView {
  kind: 'task' | 'group' | 'choice' | 'survey' | 'info';
  index: number;
  task?: TaskView;
  tasks?: TaskView[];
  choice_taken?: string | null;
  survey?: SurveyView;
  text?: string;
}

export interface ActionView {
  kind: string;
  task_id?: string;
}

export interface ScenarioView {
  consent: ConsentState;
  cursor: number;
  finished: boolean;
  total_steps: number;
  step: StepView | null;
  research: {
    title: string;
    description: string;
    consent_url: string;
  };
  available_actions: ActionView[];
}

export interface RankedEvent {
  event_id: string;
  count: number;
}

export interface StudySummary {
  participants: number;
  activities: number;
  actions: number;
  run_debug: number;
  hotkeys: number;
  ui: number;
  snapshots: number;
  events_by_category: Record<string, number>;
  top_actions: RankedEvent[];
  top_hotkeys: RankedEvent[];
  focus_time_by_file: Record<string, number>;
}
