import { DaemonClient, FetchHttp, StatsClient } from './api';
import { loadDashboard } from './dashboard';
import { ScenarioRunner } from './scenario';

// Entry point: index.html hosts the student runner (served by the local
// daemon), dashboard.html the researcher view (served by the ingestion
// server under /dashboard?study=<id>).

export function boot(): void {
  const scenarioRoot = document.getElementById('scenario');
  if (scenarioRoot) {
    const runner = new ScenarioRunner(new DaemonClient(new FetchHttp()), scenarioRoot);
    void runner.start();
    return;
  }
  const dashboardRoot = document.getElementById('dashboard');
  if (dashboardRoot) {
    const studyId = new URLSearchParams(window.location.search).get('study') ?? '';
    void loadDashboard(dashboardRoot, studyId, new StatsClient(new FetchHttp()));
  }
}

if (typeof document !== 'undefined' && document.readyState !== 'loading') {
  boot();
} else if (typeof document !== 'undefined') {
  document.addEventListener('DOMContentLoaded', boot);
}
