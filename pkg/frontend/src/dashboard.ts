import { StatsClient } from './api';
import type { RankedEvent, StudySummary } from './types';

// Researcher dashboard: summary tiles, a top-events bar chart, and a
// focus-time table, all derived from one study summary document.

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

const TILES: Array<[keyof StudySummary, string]> = [
  ['participants', 'Participants'],
  ['activities', 'Activity events'],
  ['snapshots', 'Code snapshots'],
  ['hotkeys', 'Hotkeys'],
  ['run_debug', 'Run / debug'],
];

export function renderSummaryTiles(summary: StudySummary): HTMLElement {
  const grid = el('div', 'tiles');
  for (const [key, label] of TILES) {
    const tile = el('div', 'tile');
    tile.dataset.metric = key;
    tile.append(
      el('span', 'tile-value', String(summary[key])),
      el('span', 'tile-label', label),
    );
    grid.append(tile);
  }
  return grid;
}

export function renderBarChart(title: string, entries: RankedEvent[]): HTMLElement {
  const chart = el('section', 'chart');
  chart.append(el('h2', undefined, title));
  const max = entries.reduce((acc, entry) => Math.max(acc, entry.count), 0);
  for (const entry of entries) {
    const row = el('div', 'bar-row');
    row.dataset.eventId = entry.event_id;
    row.dataset.count = String(entry.count);
    const bar = el('div', 'bar');
    bar.style.width = max ? `${(entry.count / max) * 100}%` : '0%';
    row.append(el('span', 'bar-label', entry.event_id), bar,
               el('span', 'bar-count', String(entry.count)));
    chart.append(row);
  }
  if (!entries.length) chart.append(el('p', 'empty', 'No events yet.'));
  return chart;
}

export function renderFocusTable(focusTime: Record<string, number>): HTMLElement {
  const section = el('section', 'focus');
  section.append(el('h2', undefined, 'Focus time by file'));
  const table = el('table', 'focus-table');
  const head = el('tr');
  head.append(el('th', undefined, 'File'), el('th', undefined, 'Time (s)'));
  table.append(head);
  const files = Object.keys(focusTime).sort(
    (a, b) => focusTime[b] - focusTime[a] || a.localeCompare(b),
  );
  for (const file of files) {
    const row = el('tr');
    row.dataset.file = file;
    row.append(
      el('td', 'focus-file', file),
      el('td', 'focus-ms', (focusTime[file] / 1000).toFixed(1)),
    );
    table.append(row);
  }
  section.append(table);
  return section;
}

export function renderDashboard(root: HTMLElement, studyId: string,
                                summary: StudySummary): void {
  root.replaceChildren();
  root.append(el('h1', undefined, `Study: ${studyId}`));
  root.append(renderSummaryTiles(summary));
  root.append(renderBarChart('Top actions', summary.top_actions));
  root.append(renderBarChart('Top hotkeys', summary.top_hotkeys));
  root.append(renderFocusTable(summary.focus_time_by_file));
}

export async function loadDashboard(
  root: HTMLElement,
  studyId: string,
  client: StatsClient,
): Promise<void> {
  try {
    renderDashboard(root, studyId, await client.studySummary(studyId));
  } catch {
    root.replaceChildren(el('p', 'error', `Could not load study ${studyId}.`));
  }
}
