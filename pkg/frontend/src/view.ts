/** Pure string rendering of the session state.
 *
 * Highlight classes derive solely from the server-sent sentence indices;
 * the client renders the server's own segmentation verbatim and never
 * re-segments the text. Paragraph grouping only locates those sentences
 * inside the raw story to find blank-line boundaries between them.
 */

import type { TaskPayload } from "./api.js";
import type { SessionState } from "./controller.js";

export type HighlightClass = "none" | "error" | "contradicted";

export interface SentenceView {
  index: number;
  text: string;
  highlight: HighlightClass;
}

export interface TaskView {
  paragraphs: SentenceView[][];
  explanation: string;
}

export function buildTaskView(task: TaskPayload): TaskView {
  const errorSet = new Set(task.error_indices);
  const contradictedSet = new Set(task.contradicted_indices);
  const paragraphs: SentenceView[][] = [];
  let current: SentenceView[] = [];
  let cursor = 0;
  task.sentences.forEach((text, index) => {
    const at = task.story.indexOf(text, cursor);
    if (index > 0 && at > cursor) {
      const gap = task.story.slice(cursor, at);
      if (gap.includes("\n\n")) {
        paragraphs.push(current);
        current = [];
      }
    }
    if (at >= 0) {
      cursor = at + text.length;
    }
    const highlight: HighlightClass = errorSet.has(index)
      ? "error"
      : contradictedSet.has(index)
        ? "contradicted"
        : "none";
    current.push({ index, text, highlight });
  });
  if (current.length > 0) {
    paragraphs.push(current);
  }
  return { paragraphs, explanation: task.explanation };
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function render(state: SessionState): string {
  const parts = [renderHeader(state)];
  if (state.banner !== null) {
    parts.push(renderBanner(state.banner));
  }
  if (state.notice !== null) {
    parts.push(`<div class="notice">${escapeHtml(state.notice)}</div>`);
  }
  switch (state.phase) {
    case "idle":
      break;
    case "loading":
      parts.push(`<div class="status">loading next task…</div>`);
      break;
    case "submitting":
      parts.push(`<div class="status">saving vote…</div>`);
      break;
    case "complete":
      parts.push(renderComplete(state));
      break;
    case "reviewing":
      if (state.task) {
        parts.push(renderTask(state.task));
      }
      break;
  }
  return parts.join("\n");
}

function renderHeader(state: SessionState): string {
  const chips = [
    `<span class="chip">annotator: ${escapeHtml(state.annotator)}</span>`,
    `<span class="chip">recorded this session: ${state.acknowledged}</span>`,
  ];
  if (state.progress) {
    chips.push(
      `<span class="chip">accepted ${state.progress.accepted}</span>`,
      `<span class="chip">rejected ${state.progress.rejected}</span>`,
      `<span class="chip">pending ${state.progress.pending}</span>`,
    );
  }
  return `<header class="session">${chips.join(" ")}</header>`;
}

function renderBanner(message: string): string {
  return (
    `<div class="banner" role="alert">${escapeHtml(message)} ` +
    `<button type="button" data-action="retry">retry</button></div>`
  );
}

function renderComplete(state: SessionState): string {
  return (
    `<section class="complete"><h2>all tasks reviewed</h2>` +
    `<p>votes recorded this session: ${state.acknowledged}</p></section>`
  );
}

function renderTask(task: TaskPayload): string {
  const view = buildTaskView(task);
  const paragraphs = view.paragraphs
    .map(
      (sentences) =>
        `<p>${sentences.map(renderSentence).join(" ")}</p>`,
    )
    .join("\n");
  return [
    `<section class="task" data-task-id="${escapeHtml(task.task_id)}">`,
    `<div class="legend">` +
      `<span class="sent error">introduces the error</span> ` +
      `<span class="sent contradicted">contradicted earlier</span></div>`,
    `<article class="story">${paragraphs}</article>`,
    `<section class="explanation"><h3>why this may be an error</h3>` +
      `<p>${escapeHtml(view.explanation)}</p></section>`,
    renderControls(),
    `</section>`,
  ].join("\n");
}

function renderSentence(sentence: SentenceView): string {
  const cls =
    sentence.highlight === "none" ? "sent" : `sent ${sentence.highlight}`;
  return `<span class="${cls}" data-index="${sentence.index}">${escapeHtml(
    sentence.text,
  )}</span>`;
}

function renderControls(): string {
  return (
    `<div class="controls">` +
    `<button type="button" data-action="vote" data-verdict="legitimate">` +
    `legitimate <kbd>y</kbd></button>` +
    `<button type="button" data-action="vote" data-verdict="not_legitimate">` +
    `not legitimate <kbd>n</kbd></button>` +
    `<button type="button" data-action="vote" data-verdict="unsure">` +
    `unsure <kbd>u</kbd></button>` +
    `</div>`
  );
}
