// Pure DOM builders. The UI is a view over gateway responses: the badge is
// exactly selected_agent and the candidate rows mirror the payload's order,
// no client-side re-scoring or sorting.

import type { AskResult, CandidateView } from "./api.js";
import type { ChatTurn } from "./state.js";

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

function formatScore(score: number | null): string {
  return score === null ? "–" : score.toFixed(3);
}

export function maxAgentLatency(result: AskResult): number {
  return result.candidates.reduce((acc, c) => Math.max(acc, c.latency_ms), 0);
}

export function renderCandidateRow(candidate: CandidateView): HTMLElement {
  const row = el("div", `candidate status-${candidate.status}`);
  row.dataset.agent = candidate.agent_id;
  row.append(
    el("span", "candidate-agent", candidate.agent_id),
    el("span", "candidate-status", candidate.status),
    el("span", "candidate-score", formatScore(candidate.score)),
    el("span", "candidate-latency", `${candidate.latency_ms} ms`),
    el("span", "candidate-text", candidate.text),
  );
  return row;
}

export function renderTurn(turn: ChatTurn): HTMLElement {
  const root = el("article", "turn");

  const query = el("div", "bubble query");
  query.append(el("span", "query-text", turn.query));
  root.append(query);

  const answer = el("div", `bubble answer ${turn.result.resolved ? "" : "unresolved"}`.trim());
  const badge = el("span", "agent-badge", turn.result.selected_agent ?? "no agent");
  badge.dataset.agent = turn.result.selected_agent ?? "";
  answer.append(badge, el("span", "answer-text", turn.result.answer_text));

  // The latency trade-off, visible: the whole fan-out vs the slowest agent.
  const latency = el(
    "span",
    "latency-chip",
    `total ${turn.result.total_latency_ms} ms · slowest agent ${maxAgentLatency(turn.result)} ms`,
  );
  answer.append(latency);
  root.append(answer);

  const details = el("details", "candidates");
  details.append(el("summary", undefined, `${turn.result.candidates.length} candidate(s)`));
  for (const candidate of turn.result.candidates) {
    details.append(renderCandidateRow(candidate));
  }
  root.append(details);
  return root;
}

export function renderErrorBubble(message: string): HTMLElement {
  return el("div", "bubble error", message);
}

export function renderNotice(message: string): HTMLElement {
  return el("div", "notice", message);
}
