// DOM rendering only; no contract logic. Each function projects a piece of
// the view-model into a container element.

import type { ContractInfo, FaqAnswer } from "./api.js";
import { LifecycleLog, STATUSES, SessionView } from "./model.js";

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

export function renderStatePanel(view: SessionView): void {
  el("status-value").textContent = view.status;
  el("month-value").textContent = view.month === null ? "-" : `${view.month}/${view.year}`;
  el("balance-value").textContent = view.balance === null ? "-" : String(view.balance);
  el("pending-value").textContent =
    view.pendingWithdrawal === null ? "-" : String(view.pendingWithdrawal);
  el("history-value").textContent = String(view.historyLen);
}

export function renderEventButtons(
  view: SessionView,
  pending: boolean,
  onAdvance: () => void,
  onEvent: (name: string, arity: number) => void,
): void {
  const bar = el("event-buttons");
  bar.textContent = "";
  const advance = document.createElement("button");
  advance.textContent = "Advance Time";
  advance.disabled = pending || view.terminated;
  advance.onclick = onAdvance;
  bar.appendChild(advance);
  for (const button of view.buttons) {
    if (button.internal) continue;
    const node = document.createElement("button");
    node.textContent = button.name.replaceAll("_", " ");
    node.dataset.event = button.name;
    node.disabled = pending || view.terminated;
    node.onclick = () => onEvent(button.name, button.arity);
    bar.appendChild(node);
  }
}

export function renderLifecycle(log: LifecycleLog): void {
  const box = el("lifecycle");
  box.textContent = "";
  const current = log.current();
  for (const status of STATUSES) {
    const node = document.createElement("span");
    node.className = "node" + (status === current ? " current" : "");
    node.textContent = status;
    box.appendChild(node);
  }
  const edges = document.createElement("div");
  edges.className = "edges";
  edges.textContent = log
    .edgeList()
    .map(([from, to]) => `${from} → ${to}`)
    .join(", ");
  box.appendChild(edges);
}

export function renderFaqList(
  info: ContractInfo,
  pending: boolean,
  onAsk: (id: string) => void,
): void {
  const list = el("faq-list");
  list.textContent = "";
  for (const faq of info.faqs) {
    const node = document.createElement("button");
    node.className = "faq";
    node.dataset.faq = faq.id;
    node.textContent = `Ask ${faq.question}`;
    node.disabled = pending;
    node.onclick = () => onAsk(faq.id);
    list.appendChild(node);
  }
}

export function renderFaqAnswer(answer: FaqAnswer | null): void {
  const box = el("faq-answer");
  box.textContent = "";
  if (!answer) return;
  const question = document.createElement("div");
  question.className = "question";
  question.textContent = answer.question;
  box.appendChild(question);
  for (const line of answer.lines) {
    const node = document.createElement("div");
    node.className = "answer-line";
    node.textContent = line;
    box.appendChild(node);
  }
}

export function renderClauses(info: ContractInfo, highlighted: Set<string>): void {
  const box = el("clauses");
  box.textContent = "";
  for (const clause of info.clauses) {
    const node = document.createElement("div");
    node.className = "clause" + (highlighted.has(clause.id) ? " highlight" : "");
    node.dataset.clause = clause.id;
    const tag = document.createElement("span");
    tag.className = "clause-id";
    tag.textContent = clause.id;
    node.appendChild(tag);
    node.appendChild(document.createTextNode(" " + clause.text));
    box.appendChild(node);
  }
}

export function renderTrace(text: string): void {
  el("trace").textContent = text;
}

export function renderError(message: string | null): void {
  const box = el("error");
  box.textContent = message ?? "";
  box.style.display = message ? "block" : "none";
}
