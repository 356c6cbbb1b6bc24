// Pure view-model layer. Everything shown in the panel is read from the
// service's state JSON; nothing about contract semantics is computed here.

import type { FaqAnswer, SessionState } from "./api.js";

export const STATUSES = [
  "active",
  "invoiced",
  "payment_pending",
  "overdue",
  "terminated",
] as const;

export interface EventButton {
  name: string;
  arity: number;
  // the tick event is rendered as the dedicated Advance Time button
  internal: boolean;
}

export interface SessionView {
  sessionId: string;
  status: string;
  month: number | null;
  day: number | null;
  year: number | null;
  balance: number | null;
  pendingWithdrawal: number | null;
  historyLen: number;
  buttons: EventButton[];
  terminated: boolean;
}

function singleRow(state: SessionState, pred: string): Array<string | number> | null {
  const rows = state.facts[pred];
  return rows && rows.length === 1 ? rows[0] : null;
}

export function buildSessionView(state: SessionState): SessionView {
  const today = singleRow(state, "today");
  const balance = singleRow(state, "current_balance");
  const pending = singleRow(state, "pending_withdrawal");
  const scale = state.display_scale > 0 ? state.display_scale : 1;
  const buttons = state.events.map((spec) => {
    const [name, arity] = spec.split("/");
    return {
      name,
      arity: Number(arity),
      internal: name === "advance_time",
    };
  });
  return {
    sessionId: state.session_id,
    status: state.status,
    month: today ? Number(today[0]) : null,
    day: today ? Number(today[1]) : null,
    year: today ? Number(today[2]) : null,
    balance: balance ? Number(balance[1]) / scale : null,
    pendingWithdrawal: pending ? Number(pending[1]) / scale : null,
    historyLen: state.history_len,
    buttons,
    terminated: state.status === "terminated",
  };
}

// Lifecycle diagram: nodes are the five statuses, edges accumulate from the
// transitions this session has actually shown us.
export class LifecycleLog {
  readonly edges = new Set<string>();
  private last: string | null = null;

  observe(status: string): void {
    if (this.last !== null && this.last !== status) {
      this.edges.add(`${this.last}->${status}`);
    }
    this.last = status;
  }

  edgeList(): Array<[string, string]> {
    return [...this.edges].sort().map((edge) => {
      const [from, to] = edge.split("->");
      return [from, to];
    });
  }

  current(): string | null {
    return this.last;
  }
}

export interface ClauseHighlights {
  highlighted: Set<string>;
}

export function highlightsFor(answer: FaqAnswer, knownClauseIds: string[]): ClauseHighlights {
  const known = new Set(knownClauseIds);
  const highlighted = new Set<string>();
  for (const id of answer.clause_links) {
    if (known.has(id)) highlighted.add(id);
  }
  return { highlighted };
}

export function formatHeadline(view: SessionView): string {
  const month = view.month === null ? "?" : String(view.month);
  const balance = view.balance === null ? "?" : String(view.balance);
  const pending = view.pendingWithdrawal === null ? "?" : String(view.pendingWithdrawal);
  return `Current Month: ${month}  Current Balance: ${balance}  Pending Withdrawal: ${pending}`;
}
