// Session console wiring: one in-flight command at a time, every click is
// exactly one API call followed by a state re-fetch.

import { ApiClient, ApiError, ContractInfo, SessionState } from "./api.js";
import { LifecycleLog, buildSessionView, highlightsFor } from "./model.js";
import {
  renderClauses,
  renderError,
  renderEventButtons,
  renderFaqAnswer,
  renderFaqList,
  renderLifecycle,
  renderStatePanel,
  renderTrace,
} from "./ui.js";

const DEFAULT_CONFIG = {
  start_date: [1, 15, 2025] as [number, number, number],
  monthly_payment: 500,
  invoice_day: 1,
  termination_date: [1, 1, 2027] as [number, number, number],
  grace_days: 10,
  account_id: "afa",
};

class Console {
  private client: ApiClient;
  private sessionId: string | null = null;
  private info: ContractInfo | null = null;
  private pending = false;
  private lifecycle = new LifecycleLog();
  private highlighted = new Set<string>();

  constructor(baseUrl: string) {
    this.client = new ApiClient(baseUrl);
  }

  async start(contractId: string): Promise<void> {
    this.info = await this.client.contractInfo(contractId);
    const created = await this.client.startSession(contractId, DEFAULT_CONFIG);
    this.sessionId = created.session_id;
    this.lifecycle = new LifecycleLog();
    this.highlighted = new Set();
    renderFaqList(this.info, false, (id) => this.askFaq(id));
    renderClauses(this.info, this.highlighted);
    renderFaqAnswer(null);
    await this.refresh();
  }

  private async refresh(): Promise<void> {
    if (!this.sessionId) return;
    const state = await this.client.getState(this.sessionId);
    this.show(state);
  }

  private show(state: SessionState): void {
    const view = buildSessionView(state);
    this.lifecycle.observe(view.status);
    renderStatePanel(view);
    renderEventButtons(
      view,
      this.pending,
      () => this.command(() => this.client.advance(this.sessionId!)),
      (name, arity) => {
        const event = arity === 0 ? name : `${name}(${prompt(`${name} argument:`) ?? ""})`;
        void this.command(() => this.client.sendEvent(this.sessionId!, event));
      },
    );
    renderLifecycle(this.lifecycle);
  }

  private async command(run: () => Promise<SessionState>): Promise<void> {
    if (this.pending || !this.sessionId) return;
    this.pending = true;
    renderError(null);
    try {
      const state = await run();
      this.show(state);
      renderTrace(await this.client.getTrace(this.sessionId));
    } catch (error) {
      if (error instanceof ApiError) {
        renderError(`${error.code}: ${error.message}`);
      } else {
        renderError(String(error));
      }
    } finally {
      this.pending = false;
      await this.refresh();
    }
  }

  private async askFaq(faqId: string): Promise<void> {
    if (!this.sessionId || !this.info) return;
    try {
      const answer = await this.client.askFaq(this.sessionId, faqId);
      renderFaqAnswer(answer);
      this.highlighted = highlightsFor(
        answer,
        this.info.clauses.map((c) => c.id),
      ).highlighted;
      renderClauses(this.info, this.highlighted);
    } catch (error) {
      renderError(error instanceof ApiError ? `${error.code}: ${error.message}` : String(error));
    }
  }
}

function baseUrl(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("api") ?? "http://127.0.0.1:8000";
}

const app = new Console(baseUrl());
document.getElementById("start-button")?.addEventListener("click", () => {
  void app.start("apa-ref").catch((error) => renderError(String(error)));
});
