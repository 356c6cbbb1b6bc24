// Typed client for the contract engine service. Every method maps to one
// endpoint; errors surface with the engine's own error code.

export type FactRows = Record<string, Array<Array<string | number>>>;

export interface SessionState {
  status: string;
  facts: FactRows;
  history_len: number;
  session_id: string;
  contract_id: string;
  events: string[];
  display_scale: number;
}

export interface ContractInfo {
  contract_id: string;
  events: string[];
  clauses: Array<{ id: string; text: string }>;
  faqs: Array<{ id: string; question: string }>;
}

export interface FaqAnswer {
  faq_id: string;
  question: string;
  lines: string[];
  clause_links: string[];
  empty: boolean;
}

export interface SimConfig {
  start_date: [number, number, number];
  monthly_payment: number;
  invoice_day: number;
  termination_date: [number, number, number];
  grace_days?: number;
  account_id?: string;
}

export class ApiError extends Error {
  constructor(
    public code: string,
    message: string,
    public detail?: unknown,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    if (!response.ok) {
      let code = `http_${response.status}`;
      let message = text;
      let detail: unknown;
      try {
        const data = JSON.parse(text);
        code = data.code ?? code;
        message = data.message ?? message;
        detail = data.detail;
      } catch {
        // non-JSON error body: keep the raw text
      }
      throw new ApiError(code, message, detail);
    }
    return (text ? JSON.parse(text) : undefined) as T;
  }

  contractInfo(contractId: string): Promise<ContractInfo> {
    return this.request("GET", `/contracts/${contractId}`);
  }

  startSession(contractId: string, config: SimConfig): Promise<{ session_id: string }> {
    return this.request("POST", "/sessions", { contract_id: contractId, config });
  }

  getState(sessionId: string): Promise<SessionState> {
    return this.request("GET", `/sessions/${sessionId}/state`);
  }

  advance(sessionId: string): Promise<SessionState> {
    return this.request("POST", `/sessions/${sessionId}/advance`);
  }

  sendEvent(sessionId: string, event: string): Promise<SessionState> {
    return this.request("POST", `/sessions/${sessionId}/events`, { event });
  }

  askFaq(sessionId: string, faqId: string): Promise<FaqAnswer> {
    return this.request("POST", `/sessions/${sessionId}/faq/${faqId}`);
  }

  async getTrace(sessionId: string): Promise<string> {
    const response = await this.fetchImpl(`${this.baseUrl}/sessions/${sessionId}/trace`);
    return response.text();
  }
}
