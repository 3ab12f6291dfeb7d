// Typed client for the gateway API. The UI talks to exactly two endpoints
// (GET /agents, POST /ask) and renders what comes back verbatim.

export interface CandidateView {
  agent_id: string;
  text: string;
  status: "answered" | "fallback" | "timeout" | "error";
  score: number | null;
  latency_ms: number;
}

export interface AskResult {
  query_text: string;
  strategy_kind: string;
  selected_agent: string | null;
  answer_text: string;
  resolved: boolean;
  candidates: CandidateView[];
  total_latency_ms: number;
}

export interface AgentProfile {
  id: string;
  name: string;
  description: string;
  skill_sentences: string[];
  endpoint: string | null;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class GatewayClient {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  setBaseUrl(url: string): void {
    this.baseUrl = url.replace(/\/+$/, "");
  }

  async getAgents(): Promise<AgentProfile[]> {
    const reply = await this.fetchFn(`${this.baseUrl}/agents`);
    if (!reply.ok) throw new Error(`gateway replied ${reply.status}`);
    return (await reply.json()) as AgentProfile[];
  }

  async ask(text: string, strategy: string): Promise<AskResult> {
    const reply = await this.fetchFn(`${this.baseUrl}/ask`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ text, strategy }),
    });
    if (!reply.ok) {
      let detail = `gateway replied ${reply.status}`;
      try {
        const body = (await reply.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body; keep the status message
      }
      throw new Error(detail);
    }
    return (await reply.json()) as AskResult;
  }
}
