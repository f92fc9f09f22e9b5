/** Thin fetch wrapper over the twinner API; every mutation goes through here. */

import type {
  AgentSummary,
  ChatReply,
  MetricsReport,
  ScenarioCounts,
  StepResult,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public error: string,
    public detail: string,
  ) {
    super(`${error}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private token: string | null = null,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const response = await this.fetchFn(this.baseUrl + path, {
      method,
      headers,
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    const payload = await response.json().catch(() => ({}));
    if (!response.ok) {
      throw new ApiError(
        response.status,
        payload.error ?? `HTTP ${response.status}`,
        payload.detail ?? "",
      );
    }
    return payload as T;
  }

  health(): Promise<{ status: string; scenario_loaded: boolean }> {
    return this.request("GET", "/api/health");
  }

  loadScenario(config: unknown): Promise<ScenarioCounts> {
    return this.request("POST", "/api/scenario", config);
  }

  listAgents(filters: { kind?: string; role?: string } = {}): Promise<AgentSummary[]> {
    const params = new URLSearchParams();
    if (filters.kind) params.set("kind", filters.kind);
    if (filters.role) params.set("role", filters.role);
    const query = params.toString();
    return this.request("GET", `/api/agents${query ? `?${query}` : ""}`);
  }

  getAgent(agentId: number): Promise<AgentSummary> {
    return this.request("GET", `/api/agents/${agentId}`);
  }

  chat(agentId: number, message: string): Promise<ChatReply> {
    return this.request("POST", `/api/agents/${agentId}/chat`, { message });
  }

  step(days: number): Promise<StepResult> {
    return this.request("POST", "/api/sim/step", { days });
  }

  metrics(): Promise<MetricsReport> {
    return this.request("GET", "/api/metrics");
  }
}
