import {
  CompileResponse,
  EditOp,
  GenerateResponse,
  Graph,
  VocabResponse,
} from "./types.js";

export class ServiceError extends Error {
  constructor(
    message: string,
    public status: number,
    public violations: string[] = [],
  ) {
    super(message);
  }
}

async function parseError(res: Response): Promise<ServiceError> {
  let violations: string[] = [];
  let detail = `${res.status} ${res.statusText}`;
  try {
    const body = await res.json();
    if (Array.isArray(body.violations)) {
      violations = body.violations;
      detail = violations.join("; ");
    } else if (body.detail) {
      detail = JSON.stringify(body.detail);
    }
  } catch {
    // non-JSON error body: keep the status line
  }
  return new ServiceError(detail, res.status, violations);
}

export class ServiceClient {
  constructor(private baseUrl: string) {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const res = await fetch(this.baseUrl + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) throw await parseError(res);
    return (await res.json()) as T;
  }

  private async get<T>(path: string): Promise<T> {
    const res = await fetch(this.baseUrl + path);
    if (!res.ok) throw await parseError(res);
    return (await res.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.get("/health");
  }

  vocab(): Promise<VocabResponse> {
    return this.get("/vocab");
  }

  compile(graph: Graph, budget?: number): Promise<CompileResponse> {
    return this.post("/compile", budget === undefined ? { graph } : { graph, budget });
  }

  edit(graph: Graph, ops: EditOp[]): Promise<{ graph: Graph }> {
    return this.post("/edit", { graph, ops });
  }

  generate(
    graph: Graph,
    seed: number,
    temperature?: number,
    topK?: number,
  ): Promise<GenerateResponse> {
    const body: Record<string, unknown> = { graph, seed };
    if (temperature !== undefined) body.temperature = temperature;
    if (topK !== undefined) body.top_k = topK;
    return this.post("/generate", body);
  }
}
