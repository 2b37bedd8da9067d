import type {
  Batch,
  Metrics,
  ProjectInfo,
  SubmitResult,
  TrainResult,
  WireAddedBox,
  WireDecision,
} from "./types.js";

/** Error body of every non-2xx response: `{code, message}` plus the
 * HTTP status. Network failures use status 0 / code "network". */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

const defaultFetch: FetchLike = (input, init) =>
  globalThis.fetch(input, init);

/** Typed client for the annotation service. One method per endpoint;
 * no caching, no retries — callers own both. */
export class Client {
  constructor(
    readonly base: string,
    private readonly fetchFn: FetchLike = defaultFetch,
  ) {
    this.base = base.replace(/\/+$/, "");
  }

  private async request<T>(method: string, path: string, init?: RequestInit): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchFn(`${this.base}${path}`, { method, ...init });
    } catch (err) {
      throw new ApiError(0, "network", err instanceof Error ? err.message : String(err));
    }
    if (!resp.ok) {
      let code = "error";
      let message = `${resp.status} ${resp.statusText}`;
      try {
        const body = (await resp.json()) as { code?: string; message?: string };
        if (body.code) code = body.code;
        if (body.message) message = body.message;
      } catch {
        // non-JSON error body; keep the status line
      }
      throw new ApiError(resp.status, code, message);
    }
    return (await resp.json()) as T;
  }

  private json<T>(method: string, path: string, body: unknown): Promise<T> {
    return this.request<T>(method, path, {
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  createProject(body: Record<string, unknown>): Promise<ProjectInfo> {
    return this.json<ProjectInfo>("POST", "/projects", body);
  }

  getProject(id: string): Promise<ProjectInfo> {
    return this.request<ProjectInfo>("GET", `/projects/${id}`);
  }

  uploadScenes(id: string, files: { name: string; blob: Blob }[]): Promise<{ added: number }> {
    const form = new FormData();
    for (const f of files) form.append("files", f.blob, f.name);
    return this.request<{ added: number }>("POST", `/projects/${id}/data`, { body: form });
  }

  select(id: string): Promise<Batch> {
    return this.request<Batch>("POST", `/projects/${id}/select`);
  }

  submitLabels(
    id: string,
    batchId: string,
    decisions: WireDecision[],
    addedBoxes: WireAddedBox[],
  ): Promise<SubmitResult> {
    return this.json<SubmitResult>("POST", `/projects/${id}/labels`, {
      batch_id: batchId,
      decisions,
      added_boxes: addedBoxes,
    });
  }

  train(id: string): Promise<TrainResult> {
    return this.request<TrainResult>("POST", `/projects/${id}/train`);
  }

  metrics(id: string): Promise<Metrics> {
    return this.request<Metrics>("GET", `/projects/${id}/metrics`);
  }

  imageUrl(id: string, imageId: string): string {
    return `${this.base}/projects/${id}/images/${imageId}`;
  }
}
