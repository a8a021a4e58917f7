import type {
  RefineRequest,
  RefineResponseJson,
  RuleInfoJson,
  SessionJson,
  SpecDraft,
  VerifyResponseJson,
} from "./types";

/**
 * Non-2xx responses. `detail` is whatever the server put under "detail":
 * a plain string for 400/404/409, and the rejected-step payload (with
 * obligations) for 422.
 */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(typeof detail === "string" ? detail : `request failed with ${status}`);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class QbcClient {
  private fetchFn: FetchLike;

  constructor(
    readonly base: string,
    fetchFn?: FetchLike,
  ) {
    // bind so `this` inside the host fetch stays the global scope
    this.fetchFn = fetchFn ?? ((input, init) => globalThis.fetch(input, init));
  }

  private async req(method: string, path: string, body?: unknown): Promise<unknown> {
    const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
    if (body !== undefined) init.body = JSON.stringify(body);
    const resp = await this.fetchFn(this.base + path, init);
    if (!resp.ok) {
      let detail: unknown = resp.statusText;
      try {
        detail = ((await resp.json()) as { detail?: unknown }).detail ?? detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, detail);
    }
    return resp.json();
  }

  async createSession(spec: SpecDraft): Promise<SessionJson> {
    return (await this.req("POST", "/session", spec)) as SessionJson;
  }

  async getSession(id: string): Promise<SessionJson> {
    return (await this.req("GET", `/session/${id}`)) as SessionJson;
  }

  async refine(id: string, step: RefineRequest): Promise<RefineResponseJson> {
    return (await this.req("POST", `/session/${id}/refine`, step)) as RefineResponseJson;
  }

  async undo(id: string): Promise<SessionJson> {
    return (await this.req("POST", `/session/${id}/undo`, {})) as SessionJson;
  }

  async verify(id: string): Promise<VerifyResponseJson> {
    return (await this.req("POST", `/session/${id}/verify`, {})) as VerifyResponseJson;
  }

  /** The replayable .qbc script, as plain text. */
  async script(id: string): Promise<string> {
    const resp = await this.fetchFn(`${this.base}/session/${id}/script`, { method: "GET" });
    if (!resp.ok) throw new ApiError(resp.status, resp.statusText);
    return resp.text();
  }

  async rules(): Promise<RuleInfoJson[]> {
    const out = (await this.req("GET", "/rules")) as { rules: RuleInfoJson[] };
    return out.rules;
  }

  async examples(): Promise<string[]> {
    const out = (await this.req("GET", "/examples")) as { examples: string[] };
    return out.examples;
  }

  async fromExample(name: string): Promise<SessionJson> {
    return (await this.req("POST", `/session/from-example/${name}`)) as SessionJson;
  }

  async limits(): Promise<{ dim_cap: number }> {
    return (await this.req("GET", "/limits")) as { dim_cap: number };
  }
}
