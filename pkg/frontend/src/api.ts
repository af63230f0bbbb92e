// Typed client for the /v1 HTTP contract. No other backend is ever
// contacted; every view the console renders is adapted 1:1 from one
// response body here.

import {
  asArr,
  asObj,
  boolOf,
  field,
  numText,
  parseWithRaw,
  RawNode,
  scalarText,
  strOf,
} from "./rawjson.js";
import {
  AcquiredRow,
  CatBar,
  FeatureSpec,
  PredictionView,
  SchemaInfo,
  SessionView,
  SuggestionView,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
    readonly fieldName: string | null = null,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface CreateSessionRequest {
  dataset: string;
  target: string;
  budget: number;
  observed?: Record<string, string | number>;
}

export class Api {
  constructor(
    private readonly base: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  async schemas(): Promise<SchemaInfo[]> {
    const body = await this.request("GET", "/v1/schemas");
    return JSON.parse(body) as SchemaInfo[];
  }

  async createSession(req: CreateSessionRequest): Promise<SessionView> {
    const body = await this.request("POST", "/v1/sessions", req);
    return adaptSession(parseWithRaw(body));
  }

  async getSession(id: string): Promise<SessionView> {
    const body = await this.request("GET", `/v1/sessions/${encodeURIComponent(id)}`);
    return adaptSession(parseWithRaw(body));
  }

  async submitValue(id: string, featureId: string, value: string | number): Promise<SessionView> {
    const body = await this.request(
      "POST",
      `/v1/sessions/${encodeURIComponent(id)}/values`,
      { feature_id: featureId, value },
    );
    return adaptSession(parseWithRaw(body));
  }

  async deleteSession(id: string): Promise<void> {
    await this.request("DELETE", `/v1/sessions/${encodeURIComponent(id)}`);
  }

  private async request(method: string, path: string, payload?: unknown): Promise<string> {
    let resp: Response;
    try {
      resp = await this.fetchFn(this.base + path, {
        method,
        headers: payload === undefined ? undefined : { "content-type": "application/json" },
        body: payload === undefined ? undefined : JSON.stringify(payload),
      });
    } catch (err) {
      throw new ApiError(0, `service unreachable: ${String(err)}`);
    }
    const text = await resp.text();
    if (resp.ok) {
      return text;
    }
    throw toApiError(resp.status, text);
  }
}

function toApiError(status: number, body: string): ApiError {
  let detail: unknown;
  try {
    detail = (JSON.parse(body) as { detail?: unknown }).detail;
  } catch {
    detail = body;
  }
  if (detail && typeof detail === "object" && "message" in detail) {
    const d = detail as { field?: unknown; message?: unknown };
    return new ApiError(
      status,
      String(d.message),
      typeof d.field === "string" ? d.field : null,
    );
  }
  return new ApiError(status, typeof detail === "string" ? detail : body);
}

function adaptPrediction(node: RawNode): PredictionView {
  const kind = strOf(field(node, "type", "prediction"), "prediction.type");
  if (kind === "categorical") {
    const probs: CatBar[] = asArr(field(node, "probs", "prediction"), "prediction.probs").map(
      (bar, i) => ({
        choice: strOf(field(bar, "choice", `probs[${i}]`), `probs[${i}].choice`),
        p: numText(field(bar, "p", `probs[${i}]`), `probs[${i}].p`),
      }),
    );
    return {
      type: "categorical",
      argmax: strOf(field(node, "argmax", "prediction"), "prediction.argmax"),
      probs,
    };
  }
  const curve = field(node, "curve", "prediction");
  return {
    type: "continuous",
    meanRaw: numText(field(node, "mean_raw", "prediction"), "prediction.mean_raw"),
    curveX: asArr(field(curve, "x", "curve"), "curve.x").map((n, i) => numText(n, `curve.x[${i}]`)),
    curveDensity: asArr(field(curve, "density", "curve"), "curve.density").map((n, i) =>
      numText(n, `curve.density[${i}]`),
    ),
  };
}

function adaptSuggestion(node: RawNode): SuggestionView {
  if (boolOf(field(node, "stop", "suggestion"), "suggestion.stop")) {
    return { stop: true, featureId: null, score: null, mi: null, cost: null };
  }
  return {
    stop: false,
    featureId: strOf(field(node, "feature_id", "suggestion"), "suggestion.feature_id"),
    score: numText(field(node, "score", "suggestion"), "suggestion.score"),
    mi: numText(field(node, "mi", "suggestion"), "suggestion.mi"),
    cost: numText(field(node, "cost", "suggestion"), "suggestion.cost"),
  };
}

export function adaptSession(root: RawNode): SessionView {
  const acquired: AcquiredRow[] = asArr(field(root, "acquired", "session"), "acquired").map(
    (row, i) => ({
      featureId: strOf(field(row, "feature_id", `acquired[${i}]`), `acquired[${i}].feature_id`),
      value: scalarText(field(row, "value", `acquired[${i}]`), `acquired[${i}].value`),
      cost: numText(field(row, "cost", `acquired[${i}]`), `acquired[${i}].cost`),
      step: numText(field(row, "step", `acquired[${i}]`), `acquired[${i}].step`),
    }),
  );
  const observed = [...asObj(field(root, "observed", "session"), "observed").entries()].map(
    ([fid, node]) => ({ featureId: fid, value: scalarText(node, `observed.${fid}`) }),
  );
  return {
    sessionId: strOf(field(root, "session_id", "session"), "session_id"),
    dataset: strOf(field(root, "dataset", "session"), "dataset"),
    target: strOf(field(root, "target", "session"), "target"),
    phase: strOf(field(root, "phase", "session"), "phase"),
    budgetInitial: numText(field(root, "budget_initial", "session"), "budget_initial"),
    budgetRemaining: numText(field(root, "budget_remaining", "session"), "budget_remaining"),
    spent: numText(field(root, "spent", "session"), "spent"),
    observed,
    acquired,
    suggestion: adaptSuggestion(field(root, "suggestion", "session")),
    prediction: adaptPrediction(field(root, "prediction", "session")),
  };
}

export function findFeature(schema: SchemaInfo, id: string): FeatureSpec | null {
  for (const f of schema.features) {
    if (f.id === id) return f;
  }
  return null;
}
