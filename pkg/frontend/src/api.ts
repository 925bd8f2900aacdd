/**
 * Typed client for the tour service HTTP API.
 *
 * The UI never computes lens levels, layout positions, or move
 * classification itself; every such value comes from these endpoints.
 */

export interface StateSummary {
  session: string;
  current: string;
  lens_digest: string;
  path_count: number;
  seq: number;
}

export interface NavigateResult extends StateSummary {
  move: "step" | "branch" | "detour";
}

export interface ClassifyResult {
  move: "step" | "branch" | "detour";
  edge: string | null;
}

export type FocusName = "focused" | "near" | "context" | "blurred";

export interface LensResponse {
  current: string;
  digest: string;
  focus: Record<string, FocusName>;
}

export interface Placement {
  row: string;
  column: number;
}

export interface AggregateJson {
  id: string;
  members: string[];
  container: string | null;
  relation: string;
  column: number;
}

export interface LayoutResponse {
  placements: Record<string, Placement>;
  aggregates: AggregateJson[];
}

export interface EventJson {
  seq: number;
  ts: number;
  kind: string;
  payload: Record<string, unknown>;
}

export interface PathJson {
  id: string;
  steps: string[];
  origin: string;
}

export interface SessionDetail {
  summary: StateSummary;
  tour: string;
  log: EventJson[];
  paths: PathJson[];
}

export interface SnapshotJson {
  after_seq: number;
  current: string | null;
  visited_entities: string[];
  visited_edges: string[];
  paths: PathJson[];
}

export interface TourJson {
  id: string;
  graph_id: string;
  members: string[];
  tour_edges: [string, string, string][];
  seed: string | [string, number];
}

export interface UnitJson {
  id: string;
  label: string;
  span: [number, number];
  children: UnitJson[];
}

export interface DocumentJson {
  id: string;
  title: string;
  kind: string;
  text: string;
  units: UnitJson[];
}

export interface EntityJson {
  id: string;
  label: string;
  kind: string;
  source: string;
  attributes: Record<string, string>;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

type FetchFn = typeof fetch;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchFn = fetch,
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json();
    if (!response.ok) {
      throw new ApiError(
        response.status,
        payload.code ?? "Unknown",
        payload.message ?? response.statusText,
      );
    }
    return payload as T;
  }

  seedTourFromEntity(entity: string, radius = 1): Promise<{ tours: TourJson[] }> {
    return this.request("POST", "/tours/seed", { entity, radius });
  }

  seedTourFromDocument(document: string): Promise<{ tours: TourJson[] }> {
    return this.request("POST", "/tours/seed", { document });
  }

  getTour(tourId: string): Promise<TourJson> {
    return this.request("GET", `/tours/${encodeURIComponent(tourId)}`);
  }

  createSession(tour: string, start: string): Promise<StateSummary> {
    return this.request("POST", "/sessions", { tour, start });
  }

  getSession(sessionId: string): Promise<SessionDetail> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  classify(sessionId: string, entity: string): Promise<ClassifyResult> {
    return this.request(
      "GET",
      `/sessions/${sessionId}/classify?entity=${encodeURIComponent(entity)}`,
    );
  }

  navigate(sessionId: string, entity: string): Promise<NavigateResult> {
    return this.request("POST", `/sessions/${sessionId}/navigate`, { entity });
  }

  step(sessionId: string, edge: string): Promise<StateSummary> {
    return this.request("POST", `/sessions/${sessionId}/step`, { edge });
  }

  branch(sessionId: string, edge: string): Promise<StateSummary> {
    return this.request("POST", `/sessions/${sessionId}/branch`, { edge });
  }

  detour(sessionId: string, entity: string): Promise<StateSummary> {
    return this.request("POST", `/sessions/${sessionId}/detour`, { entity });
  }

  replay(
    sessionId: string,
    fromSeq: number,
    toSeq: number,
  ): Promise<{ snapshots: SnapshotJson[] }> {
    return this.request("POST", `/sessions/${sessionId}/replay`, {
      from_seq: fromSeq,
      to_seq: toSeq,
    });
  }

  lens(sessionId: string): Promise<LensResponse> {
    return this.request("GET", `/sessions/${sessionId}/lens`);
  }

  layout(sessionId: string, threshold = 3): Promise<LayoutResponse> {
    return this.request(
      "GET",
      `/sessions/${sessionId}/layout?threshold=${threshold}`,
    );
  }

  addTacitEdge(
    sessionId: string,
    src: string,
    dst: string,
    rel: string,
    interpretation?: string,
  ): Promise<StateSummary & { edge: string }> {
    return this.request("POST", `/sessions/${sessionId}/edges`, {
      src,
      dst,
      rel,
      interpretation: interpretation ?? null,
    });
  }

  addEntityFromSpan(
    sessionId: string,
    document: string,
    span: [number, number],
  ): Promise<StateSummary & { entity: string }> {
    return this.request("POST", `/sessions/${sessionId}/entities`, {
      document,
      span,
    });
  }

  annotateTask(
    sessionId: string,
    event: number,
    tag: string,
  ): Promise<StateSummary & { event: number; tag: string }> {
    return this.request("POST", `/sessions/${sessionId}/tasks`, { event, tag });
  }

  getDocument(documentId: string): Promise<DocumentJson> {
    return this.request("GET", `/documents/${encodeURIComponent(documentId)}`);
  }

  searchEntities(graphId: string, query: string): Promise<{ entities: EntityJson[] }> {
    return this.request(
      "GET",
      `/graphs/${graphId}/entities?q=${encodeURIComponent(query)}`,
    );
  }
}
