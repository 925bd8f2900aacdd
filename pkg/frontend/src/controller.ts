/**
 * Session controller: the single place that issues API mutations and
 * refreshes the three panels from API responses.  The UI is a pure
 * projection — no lens, layout, or move classification is computed here.
 */

import { ApiClient, ApiError } from "./api.js";
import type {
  LayoutResponse,
  LensResponse,
  PathJson,
  SessionDetail,
} from "./api.js";
import { renderProvenance, renderSnapshot } from "./provenance.js";
import { renderSemanticView } from "./semanticView.js";

export interface ControllerPanels {
  semantic: Element;
  provenance: Element;
  status: Element;
}

export class SessionController {
  sessionId = "";
  detail: SessionDetail | null = null;
  lensState: LensResponse | null = null;
  layoutState: LayoutResponse | null = null;
  /** candidate step/branch edges of the current node, cycled with arrows */
  candidates: { edge: string; dst: string }[] = [];
  selectedCandidate = -1;
  replaying = false;
  private inFlight: Promise<unknown> = Promise.resolve();

  constructor(
    private readonly api: ApiClient,
    private readonly panels: ControllerPanels,
  ) {}

  /** Queue a mutation so at most one request is in flight per session. */
  private enqueue<T>(operation: () => Promise<T>): Promise<T> {
    const next = this.inFlight.then(operation, operation);
    this.inFlight = next.catch(() => undefined);
    return next;
  }

  async start(tourId: string, startEntity: string): Promise<void> {
    const summary = await this.api.createSession(tourId, startEntity);
    this.sessionId = summary.session;
    await this.refresh();
  }

  async refresh(): Promise<void> {
    const [detail, lens, layout] = await Promise.all([
      this.api.getSession(this.sessionId),
      this.api.lens(this.sessionId),
      this.api.layout(this.sessionId),
    ]);
    this.detail = detail;
    this.lensState = lens;
    this.layoutState = layout;
    const tour = await this.api.getTour(detail.tour);
    this.candidates = tour.tour_edges
      .filter(([src]) => src === detail.summary.current)
      .map(([, dst, edge]) => ({ edge, dst }))
      .sort((a, b) => a.dst.localeCompare(b.dst));
    this.selectedCandidate = -1;
    this.render();
  }

  private activePath(): PathJson | null {
    const paths = this.detail?.paths ?? [];
    return paths.length > 0 ? paths[paths.length - 1]! : null;
  }

  private render(): void {
    if (this.lensState === null || this.layoutState === null) return;
    renderSemanticView(
      this.panels.semantic,
      this.lensState,
      this.layoutState,
      this.activePath(),
      { onEntityClick: (entity) => void this.navigateTo(entity) },
    );
    if (this.detail !== null) {
      renderProvenance(this.panels.provenance, this.detail, {
        onScrub: (toSeq) => void this.scrub(toSeq),
        onTag: (seq, tag) => void this.tag(seq, tag),
      });
    }
    this.panels.status.textContent = this.detail?.summary.current ?? "";
  }

  /** Click or search selection: classify server-side and move. */
  async navigateTo(entity: string): Promise<void> {
    try {
      await this.enqueue(() => this.api.navigate(this.sessionId, entity));
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.showHint(error.message); // state unchanged
        return;
      }
      throw error;
    }
    await this.refresh();
  }

  /** Arrow keys cycle candidate edges; Enter commits the selection. */
  async handleKey(key: string): Promise<void> {
    if (key === "ArrowDown" || key === "ArrowRight") {
      if (this.candidates.length > 0) {
        this.selectedCandidate =
          (this.selectedCandidate + 1) % this.candidates.length;
      }
    } else if (key === "ArrowUp" || key === "ArrowLeft") {
      if (this.candidates.length > 0) {
        this.selectedCandidate =
          (this.selectedCandidate - 1 + this.candidates.length) %
          this.candidates.length;
      }
    } else if (key === "Enter") {
      const candidate = this.candidates[this.selectedCandidate];
      if (candidate === undefined) return; // nothing selected: no request
      await this.enqueue(() => this.api.step(this.sessionId, candidate.edge));
      await this.refresh();
    }
  }

  /** Replay scrubbing: read-only snapshots, no mutating endpoint. */
  async scrub(toSeq: number): Promise<void> {
    this.replaying = true;
    const { snapshots } = await this.api.replay(this.sessionId, toSeq, toSeq);
    const snapshot = snapshots[snapshots.length - 1];
    if (snapshot !== undefined) {
      renderSnapshot(this.panels.provenance, snapshot);
    }
    this.replaying = false;
  }

  async tag(eventSeq: number, tag: string): Promise<void> {
    await this.enqueue(() => this.api.annotateTask(this.sessionId, eventSeq, tag));
    await this.refresh();
  }

  private showHint(message: string): void {
    this.panels.status.textContent = `⚠ ${message}`;
  }
}
