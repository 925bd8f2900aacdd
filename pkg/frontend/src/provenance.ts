/**
 * Provenance panel: the session log as a timeline grouped by semantic
 * path, a replay slider that scrubs snapshots through POST /replay,
 * and task-tag badges.
 */

import type { EventJson, PathJson, SessionDetail, SnapshotJson } from "./api.js";

export interface ProvenanceHandlers {
  /** Scrub the replay slider to a log position (inclusive). */
  onScrub(toSeq: number): void;
  onTag(eventSeq: number, tag: string): void;
}

const NAV_KINDS = new Set(["init", "step", "branch", "detour"]);

function el(
  root: Element,
  tag: string,
  className: string,
  text?: string,
): HTMLElement {
  const node = root.ownerDocument.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  root.appendChild(node);
  return node;
}

function eventLabel(event: EventJson): string {
  const target = event.payload["dst"] ?? event.payload["entity"];
  return target === undefined ? event.kind : `${event.kind} → ${target}`;
}

/** Tags recorded in the log itself, keyed by the annotated event seq. */
export function tagsFromLog(log: EventJson[]): Map<number, string> {
  const tags = new Map<number, string>();
  for (const event of log) {
    if (event.kind === "annotate_task") {
      tags.set(event.payload["event"] as number, event.payload["tag"] as string);
    }
  }
  return tags;
}

export function renderProvenance(
  root: Element,
  detail: SessionDetail,
  handlers: ProvenanceHandlers,
): void {
  root.textContent = "";
  const panel = el(root, "aside", "provenance-panel");
  const tags = tagsFromLog(detail.log);

  // timeline grouped by path: a nav event that opens a new path starts
  // a new group (branch/detour), init starts the first one
  let group: HTMLElement | null = null;
  let pathIndex = -1;
  for (const event of detail.log) {
    if (NAV_KINDS.has(event.kind) && event.kind !== "step") {
      pathIndex += 1;
      group = el(panel, "ol", "path-group");
      const path: PathJson | undefined = detail.paths[pathIndex];
      group.setAttribute("data-path", path?.id ?? `path${pathIndex}`);
    }
    const row = el(group ?? panel, "li", `event event-${event.kind}`);
    row.setAttribute("data-seq", String(event.seq));
    el(row, "span", "event-label", eventLabel(event));
    const tag = tags.get(event.seq);
    if (tag !== undefined) el(row, "span", "tag-badge", tag);
    const tagButton = el(row, "button", "tag-action", "tag");
    tagButton.addEventListener("click", () => {
      const picker = row.querySelector("select.tag-picker");
      const value = picker instanceof HTMLSelectElement ? picker.value : "T7";
      handlers.onTag(event.seq, value);
    });
    const picker = el(row, "select", "tag-picker") as HTMLSelectElement;
    for (let i = 1; i <= 9; i++) {
      const option = root.ownerDocument.createElement("option");
      option.value = option.textContent = `T${i}`;
      picker.appendChild(option);
    }
  }

  const maxSeq = detail.log.length - 1;
  const slider = el(panel, "input", "replay-slider") as HTMLInputElement;
  slider.type = "range";
  slider.min = "0";
  slider.max = String(maxSeq);
  slider.value = String(maxSeq);
  slider.addEventListener("input", () => {
    const to = Number(slider.value);
    if (to >= 0 && to <= maxSeq) handlers.onScrub(to); // out of range: disabled
  });
}

export function renderSnapshot(root: Element, snapshot: SnapshotJson): void {
  let overlay = root.querySelector(".replay-overlay");
  if (overlay === null) {
    overlay = el(root, "div", "replay-overlay");
  }
  overlay.textContent = "";
  overlay.setAttribute("data-after-seq", String(snapshot.after_seq));
  el(overlay as HTMLElement, "span", "replay-current", snapshot.current ?? "");
  const visited = el(overlay as HTMLElement, "ul", "replay-visited");
  for (const entity of snapshot.visited_entities) {
    el(visited, "li", "replay-visited-entity", entity);
  }
}
