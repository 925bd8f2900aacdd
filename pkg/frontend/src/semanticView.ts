/**
 * Semantic view: the tour rendered as rows (semantic paths) and columns
 * (navigation order), with focus classes taken verbatim from the lens
 * endpoint and aggregates rendered as stacked cards.
 */

import type { LayoutResponse, LensResponse, PathJson } from "./api.js";

export interface SemanticViewHandlers {
  onEntityClick(entityId: string): void;
}

const FOCUS_CLASSES = ["focused", "near", "context", "blurred"];

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

export function renderBreadcrumbs(root: Element, activePath: PathJson | null): void {
  const strip = el(root, "nav", "breadcrumbs");
  if (activePath === null) return;
  for (const step of activePath.steps) {
    el(strip, "span", "crumb", step).setAttribute("data-entity", step);
  }
}

export function renderSemanticView(
  root: Element,
  lens: LensResponse,
  layout: LayoutResponse,
  activePath: PathJson | null,
  handlers: SemanticViewHandlers,
): void {
  root.textContent = "";
  renderBreadcrumbs(root, activePath);
  const graph = el(root, "div", "semantic-graph");

  const rows = new Map<string, HTMLElement>();
  const rowOf = (rowId: string): HTMLElement => {
    let row = rows.get(rowId);
    if (row === undefined) {
      row = el(graph, "div", "path-row");
      row.setAttribute("data-row", rowId);
      rows.set(rowId, row);
    }
    return row;
  };

  const placed = Object.entries(layout.placements).sort(
    (a, b) => a[1].column - b[1].column || a[0].localeCompare(b[0]),
  );
  for (const [entityId, placement] of placed) {
    const node = el(rowOf(placement.row), "button", "entity-node");
    node.setAttribute("data-entity", entityId);
    node.style.order = String(placement.column);
    node.textContent = entityId;
    const focus = lens.focus[entityId];
    if (focus !== undefined) node.classList.add(`focus-${focus}`);
    if (entityId === lens.current) node.classList.add("current");
    node.addEventListener("click", () => handlers.onEntityClick(entityId));
  }

  for (const aggregate of layout.aggregates) {
    const card = el(graph, "div", "aggregate-card");
    card.setAttribute("data-aggregate", aggregate.id);
    el(
      card,
      "span",
      "aggregate-label",
      `${aggregate.container ?? "?"} (${aggregate.members.length})`,
    );
    card.addEventListener("click", () => {
      // click-to-expand: pin the members as individual nodes in place
      if (card.classList.contains("expanded")) return;
      card.classList.add("expanded");
      for (const member of aggregate.members) {
        const pinned = el(card, "button", "entity-node pinned");
        pinned.setAttribute("data-entity", member);
        pinned.textContent = member;
        const focus = lens.focus[member];
        if (focus !== undefined) pinned.classList.add(`focus-${focus}`);
        pinned.addEventListener("click", (event) => {
          event.stopPropagation();
          handlers.onEntityClick(member);
        });
      }
    });
  }
}

/** The focus class applied to an entity element, if any. */
export function focusClassOf(node: Element): string | null {
  for (const cls of FOCUS_CLASSES) {
    if (node.classList.contains(`focus-${cls}`)) return cls;
  }
  return null;
}
