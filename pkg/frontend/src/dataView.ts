/**
 * Data view: the raw document with span highlighting, a proportional
 * unit (icicle) strip, and an optional word-cloud tab.
 */

import type { DocumentJson, UnitJson } from "./api.js";

export interface Highlight {
  span: [number, number];
  cls: string;
}

export type DataViewTab = "text" | "units" | "cloud";

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

function renderTextTab(
  root: Element,
  doc: DocumentJson,
  highlights: Highlight[],
): void {
  const pre = el(root, "pre", "document-text");
  const sorted = [...highlights].sort((a, b) => a.span[0] - b.span[0]);
  let cursor = 0;
  for (const { span, cls } of sorted) {
    const [start, end] = span;
    if (start < cursor) continue; // overlapping highlight: keep the first
    if (start > cursor) {
      pre.appendChild(
        root.ownerDocument.createTextNode(doc.text.slice(cursor, start)),
      );
    }
    const mark = el(pre, "mark", `span-highlight ${cls}`.trim());
    mark.textContent = doc.text.slice(start, end);
    mark.setAttribute("data-span", `${start}:${end}`);
    cursor = end;
  }
  pre.appendChild(root.ownerDocument.createTextNode(doc.text.slice(cursor)));
}

function renderUnit(root: Element, unit: UnitJson, textLength: number): void {
  const width = ((unit.span[1] - unit.span[0]) / textLength) * 100;
  const box = el(root, "div", "unit-box");
  box.setAttribute("data-unit", unit.id);
  box.style.width = `${width.toFixed(2)}%`;
  el(box, "span", "unit-label", unit.label);
  if (unit.children.length > 0) {
    const children = el(box, "div", "unit-children");
    for (const child of unit.children) renderUnit(children, child, textLength);
  }
}

function renderUnitsTab(root: Element, doc: DocumentJson): void {
  const strip = el(root, "div", "unit-strip");
  const total = Math.max(doc.text.length, 1);
  for (const unit of doc.units) renderUnit(strip, unit, total);
}

/** Word frequencies over alphabetic tokens of length >= 4. */
export function wordFrequencies(text: string, limit = 30): [string, number][] {
  const counts = new Map<string, number>();
  for (const match of text.matchAll(/[A-Za-zÄÖÜäöüß]{4,}/g)) {
    const word = match[0];
    counts.set(word, (counts.get(word) ?? 0) + 1);
  }
  return [...counts.entries()]
    .sort((a, b) => b[1] - a[1] || a[0].localeCompare(b[0]))
    .slice(0, limit);
}

function renderCloudTab(root: Element, doc: DocumentJson): void {
  const cloud = el(root, "div", "word-cloud");
  const frequencies = wordFrequencies(doc.text);
  const top = frequencies[0]?.[1] ?? 1;
  for (const [word, count] of frequencies) {
    const item = el(cloud, "span", "cloud-word", word);
    item.setAttribute("data-count", String(count));
    item.style.fontSize = `${(10 + (count / top) * 18).toFixed(1)}px`;
  }
}

export function renderDataView(
  root: Element,
  doc: DocumentJson,
  highlights: Highlight[],
  tab: DataViewTab = "text",
): void {
  root.textContent = "";
  const view = el(root, "section", "data-view");
  view.setAttribute("data-document", doc.id);
  view.setAttribute("data-tab", tab);
  el(view, "h2", "document-title", doc.title);
  if (tab === "text") renderTextTab(view, doc, highlights);
  else if (tab === "units") renderUnitsTab(view, doc);
  else renderCloudTab(view, doc);
}
