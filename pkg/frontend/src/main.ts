/**
 * Browser entry point: wires the panels to a session over the API.
 *
 * Query parameters: ?api=<base url>&tour=<tour id>&start=<entity id>,
 * or ?api=…&document=<doc id> to seed tours from a document first.
 */

import { ApiClient } from "./api.js";
import { SessionController } from "./controller.js";

export async function bootstrap(root: HTMLElement): Promise<SessionController> {
  const params = new URLSearchParams(root.ownerDocument.location.search);
  const api = new ApiClient(params.get("api") ?? "http://127.0.0.1:8080");

  const doc = root.ownerDocument;
  const status = doc.createElement("header");
  status.className = "status-bar";
  const semantic = doc.createElement("main");
  semantic.className = "semantic-panel";
  const provenance = doc.createElement("aside");
  provenance.className = "provenance-host";
  root.append(status, semantic, provenance);

  const controller = new SessionController(api, { semantic, provenance, status });

  let tourId = params.get("tour");
  let start = params.get("start");
  const documentId = params.get("document");
  if (tourId === null && documentId !== null) {
    const { tours } = await api.seedTourFromDocument(documentId);
    const first = tours[0];
    if (first === undefined) throw new Error("document seeded no tours");
    tourId = first.id;
    start = start ?? [...first.members].sort()[0] ?? null;
  }
  if (tourId === null || start === null) {
    throw new Error("need ?tour=&start= or ?document=");
  }

  await controller.start(tourId, start);
  root.addEventListener("keydown", (event) => {
    void controller.handleKey((event as KeyboardEvent).key);
  });
  return controller;
}
