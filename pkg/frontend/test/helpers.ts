import { JSDOM } from "jsdom";

/** Panels host DOM used by the controller tests. */
export function makePanels() {
  const dom = new JSDOM(
    "<!doctype html><html><body>" +
      '<header id="status"></header>' +
      '<main id="semantic"></main>' +
      '<aside id="provenance"></aside>' +
      "</body></html>",
  );
  const doc = dom.window.document;
  return {
    dom,
    panels: {
      status: doc.getElementById("status")!,
      semantic: doc.getElementById("semantic")!,
      provenance: doc.getElementById("provenance")!,
    },
  };
}

/** Poll until the condition holds (UI handlers are fire-and-forget). */
export async function until(
  condition: () => boolean,
  timeoutMs = 5000,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!condition()) {
    if (Date.now() > deadline) throw new Error("condition never satisfied");
    await new Promise((done) => setTimeout(done, 20));
  }
}

export interface RecordedCall {
  method: string;
  url: string;
  body: string | null;
}

/** Pass-through fetch wrapper that records every request. */
export function recordingFetch(calls: RecordedCall[]): typeof fetch {
  return (input, init) => {
    calls.push({
      method: init?.method ?? "GET",
      url: String(input),
      body: typeof init?.body === "string" ? init.body : null,
    });
    return fetch(input, init);
  };
}

const MUTATING = /\/(navigate|step|branch|detour|edges|entities|tasks|sessions|seed|build|corpora)$/;

export function isMutating(call: RecordedCall): boolean {
  return call.method === "POST" && MUTATING.test(new URL(call.url).pathname);
}
