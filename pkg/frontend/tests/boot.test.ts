import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { boot } from "../src/main.js";
import { QR_FIXTURE } from "./render.test";

const SCAFFOLD = `
  <div id="app">
    <header>
      <span id="agent-count"></span>
      <select id="strategy"></select>
      <input id="base-url" type="url">
    </header>
    <main id="log"></main>
    <form id="composer">
      <input id="query" type="text">
      <button id="send" type="submit">Send</button>
    </form>
  </div>
`;

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

async function settle(): Promise<void> {
  // let queued promise callbacks (fetch then-chains) run
  for (let i = 0; i < 6; i += 1) await Promise.resolve();
}

describe("boot wiring", () => {
  beforeEach(() => {
    document.body.innerHTML = SCAFFOLD;
  });

  afterEach(() => {
    vi.unstubAllGlobals();
  });

  it("disables submit for empty input and while a request is in flight", async () => {
    vi.stubGlobal("fetch", vi.fn(async () => jsonResponse([])));
    boot(document.getElementById("app")!);
    const input = document.getElementById("query") as HTMLInputElement;
    const send = document.getElementById("send") as HTMLButtonElement;

    expect(send.disabled).toBe(true);
    input.value = "hello";
    input.dispatchEvent(new Event("input"));
    expect(send.disabled).toBe(false);
  });

  it("appends a turn on success and clears the input", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn(async (url: string) =>
        url.endsWith("/agents") ? jsonResponse([]) : jsonResponse(QR_FIXTURE),
      ),
    );
    boot(document.getElementById("app")!);
    const input = document.getElementById("query") as HTMLInputElement;
    input.value = "warm friday?";
    input.dispatchEvent(new Event("input"));
    document.getElementById("composer")!.dispatchEvent(new Event("submit"));
    await settle();

    const log = document.getElementById("log")!;
    expect(log.querySelectorAll(".turn").length).toBe(1);
    expect(log.querySelector(".agent-badge")!.textContent).toBe("google");
    expect(input.value).toBe("");
  });

  it("gateway failure appends an error bubble, keeps the input, adds no turn", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn(async (url: string) => {
        if (url.endsWith("/agents")) return jsonResponse([]);
        throw new TypeError("fetch failed");
      }),
    );
    boot(document.getElementById("app")!);
    const input = document.getElementById("query") as HTMLInputElement;
    input.value = "warm friday?";
    input.dispatchEvent(new Event("input"));
    document.getElementById("composer")!.dispatchEvent(new Event("submit"));
    await settle();

    const log = document.getElementById("log")!;
    expect(log.querySelectorAll(".turn").length).toBe(0);
    expect(log.querySelector(".bubble.error")!.textContent).toContain("fetch failed");
    expect(input.value).toBe("warm friday?");
  });

  it("strategy selector carries into the request body", async () => {
    const bodies: Array<{ strategy?: string }> = [];
    vi.stubGlobal(
      "fetch",
      vi.fn(async (url: string, init?: RequestInit) => {
        if (url.endsWith("/agents")) return jsonResponse([]);
        bodies.push(JSON.parse(String(init?.body)));
        return jsonResponse(QR_FIXTURE);
      }),
    );
    boot(document.getElementById("app")!);
    const select = document.getElementById("strategy") as HTMLSelectElement;
    select.value = "qa-descriptions";
    select.dispatchEvent(new Event("change"));

    const input = document.getElementById("query") as HTMLInputElement;
    input.value = "warm friday?";
    input.dispatchEvent(new Event("input"));
    document.getElementById("composer")!.dispatchEvent(new Event("submit"));
    await settle();

    expect(bodies[0].strategy).toBe("qa-descriptions");
  });
});
