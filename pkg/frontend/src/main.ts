import { GatewayClient } from "./api.js";
import { renderErrorBubble, renderNotice, renderTurn } from "./render.js";
import { Session, STRATEGIES } from "./state.js";

function defaultBaseUrl(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  if (fromQuery) return fromQuery;
  // Served by the gateway under /ui -> same origin.
  return window.location.origin;
}

export function boot(root: HTMLElement): void {
  const session = new Session();
  const client = new GatewayClient(defaultBaseUrl());

  const log = root.querySelector<HTMLElement>("#log")!;
  const form = root.querySelector<HTMLFormElement>("#composer")!;
  const input = root.querySelector<HTMLInputElement>("#query")!;
  const submit = root.querySelector<HTMLButtonElement>("#send")!;
  const strategySelect = root.querySelector<HTMLSelectElement>("#strategy")!;
  const baseUrlInput = root.querySelector<HTMLInputElement>("#base-url")!;
  const agentCount = root.querySelector<HTMLElement>("#agent-count")!;

  baseUrlInput.value = defaultBaseUrl();
  baseUrlInput.addEventListener("change", () => {
    client.setBaseUrl(baseUrlInput.value);
    void refreshAgents();
  });

  for (const kind of STRATEGIES) {
    const option = document.createElement("option");
    option.value = kind;
    option.textContent = kind;
    strategySelect.append(option);
  }
  strategySelect.value = session.strategy;
  strategySelect.addEventListener("change", () => {
    const outcome = session.switchStrategy(strategySelect.value);
    strategySelect.value = outcome.strategy;
    if (outcome.notice) log.append(renderNotice(outcome.notice));
  });

  function syncSubmit(): void {
    submit.disabled = !session.canSubmit(input.value);
  }
  input.addEventListener("input", syncSubmit);
  syncSubmit();

  async function refreshAgents(): Promise<void> {
    try {
      const agents = await client.getAgents();
      agentCount.textContent = `${agents.length} agents`;
    } catch {
      agentCount.textContent = "gateway unreachable";
    }
  }
  void refreshAgents();

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const text = input.value;
    if (!session.canSubmit(text)) return;
    session.inFlight = true;
    syncSubmit();
    client
      .ask(text, session.strategy)
      .then((result) => {
        const turn = session.pushTurn(text, result);
        log.append(renderTurn(turn));
        input.value = ""; // consumed only on success
      })
      .catch((err: Error) => {
        // No turn appended; the input keeps the text for retry.
        log.append(renderErrorBubble(`gateway error: ${err.message}`));
      })
      .finally(() => {
        session.inFlight = false;
        syncSubmit();
        log.scrollTop = log.scrollHeight;
      });
  });
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot(document.getElementById("app")!);
}
