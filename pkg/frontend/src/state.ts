import type { AskResult } from "./api.js";

export const STRATEGIES = ["qa-examples", "qa-descriptions", "qr"] as const;
export type Strategy = (typeof STRATEGIES)[number];
export const DEFAULT_STRATEGY: Strategy = "qr";

export interface ChatTurn {
  query: string;
  result: AskResult;
  timestamp: number;
}

export interface SwitchOutcome {
  strategy: Strategy;
  notice: string | null;
}

// One in-flight request per session; submits are disabled while waiting.
export class Session {
  strategy: Strategy = DEFAULT_STRATEGY;
  history: ChatTurn[] = [];
  inFlight = false;

  switchStrategy(kind: string): SwitchOutcome {
    if ((STRATEGIES as readonly string[]).includes(kind)) {
      this.strategy = kind as Strategy;
      return { strategy: this.strategy, notice: null };
    }
    this.strategy = DEFAULT_STRATEGY;
    return {
      strategy: this.strategy,
      notice: `unknown strategy "${kind}", reset to ${DEFAULT_STRATEGY}`,
    };
  }

  canSubmit(text: string): boolean {
    return !this.inFlight && text.trim().length > 0;
  }

  pushTurn(query: string, result: AskResult, timestamp = Date.now()): ChatTurn {
    const turn: ChatTurn = { query, result, timestamp };
    this.history.push(turn);
    return turn;
  }
}
