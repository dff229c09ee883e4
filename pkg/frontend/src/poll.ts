/**
 * Request polling with backoff: 1s doubling to a 5s cap, stopping the
 * moment a terminal status arrives.
 */

import type { ApiClient, PeekResponse } from "./api.js";

export interface PollOptions {
  initialDelayMs?: number;
  maxDelayMs?: number;
  /** injectable for tests */
  schedule?: (fn: () => void, ms: number) => unknown;
  cancel?: (handle: unknown) => void;
}

export interface PollHandle {
  done: Promise<PeekResponse>;
  stop: () => void;
  delays: number[]; // the backoff actually used, for observability
}

const TERMINAL: ReadonlySet<string> = new Set(["SUCCESS", "FAILED"]);

export function pollRequest(
  api: ApiClient,
  requestId: string,
  onUpdate: (peek: PeekResponse) => void,
  options: PollOptions = {},
): PollHandle {
  const initial = options.initialDelayMs ?? 1000;
  const max = options.maxDelayMs ?? 5000;
  const schedule = options.schedule ?? ((fn, ms) => setTimeout(fn, ms));
  const cancel = options.cancel ?? ((handle) => clearTimeout(handle as number));

  let stopped = false;
  let timer: unknown = null;
  const delays: number[] = [];

  const done = new Promise<PeekResponse>((resolve, reject) => {
    let delay = initial;

    const tick = async () => {
      if (stopped) return;
      let peek: PeekResponse;
      try {
        peek = await api.peek(requestId);
      } catch (error) {
        reject(error);
        return;
      }
      if (stopped) return;
      onUpdate(peek);
      if (TERMINAL.has(peek.status)) {
        resolve(peek);
        return;
      }
      delays.push(delay);
      timer = schedule(tick, delay);
      delay = Math.min(delay * 2, max);
    };

    void tick();
  });

  return {
    done,
    delays,
    stop: () => {
      stopped = true;
      if (timer !== null) cancel(timer);
    },
  };
}
