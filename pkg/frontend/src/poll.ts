/** Polling loop with exponential backoff on failure.
 *
 * The UI refreshes server state every two seconds while a session is being
 * scored; when the service is unreachable the interval stretches instead of
 * hammering a dead host, and snaps back to the base interval on the first
 * successful tick.
 */

export interface Scheduler {
  set(fn: () => void, ms: number): unknown;
  clear(handle: unknown): void;
}

export const realScheduler: Scheduler = {
  set: (fn, ms) => setTimeout(fn, ms),
  clear: (handle) => clearTimeout(handle as ReturnType<typeof setTimeout>),
};

export interface PollOptions {
  /** Base delay between ticks; default 2000 ms. */
  intervalMs?: number;
  /** Ceiling for the backed-off delay; default 15000 ms. */
  maxIntervalMs?: number;
  /** Multiplier applied to the delay after a failed tick; default 1.5. */
  backoffFactor?: number;
  scheduler?: Scheduler;
}

export interface PollHandle {
  stop(): void;
}

/** Run `tick` repeatedly until it resolves `false` or the handle is stopped.
 *
 * The first tick fires immediately (delay 0). A tick that throws does not
 * stop the loop; it grows the delay by `backoffFactor` up to `maxIntervalMs`.
 * A successful tick resets the delay to `intervalMs`.
 */
export function startPolling(tick: () => Promise<boolean>, options: PollOptions = {}): PollHandle {
  const base = options.intervalMs ?? 2000;
  const max = options.maxIntervalMs ?? 15000;
  const factor = options.backoffFactor ?? 1.5;
  const scheduler = options.scheduler ?? realScheduler;

  let delay = base;
  let stopped = false;
  let handle: unknown = null;

  const run = () => {
    if (stopped) return;
    tick().then(
      (again) => {
        delay = base;
        if (!stopped && again) handle = scheduler.set(run, delay);
      },
      () => {
        delay = Math.min(delay * factor, max);
        if (!stopped) handle = scheduler.set(run, delay);
      },
    );
  };

  handle = scheduler.set(run, 0);
  return {
    stop() {
      stopped = true;
      if (handle !== null) scheduler.clear(handle);
    },
  };
}
