/**
 * Polling loop: one request in flight at a time, responses from an older
 * chain head than the last applied one are discarded as stale.
 */

import type { LookupTable } from "./api.js";

export type TickResult = "applied" | "stale" | "skipped" | "error";

export class Poller {
  private lastHead: number | null = null;
  private inFlight = false;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private fetchTable: () => Promise<LookupTable>,
    private onTable: (table: LookupTable) => void,
    private onError: (err: unknown) => void = () => {},
    readonly intervalMs: number = 15_000, // one block period by default
  ) {}

  get appliedHead(): number | null {
    return this.lastHead;
  }

  async tick(): Promise<TickResult> {
    if (this.inFlight) {
      return "skipped";
    }
    this.inFlight = true;
    try {
      const table = await this.fetchTable();
      if (this.lastHead !== null && table.head_block < this.lastHead) {
        return "stale";
      }
      this.lastHead = table.head_block;
      this.onTable(table);
      return "applied";
    } catch (err) {
      this.onError(err);
      return "error";
    } finally {
      this.inFlight = false;
    }
  }

  start(): void {
    if (this.timer !== null) {
      return;
    }
    void this.tick();
    this.timer = setInterval(() => void this.tick(), this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
