/**
 * Contract tests against recorded service fixtures: the UI's derived values
 * must agree with what the service itself returned for the same snapshot.
 */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import type { LookupTable, Recommendation } from "../src/api.js";
import {
  addEntry,
  buildLookupView,
  computeBalance,
  harmonicMean,
  newLedger,
  overBudget,
  recommendFromTable,
  recordActual,
  spentGwei,
} from "../src/model.js";
import { Poller } from "../src/poll.js";

const fixturesDir = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(fixturesDir, name), "utf-8")) as T;
}

const table = fixture<LookupTable>("lookup_table.json");
const recK1 = fixture<Recommendation>("recommend_deadline5_k1.json");
const recK3 = fixture<Recommendation>("recommend_deadline5_k3.json");
const balanceCases = fixture<
  { qos_pct: number; budget_free_pct: number; balance: number }[]
>("balance_cases.json");

describe("recommendation consistency with the service", () => {
  it("re-derives the kth=1 recommendation from the recorded lookup", () => {
    const local = recommendFromTable(table, 5, 1);
    expect(local).not.toBeNull();
    expect(local!.gas_price_gwei).toBe(recK1.gas_price_gwei);
    expect(local!.predicted_minutes).toBe(recK1.predicted_minutes);
    expect(local!.category).toBe(recK1.category);
  });

  it("re-derives the kth=3 recommendation from the recorded lookup", () => {
    const local = recommendFromTable(table, 5, 3);
    expect(local!.gas_price_gwei).toBe(recK3.gas_price_gwei);
    expect(local!.predicted_minutes).toBe(recK3.predicted_minutes);
  });

  it("returns null when fewer than k prices qualify", () => {
    expect(recommendFromTable(table, 1e-9, 1)).toBeNull();
  });

  it("passes predicted minutes through verbatim (no local math)", () => {
    const view = buildLookupView(table, 5, 1);
    view.rows.forEach((row, i) => {
      expect(row.predicted_minutes).toBe(table.rows[i].predicted_minutes);
      expect(row.gas_price_gwei).toBe(table.rows[i].gas_price_gwei);
    });
  });
});

describe("lookup view", () => {
  it("highlights exactly the rows meeting the deadline", () => {
    const view = buildLookupView(table, 5, 1);
    view.rows.forEach((row) => {
      expect(row.meetsDeadline).toBe(row.predicted_minutes <= 5);
    });
    const recommended = view.rows.filter((r) => r.recommended);
    expect(recommended).toHaveLength(1);
    expect(recommended[0].gas_price_gwei).toBe(recK1.gas_price_gwei);
  });

  it("flags non-monotone tables", () => {
    const bad: LookupTable = { ...table, monotone_ok: false };
    expect(buildLookupView(bad, 5, 1).monotoneWarning).toBe(true);
    expect(buildLookupView(table, 5, 1).monotoneWarning).toBe(false);
  });

  it("reports an empty state for empty tables", () => {
    const empty: LookupTable = { head_block: 1, rows: [], monotone_ok: true };
    expect(buildLookupView(empty, 5, 1).empty).toBe(true);
  });
});

describe("balance gauge against the recorded backend oracle", () => {
  it("harmonic mean matches the backend within 0.05 on every case", () => {
    for (const c of balanceCases) {
      expect(Math.abs(harmonicMean(c.qos_pct, c.budget_free_pct) - c.balance)).toBeLessThanOrEqual(
        0.05,
      );
    }
  });

  it("reference gauge value 13.4 appears for (7.8, 47.8)", () => {
    expect(harmonicMean(7.8, 47.8)).toBeCloseTo(13.4, 1);
  });

  it("computes the gauge from a ledger end to end", () => {
    // budget 100, spend 52.2 -> 47.8% free; 7.8% of entries in deadline
    // approximated by 78 of 1000 scored entries
    let ledger = newLedger(100);
    ledger = addEntry(ledger, 52.2, 1.0);
    ledger = recordActual(ledger, 0, 0.5, 5); // within deadline
    for (let i = 0; i < 999; i++) {
      ledger = { ...ledger, entries: [...ledger.entries, { chosenPriceGwei: 0, predictedMinutes: 1 }] };
      ledger = recordActual(ledger, ledger.entries.length - 1, i < 77 ? 1 : 99, 5);
    }
    const gauge = computeBalance(ledger, 5)!;
    expect(gauge.qosPct).toBeCloseTo(7.8, 6);
    expect(gauge.budgetFreePct).toBeCloseTo(47.8, 6);
    expect(Math.abs(gauge.balancePct - 13.4)).toBeLessThanOrEqual(0.05);
  });

  it("ideal session reads 100", () => {
    let ledger = newLedger(1000);
    ledger = addEntry(ledger, 0, 1.0);
    ledger = recordActual(ledger, 0, 0.1, 5);
    const gauge = computeBalance(ledger, 5)!;
    expect(gauge.balancePct).toBe(100);
  });

  it("zero budget free collapses toward zero", () => {
    let ledger = newLedger(10);
    ledger = addEntry(ledger, 10, 1.0);
    ledger = recordActual(ledger, 0, 0.1, 5);
    expect(computeBalance(ledger, 5)!.balancePct).toBe(0);
  });

  it("insufficient data yields null", () => {
    let ledger = newLedger(10);
    ledger = addEntry(ledger, 1, 1.0);
    expect(computeBalance(ledger, 5)).toBeNull();
  });

  it("overspending is flagged, not prevented", () => {
    let ledger = newLedger(10);
    ledger = addEntry(ledger, 8, 1.0);
    expect(overBudget(ledger)).toBe(false);
    ledger = addEntry(ledger, 8, 1.0);
    expect(overBudget(ledger)).toBe(true);
    expect(spentGwei(ledger)).toBe(16);
    expect(computeBalance(recordActual(ledger, 0, 1, 5), 5)!.budgetFreePct).toBe(0);
  });
});

describe("poller staleness handling", () => {
  function tableAtHead(head: number): LookupTable {
    return { ...table, head_block: head };
  }

  it("discards out-of-order responses by head comparison", async () => {
    const applied: number[] = [];
    const heads = [10, 9, 11];
    const poller = new Poller(
      async () => tableAtHead(heads.shift()!),
      (t) => applied.push(t.head_block),
    );
    expect(await poller.tick()).toBe("applied");
    expect(await poller.tick()).toBe("stale");
    expect(await poller.tick()).toBe("applied");
    expect(applied).toEqual([10, 11]);
    expect(poller.appliedHead).toBe(11);
  });

  it("keeps a single request in flight", async () => {
    let release: (t: LookupTable) => void = () => {};
    const gate = new Promise<LookupTable>((resolve) => {
      release = resolve;
    });
    const applied: number[] = [];
    const poller = new Poller(
      () => gate,
      (t) => applied.push(t.head_block),
    );
    const first = poller.tick();
    expect(await poller.tick()).toBe("skipped");
    release(tableAtHead(5));
    expect(await first).toBe("applied");
    expect(applied).toEqual([5]);
  });

  it("equal head is re-applied (fresh snapshot of the same block)", async () => {
    const applied: number[] = [];
    const poller = new Poller(
      async () => tableAtHead(7),
      (t) => applied.push(t.head_block),
    );
    await poller.tick();
    expect(await poller.tick()).toBe("applied");
    expect(applied).toEqual([7, 7]);
  });

  it("reports fetch failures without breaking the loop", async () => {
    let failures = 0;
    let shouldFail = true;
    const poller = new Poller(
      async () => {
        if (shouldFail) {
          throw new Error("connection refused");
        }
        return tableAtHead(3);
      },
      () => {},
      () => failures++,
    );
    expect(await poller.tick()).toBe("error");
    shouldFail = false;
    expect(await poller.tick()).toBe("applied");
    expect(failures).toBe(1);
  });
});
