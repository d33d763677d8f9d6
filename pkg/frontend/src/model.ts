/**
 * Pure view-model logic: lookup table views, deadline highlighting, the
 * session ledger, and the time-expense balance gauge. No DOM, no network.
 */

import type { LookupRow, LookupTable } from "./api.js";

export interface LookupRowView extends LookupRow {
  meetsDeadline: boolean;
  recommended: boolean;
}

export interface LookupView {
  headBlock: number;
  rows: LookupRowView[];
  monotoneWarning: boolean;
  empty: boolean;
}

/**
 * Re-derivation of the service's recommendation rule, used only to mark the
 * highlighted row; the displayed recommendation itself comes from
 * /v1/recommend and the two must agree (contract-tested).
 */
export function recommendFromTable(
  table: LookupTable,
  deadlineMinutes: number,
  kth: number,
): LookupRow | null {
  const qualifying = table.rows.filter((r) => r.predicted_minutes <= deadlineMinutes);
  if (qualifying.length < kth) {
    return null;
  }
  return qualifying[kth - 1];
}

export function buildLookupView(
  table: LookupTable,
  deadlineMinutes: number,
  kth: number,
): LookupView {
  const pick = recommendFromTable(table, deadlineMinutes, kth);
  const rows = table.rows.map((row) => ({
    ...row,
    meetsDeadline: row.predicted_minutes <= deadlineMinutes,
    recommended: pick !== null && row.gas_price_gwei === pick.gas_price_gwei,
  }));
  return {
    headBlock: table.head_block,
    rows,
    monotoneWarning: !table.monotone_ok,
    empty: rows.length === 0,
  };
}

// ---------------------------------------------------------------------------
// session ledger

export interface LedgerEntry {
  chosenPriceGwei: number;
  predictedMinutes: number;
  actualMinutes?: number;
  withinDeadline?: boolean;
}

export interface SessionLedger {
  budgetGwei: number;
  entries: LedgerEntry[];
}

export function newLedger(budgetGwei: number): SessionLedger {
  return { budgetGwei, entries: [] };
}

export function addEntry(
  ledger: SessionLedger,
  chosenPriceGwei: number,
  predictedMinutes: number,
): SessionLedger {
  return {
    ...ledger,
    entries: [...ledger.entries, { chosenPriceGwei, predictedMinutes }],
  };
}

export function recordActual(
  ledger: SessionLedger,
  index: number,
  actualMinutes: number,
  deadlineMinutes: number,
): SessionLedger {
  const entries = ledger.entries.map((entry, i) =>
    i === index
      ? { ...entry, actualMinutes, withinDeadline: actualMinutes <= deadlineMinutes }
      : entry,
  );
  return { ...ledger, entries };
}

export function spentGwei(ledger: SessionLedger): number {
  return ledger.entries.reduce((sum, e) => sum + e.chosenPriceGwei, 0);
}

/** Overspending is flagged, not prevented. */
export function overBudget(ledger: SessionLedger): boolean {
  return spentGwei(ledger) > ledger.budgetGwei;
}

export function budgetFreePct(ledger: SessionLedger): number {
  if (ledger.budgetGwei <= 0) {
    return 0;
  }
  const free = (100 * (ledger.budgetGwei - spentGwei(ledger))) / ledger.budgetGwei;
  return Math.max(0, free);
}

// ---------------------------------------------------------------------------
// time-expense balance gauge

export function harmonicMean(a: number, b: number): number {
  if (a + b === 0) {
    return 0;
  }
  return (2 * a * b) / (a + b);
}

export interface BalanceGauge {
  qosPct: number;
  budgetFreePct: number;
  balancePct: number;
  nScored: number;
}

/**
 * Percentage of scored entries meeting the deadline, percentage of budget
 * still free, and their harmonic mean. Null until at least one entry has an
 * actual outcome ("insufficient data").
 */
export function computeBalance(
  ledger: SessionLedger,
  deadlineMinutes: number,
): BalanceGauge | null {
  const scored = ledger.entries.filter((e) => e.actualMinutes !== undefined);
  if (scored.length === 0) {
    return null;
  }
  const within = scored.filter((e) => (e.actualMinutes as number) <= deadlineMinutes).length;
  const qosPct = (100 * within) / scored.length;
  const freePct = budgetFreePct(ledger);
  return {
    qosPct,
    budgetFreePct: freePct,
    balancePct: harmonicMean(qosPct, freePct),
    nScored: scored.length,
  };
}
