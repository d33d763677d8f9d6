/** Wiring: poll the service, render the table/recommendation/gauge. */

import { ApiClient, type LookupTable, type Recommendation } from "./api.js";
import {
  addEntry,
  buildLookupView,
  computeBalance,
  newLedger,
  overBudget,
  recordActual,
  spentGwei,
  type SessionLedger,
} from "./model.js";
import { Poller } from "./poll.js";
import {
  renderConnectionError,
  renderGauge,
  renderLookup,
  renderRecommendation,
} from "./dom.js";

function param(name: string, fallback: string): string {
  return new URLSearchParams(window.location.search).get(name) ?? fallback;
}

const baseUrl = param("service", "http://127.0.0.1:8080");
const pollMs = Number(param("poll_ms", "15000"));

const api = new ApiClient(baseUrl);

const state = {
  table: null as LookupTable | null,
  recommendation: null as Recommendation | null,
  ledger: newLedger(15_000) as SessionLedger,
  deadline: 5,
  kth: 3,
};

const nodes = {
  status: document.getElementById("status")!,
  lookup: document.getElementById("lookup")!,
  recommendation: document.getElementById("recommendation")!,
  gauge: document.getElementById("gauge")!,
  deadline: document.getElementById("deadline") as HTMLInputElement,
  kth: document.getElementById("kth") as HTMLInputElement,
  budget: document.getElementById("budget") as HTMLInputElement,
  accept: document.getElementById("accept") as HTMLButtonElement,
  actual: document.getElementById("actual") as HTMLInputElement,
  record: document.getElementById("record") as HTMLButtonElement,
};

function redraw(): void {
  if (state.table !== null) {
    renderLookup(nodes.lookup, buildLookupView(state.table, state.deadline, state.kth));
    nodes.status.textContent = `head block ${state.table.head_block} · polling every ${pollMs / 1000}s`;
  }
  renderRecommendation(nodes.recommendation, state.recommendation);
  renderGauge(
    nodes.gauge,
    computeBalance(state.ledger, state.deadline),
    state.ledger,
    spentGwei(state.ledger),
    overBudget(state.ledger),
  );
}

async function refreshRecommendation(): Promise<void> {
  try {
    state.recommendation = await api.recommend(state.deadline, state.kth);
  } catch {
    state.recommendation = null;
  }
  redraw();
}

const poller = new Poller(
  () => api.lookup(),
  (table) => {
    state.table = table;
    redraw();
    void refreshRecommendation();
  },
  () => renderConnectionError(nodes.status, () => void poller.tick()),
  pollMs,
);

nodes.deadline.addEventListener("change", () => {
  state.deadline = Number(nodes.deadline.value) || state.deadline;
  void refreshRecommendation();
});
nodes.kth.addEventListener("change", () => {
  state.kth = Math.max(1, Number(nodes.kth.value) || state.kth);
  void refreshRecommendation();
});
nodes.budget.addEventListener("change", () => {
  state.ledger = { ...state.ledger, budgetGwei: Number(nodes.budget.value) || state.ledger.budgetGwei };
  redraw();
});
nodes.accept.addEventListener("click", () => {
  if (state.recommendation !== null) {
    state.ledger = addEntry(
      state.ledger,
      state.recommendation.gas_price_gwei,
      state.recommendation.predicted_minutes,
    );
    redraw();
  }
});
nodes.record.addEventListener("click", () => {
  const actual = Number(nodes.actual.value);
  const pendingIdx = state.ledger.entries.findIndex((e) => e.actualMinutes === undefined);
  if (Number.isFinite(actual) && actual >= 0 && pendingIdx >= 0) {
    state.ledger = recordActual(state.ledger, pendingIdx, actual, state.deadline);
    nodes.actual.value = "";
    redraw();
  }
});

nodes.deadline.value = String(state.deadline);
nodes.kth.value = String(state.kth);
nodes.budget.value = String(state.ledger.budgetGwei);
poller.start();
