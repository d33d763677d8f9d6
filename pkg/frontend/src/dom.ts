/** DOM rendering for the explorer; all state comes in as view models. */

import type { Recommendation } from "./api.js";
import type { BalanceGauge, LookupView, SessionLedger } from "./model.js";

const CATEGORY_BADGES: Record<string, string> = {
  very_cheap: "badge vc",
  cheap: "badge c",
  regular: "badge r",
  expensive: "badge e",
  very_expensive: "badge ve",
};

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

export function renderLookup(container: HTMLElement, view: LookupView): void {
  container.replaceChildren();
  if (view.empty) {
    container.append(el("p", "empty-state", "No lookup rows returned by the service."));
    return;
  }
  if (view.monotoneWarning) {
    container.append(
      el("p", "warning", "Warning: predictions are not monotone in price; treat this table with care."),
    );
  }
  const table = document.createElement("table");
  table.className = "lookup";
  const head = table.createTHead().insertRow();
  for (const title of ["Gas price (GWEI)", "Category", "Predicted minutes", ""]) {
    head.append(Object.assign(document.createElement("th"), { textContent: title }));
  }
  const body = table.createTBody();
  for (const row of view.rows) {
    const tr = body.insertRow();
    tr.className = row.meetsDeadline ? "meets" : "misses";
    if (row.recommended) {
      tr.classList.add("recommended");
    }
    tr.insertCell().textContent = String(row.gas_price_gwei);
    const badge = tr.insertCell();
    badge.append(el("span", CATEGORY_BADGES[row.category] ?? "badge", row.category.replace("_", " ")));
    tr.insertCell().textContent = row.predicted_minutes.toFixed(3);
    tr.insertCell().textContent = row.recommended ? "← recommended" : "";
  }
  container.append(table);
}

export function renderRecommendation(
  container: HTMLElement,
  rec: Recommendation | null,
): void {
  container.replaceChildren();
  if (rec === null) {
    container.append(el("p", "warning", "No price meets the deadline right now."));
    return;
  }
  container.append(
    el(
      "p",
      "recommendation",
      `Pay ${rec.gas_price_gwei} GWEI (${rec.category.replace("_", " ")}): ` +
        `predicted ${rec.predicted_minutes.toFixed(2)} min`,
    ),
  );
}

export function renderGauge(
  container: HTMLElement,
  gauge: BalanceGauge | null,
  ledger: SessionLedger,
  spent: number,
  over: boolean,
): void {
  container.replaceChildren();
  const spentLine = el(
    "p",
    over ? "warning" : "info",
    `Spent ${spent.toFixed(1)} of ${ledger.budgetGwei.toFixed(1)} GWEI budget` +
      (over ? " (over budget!)" : ""),
  );
  container.append(spentLine);
  if (gauge === null) {
    container.append(el("p", "empty-state", "Insufficient data: record an actual outcome first."));
    return;
  }
  container.append(
    el(
      "p",
      "gauge",
      `Time-expense balance ${gauge.balancePct.toFixed(1)}% ` +
        `(QoS ${gauge.qosPct.toFixed(1)}% · budget free ${gauge.budgetFreePct.toFixed(1)}% · ` +
        `${gauge.nScored} scored)`,
    ),
  );
}

export function renderConnectionError(container: HTMLElement, retry: () => void): void {
  container.replaceChildren();
  const banner = el("div", "banner error");
  banner.append(el("span", "", "Cannot reach the estimation service."));
  const button = document.createElement("button");
  button.textContent = "Retry";
  button.addEventListener("click", retry);
  banner.append(button);
  container.append(banner);
}
