/**
 * Researcher overlay: the latest stats as tables, refreshed every tick.
 * Strictly a pass-through: every number shown is taken verbatim from the
 * stats envelope (formatting aside), no statistics are computed here.
 */

import type { IntervalStats } from "./protocol.js";

export class DebugPanel {
  readonly root: HTMLElement;

  constructor(doc: Document) {
    this.root = doc.createElement("div");
    this.root.className = "debug-panel";
  }

  update(stats: IntervalStats): void {
    const doc = this.root.ownerDocument;
    this.root.replaceChildren();

    const headline = doc.createElement("div");
    headline.className = "headline";
    headline.innerHTML =
      `turns/min <b data-field="turn_taking_per_min">${fmt(stats.turn_taking_per_min)}</b> · ` +
      `overlap <b data-field="overlap_pct">${(stats.overlap_pct * 100).toFixed(1)}%</b> · ` +
      `window ${((stats.window[1] - stats.window[0]) / 1000).toFixed(0)}s`;
    this.root.append(headline);

    const perPerson = doc.createElement("table");
    perPerson.className = "per-participant";
    perPerson.append(headerRow(doc, ["participant", "turns", "speaking s", "events"]));
    for (const pid of stats.participants_present) {
      const tr = doc.createElement("tr");
      tr.setAttribute("data-participant", pid);
      appendCell(tr, pid);
      appendCell(tr, String(stats.turns[pid]), "turns");
      appendCell(tr, (stats.speaking_time_ms[pid] / 1000).toFixed(1), "speaking");
      appendCell(tr, String(stats.speaking_events[pid]), "events");
      perPerson.append(tr);
    }
    this.root.append(perPerson);
    this.root.append(this.matrixTable(doc, stats));
  }

  private matrixTable(doc: Document, stats: IntervalStats): HTMLTableElement {
    const { participants, probabilities } = stats.transitions;
    const table = doc.createElement("table");
    table.className = "matrix";
    table.append(headerRow(doc, ["from \\ to", ...participants, "row sum"]));
    probabilities.forEach((row, i) => {
      const tr = doc.createElement("tr");
      appendCell(tr, participants[i]);
      row.forEach((p) => {
        const td = appendCell(tr, p.toFixed(2), "prob");
        td.style.backgroundColor = `hsl(123, 60%, ${Math.round(95 - 45 * p)}%)`;
      });
      const sum = row.reduce((a, b) => a + b, 0);
      appendCell(tr, sum.toFixed(2), "row-sum");
      table.append(tr);
    });
    return table;
  }
}

function headerRow(doc: Document, names: string[]): HTMLTableRowElement {
  const tr = doc.createElement("tr");
  for (const name of names) {
    const th = doc.createElement("th");
    th.textContent = name;
    tr.append(th);
  }
  return tr;
}

function appendCell(tr: HTMLTableRowElement, text: string, cls?: string): HTMLTableCellElement {
  const td = tr.ownerDocument.createElement("td");
  td.textContent = text;
  if (cls) td.className = cls;
  tr.append(td);
  return td;
}

function fmt(x: number): string {
  return Number.isInteger(x) ? String(x) : x.toFixed(2);
}
