import type { App } from "../app.js";
import { renderCurveChart } from "../chart.js";

/** Curve screen: the learning curve chart plus a per-round table, all
 * straight from the metrics endpoint. */

export function renderCurveScreen(app: App, doc: Document): HTMLElement {
  const wrap = doc.createElement("div");
  wrap.className = "curve-screen";
  const metrics = app.metricsData;
  if (!app.info || !metrics) {
    const empty = doc.createElement("p");
    empty.id = "no-metrics";
    empty.textContent = "no metrics loaded";
    return wrap.appendChild(empty), wrap;
  }

  const heading = doc.createElement("h2");
  heading.textContent = "learning curve";
  wrap.append(heading);

  wrap.append(renderCurveChart(metrics.curve, 560, 260, doc));

  const table = doc.createElement("table");
  table.id = "curve-table";
  const head = doc.createElement("tr");
  for (const col of ["round", "labeled", "mAP", "loss start", "loss end", "seconds"]) {
    const th = doc.createElement("th");
    th.textContent = col;
    head.append(th);
  }
  table.append(head);
  for (const row of metrics.curve) {
    const tr = doc.createElement("tr");
    tr.className = "curve-row";
    for (const value of [
      String(row.step),
      String(row.labeled_count),
      row.map_labeled.toFixed(3),
      row.loss_first.toFixed(3),
      row.loss_last.toFixed(3),
      row.duration_s.toFixed(2),
    ]) {
      const td = doc.createElement("td");
      td.textContent = value;
      tr.append(td);
    }
    table.append(tr);
  }
  wrap.append(table);

  const refresh = doc.createElement("button");
  refresh.id = "refresh-curves";
  refresh.textContent = "refresh";
  refresh.addEventListener("click", () => void app.showCurves());
  wrap.append(refresh);

  return wrap;
}
