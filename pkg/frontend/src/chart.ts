import type { CurvePoint } from "./types.js";

/** Learning-curve chart: labeled count on x, mAP over the labeled pool
 * on y. Plain SVG so it renders anywhere a DOM exists. */

const SVG_NS = "http://www.w3.org/2000/svg";

function svgEl<K extends keyof SVGElementTagNameMap>(
  doc: Document,
  tag: K,
  attrs: Record<string, string | number>,
): SVGElementTagNameMap[K] {
  const el = doc.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, String(v));
  return el;
}

export function renderCurveChart(
  points: CurvePoint[],
  width = 560,
  height = 260,
  doc: Document = document,
): SVGSVGElement {
  const svg = svgEl(doc, "svg", {
    width,
    height,
    viewBox: `0 0 ${width} ${height}`,
    role: "img",
    id: "curve-chart",
  });
  const pad = { left: 44, right: 12, top: 12, bottom: 30 };
  const innerW = width - pad.left - pad.right;
  const innerH = height - pad.top - pad.bottom;

  if (points.length === 0) {
    const label = svgEl(doc, "text", {
      x: width / 2,
      y: height / 2,
      "text-anchor": "middle",
      class: "chart-empty",
    });
    label.textContent = "no training rounds yet";
    svg.append(label);
    return svg;
  }

  const maxX = Math.max(...points.map((p) => p.labeled_count), 1);
  const toX = (c: number) => pad.left + (c / maxX) * innerW;
  const toY = (m: number) => pad.top + (1 - Math.max(0, Math.min(1, m))) * innerH;

  // axes
  svg.append(
    svgEl(doc, "line", {
      x1: pad.left, y1: pad.top, x2: pad.left, y2: pad.top + innerH, class: "axis",
    }),
    svgEl(doc, "line", {
      x1: pad.left, y1: pad.top + innerH, x2: pad.left + innerW, y2: pad.top + innerH, class: "axis",
    }),
  );
  for (const frac of [0, 0.5, 1]) {
    const tick = svgEl(doc, "text", {
      x: pad.left - 6,
      y: toY(frac) + 4,
      "text-anchor": "end",
      class: "tick",
    });
    tick.textContent = frac.toFixed(1);
    svg.append(tick);
  }
  const xLabel = svgEl(doc, "text", {
    x: pad.left + innerW / 2,
    y: height - 8,
    "text-anchor": "middle",
    class: "tick",
  });
  xLabel.textContent = "labeled scenes";
  svg.append(xLabel);

  const coords = points.map((p) => `${toX(p.labeled_count)},${toY(p.map_labeled)}`);
  svg.append(
    svgEl(doc, "polyline", { points: coords.join(" "), class: "curve-line", fill: "none" }),
  );
  for (const p of points) {
    const dot = svgEl(doc, "circle", {
      cx: toX(p.labeled_count),
      cy: toY(p.map_labeled),
      r: 4,
      class: "curve-point",
      "data-labeled-count": p.labeled_count,
      "data-map": p.map_labeled,
    });
    const tip = svgEl(doc, "title", {});
    tip.textContent = `${p.labeled_count} labeled → mAP ${p.map_labeled.toFixed(3)}`;
    dot.append(tip);
    svg.append(dot);
  }
  return svg;
}
