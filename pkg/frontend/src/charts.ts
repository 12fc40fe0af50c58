/**
 * Client-side chart rendering from ChartSeries payloads.
 *
 * The renderer sits behind a small interface so the drawing backend can be
 * swapped; the built-in one emits plain SVG with no library dependency.
 * Geometry helpers are exported separately so tests can check the math
 * without a DOM.
 */

import type { ChartData } from "./api.js";

export interface ChartRenderer {
  render(doc: Document, chart: ChartData): Element;
}

export interface BarBox {
  x: number;
  y: number;
  width: number;
  height: number;
}

export function barGeometry(values: number[], width: number, height: number,
                            gap = 2): BarBox[] {
  if (values.length === 0) return [];
  const max = Math.max(...values, 0);
  const slot = width / values.length;
  return values.map((value, i) => {
    const h = max > 0 ? (value / max) * height : 0;
    return {
      x: i * slot + gap / 2,
      y: height - h,
      width: Math.max(slot - gap, 1),
      height: h,
    };
  });
}

export function linePoints(values: number[], width: number,
                           height: number): string {
  if (values.length === 0) return "";
  const max = Math.max(...values, 0);
  const step = values.length > 1 ? width / (values.length - 1) : 0;
  return values
    .map((value, i) => {
      const y = max > 0 ? height - (value / max) * height : height;
      return `${i * step},${y}`;
    })
    .join(" ");
}

export interface PieSlice {
  start: number; // radians
  end: number;
  share: number; // 0..1 of the whole
}

export function pieSlices(values: number[]): PieSlice[] {
  const total = values.reduce((a, b) => a + b, 0);
  if (total <= 0) return [];
  let angle = -Math.PI / 2;
  return values.map((value) => {
    const share = value / total;
    const slice = { start: angle, end: angle + share * 2 * Math.PI, share };
    angle = slice.end;
    return slice;
  });
}

const SVG_NS = "http://www.w3.org/2000/svg";
const PALETTE = ["#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                 "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"];

const WIDTH = 640;
const HEIGHT = 240;
const LABEL_BAND = 60;

export class SvgChartRenderer implements ChartRenderer {
  render(doc: Document, chart: ChartData): Element {
    const svg = doc.createElementNS(SVG_NS, "svg");
    svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT + LABEL_BAND}`);
    svg.setAttribute("class", `chart chart-${chart.kind}`);
    svg.setAttribute("role", "img");
    const title = doc.createElementNS(SVG_NS, "title");
    title.textContent = chart.title;
    svg.appendChild(title);
    if (chart.kind === "pie") {
      this.renderPie(doc, svg, chart);
    } else if (chart.kind === "line") {
      this.renderLine(doc, svg, chart);
    } else {
      this.renderBars(doc, svg, chart); // bar and histogram share geometry
    }
    return svg;
  }

  private renderBars(doc: Document, svg: Element, chart: ChartData): void {
    const boxes = barGeometry(chart.values, WIDTH, HEIGHT);
    boxes.forEach((box, i) => {
      const rect = doc.createElementNS(SVG_NS, "rect");
      rect.setAttribute("x", String(box.x));
      rect.setAttribute("y", String(box.y));
      rect.setAttribute("width", String(box.width));
      rect.setAttribute("height", String(box.height));
      rect.setAttribute("fill", PALETTE[0]);
      rect.setAttribute("data-value", String(chart.values[i]));
      svg.appendChild(rect);
      if (chart.x_labels.length <= 32) {
        const label = doc.createElementNS(SVG_NS, "text");
        label.setAttribute("x", String(box.x + box.width / 2));
        label.setAttribute("y", String(HEIGHT + 16));
        label.setAttribute("text-anchor", "middle");
        label.setAttribute("class", "chart-label");
        label.textContent = chart.x_labels[i];
        svg.appendChild(label);
      }
    });
  }

  private renderLine(doc: Document, svg: Element, chart: ChartData): void {
    const line = doc.createElementNS(SVG_NS, "polyline");
    line.setAttribute("points", linePoints(chart.values, WIDTH, HEIGHT));
    line.setAttribute("fill", "none");
    line.setAttribute("stroke", PALETTE[0]);
    line.setAttribute("stroke-width", "2");
    svg.appendChild(line);
    chart.x_labels.forEach((text, i) => {
      if (chart.x_labels.length > 16 && i % 2 === 1) return;
      const step = chart.values.length > 1 ? WIDTH / (chart.values.length - 1) : 0;
      const label = doc.createElementNS(SVG_NS, "text");
      label.setAttribute("x", String(i * step));
      label.setAttribute("y", String(HEIGHT + 16));
      label.setAttribute("class", "chart-label");
      label.textContent = text;
      svg.appendChild(label);
    });
  }

  private renderPie(doc: Document, svg: Element, chart: ChartData): void {
    const cx = HEIGHT / 2 + 10;
    const cy = HEIGHT / 2 + 10;
    const r = HEIGHT / 2 - 10;
    const slices = pieSlices(chart.values);
    slices.forEach((slice, i) => {
      const path = doc.createElementNS(SVG_NS, "path");
      const x1 = cx + r * Math.cos(slice.start);
      const y1 = cy + r * Math.sin(slice.start);
      const x2 = cx + r * Math.cos(slice.end);
      const y2 = cy + r * Math.sin(slice.end);
      const large = slice.share > 0.5 ? 1 : 0;
      path.setAttribute(
        "d",
        `M ${cx} ${cy} L ${x1} ${y1} A ${r} ${r} 0 ${large} 1 ${x2} ${y2} Z`);
      path.setAttribute("fill", PALETTE[i % PALETTE.length]);
      path.setAttribute("data-value", String(chart.values[i]));
      svg.appendChild(path);
      const legend = doc.createElementNS(SVG_NS, "text");
      legend.setAttribute("x", String(HEIGHT + 40));
      legend.setAttribute("y", String(24 + i * 18));
      legend.setAttribute("class", "chart-label");
      legend.textContent =
        `${chart.x_labels[i]}: ${chart.values[i].toFixed(1)}%`;
      const swatch = doc.createElementNS(SVG_NS, "rect");
      swatch.setAttribute("x", String(HEIGHT + 22));
      swatch.setAttribute("y", String(14 + i * 18));
      swatch.setAttribute("width", "12");
      swatch.setAttribute("height", "12");
      swatch.setAttribute("fill", PALETTE[i % PALETTE.length]);
      svg.appendChild(swatch);
      svg.appendChild(legend);
    });
  }
}
