// Frontier chart: a dependency-free SVG string.  Curves come straight
// from the service's frontier rows; the current threshold is a vertical
// marker.  Null values (undefined quantities) break the polyline.

import type { FrontierRow } from "./types.js";

export interface ChartSeries {
  key: string;
  label: string;
  color: string;
}

export const DEFAULT_SERIES: ChartSeries[] = [
  { key: "fnr", label: "FNR", color: "#d62728" },
  { key: "fpr", label: "FPR", color: "#1f77b4" },
  { key: "fail_pred_accuracy", label: "PPV", color: "#2ca02c" },
  { key: "success_pred_accuracy", label: "NPV", color: "#9467bd" },
];

const WIDTH = 560;
const HEIGHT = 240;
const PAD = 34;

function x(threshold: number, maxT: number): number {
  return PAD + (threshold / maxT) * (WIDTH - 2 * PAD);
}

function y(value: number): number {
  return HEIGHT - PAD - value * (HEIGHT - 2 * PAD);
}

function polylines(rows: FrontierRow[], key: string, maxT: number): string[] {
  const segments: string[] = [];
  let current: string[] = [];
  for (const row of rows) {
    const value = row[key];
    if (value === null || value === undefined) {
      if (current.length > 1) segments.push(current.join(" "));
      current = [];
    } else {
      current.push(`${x(row.threshold, maxT).toFixed(1)},${y(value).toFixed(1)}`);
    }
  }
  if (current.length > 1) segments.push(current.join(" "));
  return segments;
}

export function buildFrontierSvg(
  rows: FrontierRow[],
  currentThreshold: number | null,
  series: ChartSeries[] = DEFAULT_SERIES,
): string {
  if (!rows.length) return "<svg></svg>";
  const maxT = Math.max(...rows.map((r) => r.threshold), 1);
  const parts: string[] = [
    `<svg viewBox="0 0 ${WIDTH} ${HEIGHT}" xmlns="http://www.w3.org/2000/svg" role="img" aria-label="threshold frontier">`,
    `<rect x="${PAD}" y="${PAD}" width="${WIDTH - 2 * PAD}" height="${HEIGHT - 2 * PAD}" fill="none" stroke="#ccc"/>`,
  ];
  for (const tick of [0, 0.25, 0.5, 0.75, 1]) {
    parts.push(
      `<text x="${x(tick, maxT).toFixed(1)}" y="${HEIGHT - 10}" font-size="10" text-anchor="middle" fill="#666">${tick}</text>`,
      `<text x="${PAD - 6}" y="${(y(tick) + 3).toFixed(1)}" font-size="10" text-anchor="end" fill="#666">${tick}</text>`,
    );
  }
  series.forEach(({ key, label, color }, i) => {
    for (const points of polylines(rows, key, maxT)) {
      parts.push(`<polyline points="${points}" fill="none" stroke="${color}" stroke-width="1.5"/>`);
    }
    parts.push(
      `<text x="${WIDTH - PAD + 4}" y="${PAD + 12 * i}" font-size="10" fill="${color}">${label}</text>`,
    );
  });
  if (currentThreshold !== null) {
    const cx = x(Math.min(currentThreshold, maxT), maxT).toFixed(1);
    parts.push(
      `<line class="marker" x1="${cx}" y1="${PAD}" x2="${cx}" y2="${HEIGHT - PAD}" stroke="#000" stroke-dasharray="4 3"/>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}
