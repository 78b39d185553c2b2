/**
 * Learning-curve rendering: accuracy and macro AUC against queried labels,
 * as a self-contained SVG string (no chart library, trivially testable).
 */

import { MetricPoint } from "./api.js";

const W = 460;
const H = 220;
const PAD = 36;

function scaleX(queries: number, maxQ: number): number {
  return PAD + (queries / Math.max(maxQ, 1)) * (W - 2 * PAD);
}

function scaleY(value: number): number {
  return H - PAD - value * (H - 2 * PAD);
}

function polyline(points: Array<[number, number]>, color: string): string {
  const attr = points.map(([x, y]) => `${x.toFixed(1)},${y.toFixed(1)}`).join(" ");
  return `<polyline fill="none" stroke="${color}" stroke-width="1.5" points="${attr}"/>`;
}

function markers(points: Array<[number, number]>, color: string): string {
  return points
    .map(([x, y]) => `<circle cx="${x.toFixed(1)}" cy="${y.toFixed(1)}" r="2.5" fill="${color}"/>`)
    .join("");
}

export function renderCurveSvg(history: MetricPoint[]): string {
  const maxQ = history.length ? history[history.length - 1].queries : 1;
  const axes =
    `<line x1="${PAD}" y1="${H - PAD}" x2="${W - PAD}" y2="${H - PAD}" stroke="#888"/>` +
    `<line x1="${PAD}" y1="${PAD}" x2="${PAD}" y2="${H - PAD}" stroke="#888"/>` +
    `<text x="${W / 2}" y="${H - 8}" text-anchor="middle" class="axis">labels queried</text>` +
    `<text x="${PAD}" y="${PAD - 8}" class="axis">1.0</text>` +
    `<text x="${PAD}" y="${H - PAD + 14}" class="axis">0</text>`;

  const accPts: Array<[number, number]> = history.map((m) => [
    scaleX(m.queries, maxQ),
    scaleY(m.accuracy),
  ]);
  const aucPts: Array<[number, number]> = history
    .filter((m) => Number.isFinite(m.macro_auc))
    .map((m) => [scaleX(m.queries, maxQ), scaleY(m.macro_auc)]);

  const legend =
    `<circle cx="${W - 140}" cy="${PAD}" r="3" fill="#2a6fdb"/>` +
    `<text x="${W - 132}" y="${PAD + 4}" class="axis">accuracy</text>` +
    `<circle cx="${W - 140}" cy="${PAD + 16}" r="3" fill="#d97706"/>` +
    `<text x="${W - 132}" y="${PAD + 20}" class="axis">macro AUC</text>`;

  const series =
    (accPts.length > 1 ? polyline(accPts, "#2a6fdb") : "") +
    markers(accPts, "#2a6fdb") +
    (aucPts.length > 1 ? polyline(aucPts, "#d97706") : "") +
    markers(aucPts, "#d97706");

  return (
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${W} ${H}" ` +
    `width="${W}" height="${H}">${axes}${legend}${series}</svg>`
  );
}
