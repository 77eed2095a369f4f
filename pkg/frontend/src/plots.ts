// Score-distribution plots rendered as inline SVG from the service's
// pre-binned histograms; the UI never rebins or recomputes.
import { escapeHtml } from "./gallery.js";
import type { DistributionsResponse, Histogram } from "./types.js";

const PLOT_W = 220;
const PLOT_H = 70;

export function renderHistogram(name: string, hist: Histogram): string {
  const peak = Math.max(1, ...hist.counts);
  const barW = PLOT_W / hist.counts.length;
  const bars = hist.counts
    .map((count, i) => {
      const h = (count / peak) * (PLOT_H - 14);
      const x = (i * barW).toFixed(1);
      const y = (PLOT_H - h).toFixed(1);
      return `<rect x="${x}" y="${y}" width="${(barW - 1).toFixed(1)}" height="${h.toFixed(1)}"><title>${hist.edges[i].toFixed(2)}–${hist.edges[i + 1].toFixed(2)}: ${count}</title></rect>`;
    })
    .join("");
  return `
    <figure class="hist" data-column="${escapeHtml(name)}">
      <svg viewBox="0 0 ${PLOT_W} ${PLOT_H}" role="img" aria-label="${escapeHtml(name)} distribution">
        ${bars}
      </svg>
      <figcaption>${escapeHtml(name)} <span class="count">n=${hist.n}</span></figcaption>
    </figure>`;
}

export function renderDistributions(
  dists: DistributionsResponse,
  aspect: string,
): string {
  const byColumn = dists.distributions[aspect];
  if (!byColumn) {
    return `<p class="empty">no score distributions for ${escapeHtml(aspect)}</p>`;
  }
  const order = [
    "final",
    "aesthetic",
    "semantic",
    "logo",
    "face_position",
    "on_face_focus",
  ];
  const plots = order
    .filter((c) => byColumn[c])
    .map((c) => renderHistogram(c, byColumn[c]))
    .join("");
  return `<section class="distributions">${plots}</section>`;
}
