// Gallery and proposal-browser rendering. Pure string builders: tiles are
// emitted strictly in the order the API returned them.
import type { Candidate, ProposalsResponse, VideoDetail } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function galleryOrder(candidates: Candidate[]): string[] {
  return candidates.map((c) => c.candidate_id);
}

function scoreBadge(candidate: Candidate): string {
  return `<span class="score" title="final score">${candidate.scores.final.toFixed(3)}</span>`;
}

export function renderTile(
  candidate: Candidate,
  videoId: string,
  selectedId?: string,
): string {
  const selected = candidate.candidate_id === selectedId ? " selected" : "";
  const src = `/videos/${encodeURIComponent(videoId)}/images/${encodeURIComponent(candidate.candidate_id)}`;
  return `
    <figure class="tile${selected}" data-candidate="${candidate.candidate_id}"
            data-group="${candidate.group_id}" data-aspect="${candidate.aspect}">
      <img loading="lazy" src="${src}" alt="frame ${candidate.frame_id}">
      <figcaption>
        <span class="frame-id">#${candidate.frame_id}</span>
        ${scoreBadge(candidate)}
        <button class="expand" data-action="expand-group" data-group="${candidate.group_id}"
                title="show similar frames and aspect variants">⊞</button>
        <button class="pick" data-action="select" data-candidate="${candidate.candidate_id}"
                data-aspect="${candidate.aspect}">select</button>
      </figcaption>
    </figure>`;
}

export function renderGallery(
  hits: Candidate[],
  videoId: string,
  selectedId?: string,
): string {
  if (!hits.length) {
    return `<p class="empty">no candidates match the current filters</p>`;
  }
  return `<div class="gallery">${hits
    .map((c) => renderTile(c, videoId, selectedId))
    .join("")}</div>`;
}

export function renderMetadataHeader(detail: VideoDetail): string {
  const kws = detail.video.keywords
    .map((k) => `<span class="chip" data-keyword="${escapeHtml(k.text)}">${escapeHtml(k.text)}</span>`)
    .join(" ");
  return `
    <header class="video-meta">
      <h1>${escapeHtml(detail.video.title)}</h1>
      <p class="summary">${escapeHtml(detail.video.summary)}</p>
      <p class="facts">${detail.video.frame_count} frames ·
        ${detail.counts.keyframes} keyframes · ${detail.counts.groups} groups ·
        ${detail.face_clusters.length} identities</p>
      <p class="keywords">${kws}</p>
    </header>`;
}

export function renderProposalBrowser(
  proposals: ProposalsResponse,
  videoId: string,
  openSections: string[],
  selectedId?: string,
): string {
  if (!proposals.sections.length) {
    const reason = proposals.reason ?? "no proposals for this preset";
    return `<p class="empty">${escapeHtml(reason)}</p>`;
  }
  const sections = proposals.sections
    .map((section) => {
      const open = openSections.includes(section.key) ? " open" : "";
      const body = section.entries.length
        ? renderGallery(section.entries, videoId, selectedId)
        : `<p class="empty">${escapeHtml(section.reason ?? "empty section")}</p>`;
      return `
        <details class="section"${open} data-section="${escapeHtml(section.key)}">
          <summary>${escapeHtml(section.key)}
            <span class="count">${section.entries.length}</span>
          </summary>
          ${body}
        </details>`;
    })
    .join("");
  return `<div class="proposal-browser" data-preset="${escapeHtml(proposals.preset)}"
               data-aspect="${escapeHtml(proposals.aspect)}">${sections}</div>`;
}

export function renderStaleBanner(): string {
  return `
    <div class="stale-banner" data-action="reload">
      the dataset on the server changed — click to reload this session
    </div>`;
}

export function renderPager(page: number, total: number, pageSize: number): string {
  const pages = Math.max(1, Math.ceil(total / pageSize));
  return `
    <nav class="pager">
      <button data-action="page-prev" ${page <= 1 ? "disabled" : ""}>&larr;</button>
      <span>page ${page} / ${pages} (${total} hits)</span>
      <button data-action="page-next" ${page >= pages ? "disabled" : ""}>&rarr;</button>
    </nav>`;
}
