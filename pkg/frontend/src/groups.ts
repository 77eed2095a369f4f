// Group expansion panel: every member of a redundancy group with its
// per-aspect crop variants, each selectable.
import { escapeHtml } from "./gallery.js";
import type { GroupResponse } from "./types.js";

export function renderGroupExpansion(
  group: GroupResponse,
  videoId: string,
  activeAspect: string,
): string {
  const members = group.members
    .map((member) => {
      const aspects = Object.keys(member.variants).sort();
      if (!aspects.length) {
        return `
          <div class="member" data-frame="${member.frame_id}">
            <p class="empty">frame ${member.frame_id}: no candidate variants</p>
          </div>`;
      }
      const shown = member.variants[activeAspect] ?? member.variants[aspects[0]];
      const toggles = aspects
        .map(
          (aspect) => `
            <button class="aspect-toggle${aspect === shown.aspect ? " active" : ""}"
                    data-action="variant" data-frame="${member.frame_id}"
                    data-candidate="${member.variants[aspect].candidate_id}"
                    data-aspect="${escapeHtml(aspect)}">${escapeHtml(aspect)}</button>`,
        )
        .join("");
      const src = `/videos/${encodeURIComponent(videoId)}/images/${encodeURIComponent(shown.candidate_id)}`;
      return `
        <div class="member" data-frame="${member.frame_id}">
          <img loading="lazy" src="${src}" alt="frame ${member.frame_id}">
          <div class="variant-bar">${toggles}</div>
          <button class="pick" data-action="select"
                  data-candidate="${shown.candidate_id}"
                  data-aspect="${escapeHtml(shown.aspect)}">
            select ${escapeHtml(shown.aspect)}
          </button>
        </div>`;
    })
    .join("");
  return `
    <aside class="group-expansion" data-group="${group.group_id}">
      <header>
        <h2>group ${group.group_id} · ${group.members.length} frames</h2>
        <button data-action="close-group">×</button>
      </header>
      <div class="members">${members}</div>
    </aside>`;
}
