// Filter panel: every widget maps one-to-one onto a search-query field.
// Rendering returns HTML strings; readFilterForm maps a flat name/value
// bag (as produced by FormData) back into the query draft.
import { escapeHtml } from "./gallery.js";
import type { QueryDraft, UiState, WeightsDraft } from "./state.js";
import { DEFAULT_WEIGHTS } from "./state.js";
import type { SearchFacets, VideoDetail } from "./types.js";

const EMOTIONS = [
  "neutral",
  "anger",
  "fear",
  "happiness",
  "sadness",
  "surprise",
  "disgust",
  "contempt",
];
const SHOT_SCALES = ["long", "medium", "close-up"];

function checkbox(
  name: string,
  value: string,
  checked: boolean,
  label: string,
  count?: number,
): string {
  const badge = count !== undefined ? ` <span class="count">${count}</span>` : "";
  return `
    <label class="check">
      <input type="checkbox" name="${name}" value="${escapeHtml(value)}"
             ${checked ? "checked" : ""}> ${escapeHtml(label)}${badge}
    </label>`;
}

function weightSlider(key: string, label: string, value: number): string {
  return `
    <label class="slider">
      <span>${label}</span>
      <input type="range" name="w_${key}" min="0" max="3" step="0.1"
             value="${value}" list="weight-ticks">
      <output>${value.toFixed(1)}</output>
    </label>`;
}

export function renderFilterPanel(
  state: UiState,
  detail: VideoDetail,
  facets: SearchFacets | null,
): string {
  const q = state.query;
  const aspects = detail.aspects
    .map(
      (a) =>
        `<option value="${escapeHtml(a)}" ${a === state.aspect ? "selected" : ""}>${escapeHtml(a)}</option>`,
    )
    .join("");
  const emotions = EMOTIONS.map((e) =>
    checkbox("emotions", e, q.emotions.includes(e), e, facets?.emotions?.[e]),
  ).join("");
  const scales = SHOT_SCALES.map((s) =>
    checkbox("shot_scales", s, q.shotScales.includes(s), s, facets?.shot_scales?.[s]),
  ).join("");
  const clusters = detail.face_clusters
    .map((c) =>
      checkbox(
        "cluster_ids",
        String(c.cluster_id),
        q.clusterIds.includes(c.cluster_id),
        `identity ${c.cluster_id} (${c.members} faces)`,
        facets?.clusters?.[String(c.cluster_id)],
      ),
    )
    .join("");
  const keywords = detail.video.keywords
    .map((k) =>
      checkbox("keywords", k.text, q.keywords.includes(k.text), k.text),
    )
    .join("");
  const w = q.weights;
  return `
    <form class="filter-panel" data-role="filters">
      <fieldset>
        <legend>aspect ratio</legend>
        <select name="aspect">${aspects}</select>
      </fieldset>
      <fieldset>
        <legend>faces</legend>
        <label>count <input type="number" name="min_faces" min="0" placeholder="min"
               value="${q.minFaces ?? ""}"> –
               <input type="number" name="max_faces" min="0" placeholder="max"
               value="${q.maxFaces ?? ""}"></label>
        ${checkbox("eyes_open_only", "1", q.eyesOpenOnly, "open eyes only")}
        <div class="group">${clusters || "<em>no identity clusters</em>"}</div>
      </fieldset>
      <fieldset><legend>emotions</legend>${emotions}</fieldset>
      <fieldset><legend>shot scale</legend>${scales}</fieldset>
      <fieldset>
        <legend>keywords</legend>
        ${keywords}
        <div class="add-keyword">
          <input type="text" name="new_keyword" placeholder="add keyword…">
          <button type="button" data-action="add-keyword">add</button>
        </div>
      </fieldset>
      <fieldset>
        <legend>score weights</legend>
        ${weightSlider("aesthetic", "aesthetic", w.aesthetic)}
        ${weightSlider("semantic", "semantic", w.semantic)}
        ${weightSlider("logo", "logo room", w.logo)}
        ${weightSlider("face_position", "face position", w.facePosition)}
        ${weightSlider("on_face_focus", "on-face focus", w.onFaceFocus)}
        <label class="check">face aggregation
          <select name="face_aggregation">
            <option value="max" ${w.faceAggregation === "max" ? "selected" : ""}>max</option>
            <option value="mean" ${w.faceAggregation === "mean" ? "selected" : ""}>mean</option>
          </select>
        </label>
      </fieldset>
      ${checkbox("reverse", "1", q.reverse, "reverse order (worst first)")}
      <button type="submit" data-action="search">search</button>
    </form>`;
}

export interface FormBag {
  // single-valued fields map to string, multi-valued to string[]
  [name: string]: string | string[] | undefined;
}

function asList(value: string | string[] | undefined): string[] {
  if (value === undefined) return [];
  return Array.isArray(value) ? value : [value];
}

function asIntOrNull(value: string | string[] | undefined): number | null {
  const s = Array.isArray(value) ? value[0] : value;
  if (s === undefined || s === "") return null;
  const n = Number.parseInt(s, 10);
  return Number.isFinite(n) && n >= 0 ? n : null;
}

function asWeight(value: string | string[] | undefined, fallback: number): number {
  const s = Array.isArray(value) ? value[0] : value;
  if (s === undefined) return fallback;
  const n = Number.parseFloat(s);
  return Number.isFinite(n) && n >= 0 ? n : fallback;
}

export function readFilterForm(bag: FormBag): { aspect: string | null; query: QueryDraft } {
  const weights: WeightsDraft = {
    aesthetic: asWeight(bag.w_aesthetic, DEFAULT_WEIGHTS.aesthetic),
    semantic: asWeight(bag.w_semantic, DEFAULT_WEIGHTS.semantic),
    logo: asWeight(bag.w_logo, DEFAULT_WEIGHTS.logo),
    facePosition: asWeight(bag.w_face_position, DEFAULT_WEIGHTS.facePosition),
    onFaceFocus: asWeight(bag.w_on_face_focus, DEFAULT_WEIGHTS.onFaceFocus),
    faceAggregation: bag.face_aggregation === "mean" ? "mean" : "max",
  };
  const query: QueryDraft = {
    minFaces: asIntOrNull(bag.min_faces),
    maxFaces: asIntOrNull(bag.max_faces),
    emotions: asList(bag.emotions),
    eyesOpenOnly: asList(bag.eyes_open_only).includes("1"),
    clusterIds: asList(bag.cluster_ids)
      .map((v) => Number.parseInt(v, 10))
      .filter((v) => Number.isFinite(v)),
    shotScales: asList(bag.shot_scales),
    keywords: asList(bag.keywords),
    reverse: asList(bag.reverse).includes("1"),
    weights,
  };
  const aspect = Array.isArray(bag.aspect) ? bag.aspect[0] : bag.aspect;
  return { aspect: aspect ?? null, query };
}
