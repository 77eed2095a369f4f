// UI state and its URL round trip. Every piece of session state lives in
// the query string so review sessions are shareable links; the query
// draft always serializes to the service's search schema.
import type { SearchQueryBody, SearchWeightsBody } from "./types.js";

export type Tab = "proposals" | "search";

export interface WeightsDraft {
  aesthetic: number;
  semantic: number;
  logo: number;
  facePosition: number;
  onFaceFocus: number;
  faceAggregation: "max" | "mean";
}

export interface QueryDraft {
  minFaces: number | null;
  maxFaces: number | null;
  emotions: string[];
  eyesOpenOnly: boolean;
  clusterIds: number[];
  shotScales: string[];
  keywords: string[];
  reverse: boolean;
  weights: WeightsDraft;
}

export interface UiState {
  video: string | null;
  tab: Tab;
  aspect: string;
  preset: string;
  openSections: string[];
  expandedGroup: number | null;
  page: number;
  pageSize: number;
  query: QueryDraft;
}

export const DEFAULT_WEIGHTS: WeightsDraft = {
  aesthetic: 1,
  semantic: 1,
  logo: 1,
  facePosition: 1,
  onFaceFocus: 1,
  faceAggregation: "max",
};

export function defaultState(): UiState {
  return {
    video: null,
    tab: "proposals",
    aspect: "original",
    preset: "main-characters",
    openSections: [],
    expandedGroup: null,
    page: 1,
    pageSize: 24,
    query: {
      minFaces: null,
      maxFaces: null,
      emotions: [],
      eyesOpenOnly: false,
      clusterIds: [],
      shotScales: [],
      keywords: [],
      reverse: false,
      weights: { ...DEFAULT_WEIGHTS },
    },
  };
}

// Switching aspect resets pagination and any open group expansion.
export function withAspect(state: UiState, aspect: string): UiState {
  return { ...state, aspect, page: 1, expandedGroup: null };
}

const WEIGHT_KEYS: [keyof WeightsDraft & string, string][] = [
  ["aesthetic", "wa"],
  ["semantic", "ws"],
  ["logo", "wl"],
  ["facePosition", "wp"],
  ["onFaceFocus", "wf"],
];

export function stateToParams(state: UiState): URLSearchParams {
  const params = new URLSearchParams();
  const defaults = defaultState();
  if (state.video) params.set("video", state.video);
  if (state.tab !== defaults.tab) params.set("tab", state.tab);
  if (state.aspect !== defaults.aspect) params.set("aspect", state.aspect);
  if (state.preset !== defaults.preset) params.set("preset", state.preset);
  if (state.openSections.length) params.set("open", state.openSections.join("|"));
  if (state.expandedGroup !== null) params.set("group", String(state.expandedGroup));
  if (state.page !== 1) params.set("page", String(state.page));
  if (state.pageSize !== defaults.pageSize) params.set("n", String(state.pageSize));

  const q = state.query;
  if (q.minFaces !== null) params.set("min_faces", String(q.minFaces));
  if (q.maxFaces !== null) params.set("max_faces", String(q.maxFaces));
  if (q.emotions.length) params.set("emotions", q.emotions.join(","));
  if (q.eyesOpenOnly) params.set("eyes_open", "1");
  if (q.clusterIds.length) params.set("clusters", q.clusterIds.join(","));
  if (q.shotScales.length) params.set("scales", q.shotScales.join(","));
  if (q.keywords.length) params.set("kw", q.keywords.join("|"));
  if (q.reverse) params.set("reverse", "1");
  for (const [field, key] of WEIGHT_KEYS) {
    const value = q.weights[field] as number;
    if (value !== 1) params.set(key, String(value));
  }
  if (q.weights.faceAggregation !== "max") {
    params.set("agg", q.weights.faceAggregation);
  }
  return params;
}

function intOrNull(value: string | null): number | null {
  if (value === null || value === "") return null;
  const n = Number.parseInt(value, 10);
  return Number.isFinite(n) ? n : null;
}

function floatOr(value: string | null, fallback: number): number {
  if (value === null) return fallback;
  const n = Number.parseFloat(value);
  return Number.isFinite(n) && n >= 0 ? n : fallback;
}

function list(value: string | null, sep = ","): string[] {
  return value ? value.split(sep).filter((v) => v.length > 0) : [];
}

export function stateFromParams(params: URLSearchParams): UiState {
  const state = defaultState();
  state.video = params.get("video");
  const tab = params.get("tab");
  if (tab === "search" || tab === "proposals") state.tab = tab;
  state.aspect = params.get("aspect") ?? state.aspect;
  state.preset = params.get("preset") ?? state.preset;
  state.openSections = list(params.get("open"), "|");
  state.expandedGroup = intOrNull(params.get("group"));
  state.page = intOrNull(params.get("page")) ?? 1;
  state.pageSize = intOrNull(params.get("n")) ?? state.pageSize;

  const q = state.query;
  q.minFaces = intOrNull(params.get("min_faces"));
  q.maxFaces = intOrNull(params.get("max_faces"));
  q.emotions = list(params.get("emotions"));
  q.eyesOpenOnly = params.get("eyes_open") === "1";
  q.clusterIds = list(params.get("clusters"))
    .map((v) => Number.parseInt(v, 10))
    .filter((v) => Number.isFinite(v));
  q.shotScales = list(params.get("scales"));
  q.keywords = list(params.get("kw"), "|");
  q.reverse = params.get("reverse") === "1";
  for (const [field, key] of WEIGHT_KEYS) {
    (q.weights[field] as number) = floatOr(params.get(key), 1);
  }
  const agg = params.get("agg");
  if (agg === "mean") q.weights.faceAggregation = "mean";
  return state;
}

export function weightsToBody(weights: WeightsDraft): SearchWeightsBody {
  return {
    aesthetic: weights.aesthetic,
    semantic: weights.semantic,
    logo: weights.logo,
    face_position: weights.facePosition,
    on_face_focus: weights.onFaceFocus,
    face_aggregation: weights.faceAggregation,
  };
}

export function queryToBody(state: UiState): SearchQueryBody {
  const q = state.query;
  const body: SearchQueryBody = {
    aspect: state.aspect,
    weights: weightsToBody(q.weights),
    page: state.page,
    page_size: state.pageSize,
  };
  if (q.minFaces !== null) body.min_faces = q.minFaces;
  if (q.maxFaces !== null) body.max_faces = q.maxFaces;
  if (q.emotions.length) body.emotions = q.emotions;
  if (q.eyesOpenOnly) body.eyes_open_only = true;
  if (q.clusterIds.length) body.cluster_ids = q.clusterIds;
  if (q.shotScales.length) body.shot_scales = q.shotScales;
  if (q.keywords.length) body.keywords = q.keywords;
  if (q.reverse) body.reverse = true;
  return body;
}
