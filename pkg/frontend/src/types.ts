// Shapes of the review-service API. The UI never computes scores; these
// types carry the server's numbers verbatim.

export interface RawScores {
  aesthetic: number;
  semantic: Record<string, number>;
  logo: number;
  face_position: number | null;
  on_face_focus: number | null;
}

export interface CandidateScores {
  raw: RawScores;
  normalized: Record<string, number | null>;
  final: number;
}

export interface Candidate {
  candidate_id: string;
  frame_id: number;
  group_id: number;
  aspect: string;
  rect: [number, number, number, number];
  face_ids: string[];
  face_centered: boolean;
  scores: CandidateScores;
}

export interface VideoSummary {
  video_id: string;
  title: string;
  frame_count: number;
  duration_s: number;
  aspects: string[];
}

export interface FaceClusterSummary {
  cluster_id: number;
  size: number;
  rank: number;
  members: number;
}

export interface VideoDetail {
  video: {
    video_id: string;
    title: string;
    summary: string;
    fps: number;
    frame_count: number;
    duration_s: number;
    embedding_dim: number;
    keywords: { text: string; source: string }[];
  };
  dataset_digest: string;
  aspects: string[];
  letterbox: [number, number];
  counts: Record<string, number>;
  face_clusters: FaceClusterSummary[];
  cluster_tuning: {
    chosen_k: number;
    score_curve: [number, number][];
    manual_parameters_needed: boolean;
  };
}

export interface ProposalSection {
  key: string;
  reason: string | null;
  entries: Candidate[];
}

export interface ProposalsResponse {
  preset: string;
  aspect: string;
  reason: string | null;
  sections: ProposalSection[];
}

export interface SearchWeightsBody {
  aesthetic?: number;
  semantic?: number;
  logo?: number;
  face_position?: number;
  on_face_focus?: number;
  face_aggregation?: "max" | "mean";
}

export interface SearchQueryBody {
  aspect: string;
  min_faces?: number | null;
  max_faces?: number | null;
  emotions?: string[];
  eyes_open_only?: boolean;
  cluster_ids?: number[];
  shot_scales?: string[];
  keywords?: string[];
  weights?: SearchWeightsBody;
  reverse?: boolean;
  page?: number;
  page_size?: number;
}

export interface SearchFacets {
  face_counts: Record<string, number>;
  emotions: Record<string, number>;
  shot_scales: Record<string, number>;
  clusters: Record<string, number>;
  eyes: Record<string, number>;
}

export interface SearchResponse {
  hits: Candidate[];
  total: number;
  page: number;
  page_size: number;
  facets: SearchFacets;
}

export interface GroupMember {
  frame_id: number;
  variants: Record<string, Candidate>;
}

export interface GroupResponse {
  group_id: number;
  representatives: Record<string, string>;
  members: GroupMember[];
}

export interface SelectionRecord {
  video_id: string;
  candidate_id: string;
  aspect: string;
  chosen_by: string;
  chosen_at: number;
  note: string;
}

export interface SelectionsResponse {
  records: SelectionRecord[];
  latest: Record<string, SelectionRecord>;
}

export interface Histogram {
  edges: number[];
  counts: number[];
  n: number;
}

export interface DistributionsResponse {
  distributions: Record<string, Record<string, Histogram>>;
}

export interface ApiErrorBody {
  error: { code: string; message: string; fields: Record<string, string> };
}
