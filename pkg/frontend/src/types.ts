// Mirrors docs/api-schema.json (engine repo); the schema test keeps us honest.

export interface SearchHit {
  keyframe_id: string;
  video_id: string;
  timestamp_ms: number;
  score_a: number;
  score_b: number;
  fused: number;
}

export interface VideoGroup {
  video_id: string;
  best: number;
  hits: SearchHit[];
}

export interface TextHit {
  segment_id: string;
  video_id: string;
  source: "ocr" | "asr";
  text: string;
  t_start_ms: number;
  t_end_ms: number;
  score: number;
  matched_terms: string[];
}

export interface VqaAnswer {
  value: "yes" | "no" | "unknown";
  raw: string;
}

export interface RerankHit extends SearchHit {
  yes_count: number;
  unknown_count: number;
  evaluated: boolean;
  answers: VqaAnswer[];
}

export interface RerankResponse {
  hits: RerankHit[];
  degraded: boolean;
}

export interface PerFrameAnswer {
  keyframe_id: string;
  answer: string;
}

export interface QaResponse {
  text: string;
  category: "counting" | "image_info" | "video_info";
  per_frame: PerFrameAnswer[];
  latency_ms: number;
  low_agreement: boolean;
}

export interface KeyframeInfo {
  keyframe_id: string;
  frame_index: number;
  timestamp_ms: number;
  image_uri: string;
}

export interface ErrorBody {
  error: { code: string; message: string };
}

export type PanelId = "fused" | "ocr" | "asr" | "qa";
