/** Shared wire types mirroring the annotation service's JSON contracts. */

export type Vec2 = [number, number];

/** The closed 11-value visual-condition vocabulary, as serialized. */
export const VISUAL_TAGS = [
  "sunny",
  "overcast",
  "rainy",
  "winter",
  "fog",
  "glare",
  "night",
  "infrared",
  "occlusion_car",
  "occlusion_tree",
  "distortion",
] as const;

export type VisualTag = (typeof VISUAL_TAGS)[number];

export interface LotDoc {
  id: string;
  quad?: Vec2[];
  rect?: [Vec2, Vec2];
  occupied: boolean | null;
}

export interface AnnotationDoc {
  image: string;
  width: number;
  height: number;
  tags: string[];
  lots: LotDoc[];
}

export interface ImageSummary {
  id: string;
  path: string;
  lot_count: number;
  labeled_count: number;
  tags: string[];
  revision: number;
}

export interface AnnotationEnvelope {
  revision: number;
  annotation: AnnotationDoc;
}

export interface DetectionDoc {
  bbox: [number, number, number, number];
  score: number;
  label: string;
}

export type Heuristic = "h1" | "h2";

export interface PreviewResult {
  lot_id: string;
  ratio: number;
  decided: "occupied" | "free";
  supporting_detection: number | null;
}

export interface PreviewResponse {
  image: string;
  results: PreviewResult[];
}
