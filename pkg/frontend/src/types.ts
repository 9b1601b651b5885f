// Shapes mirror the triage service JSON exactly; the UI never derives or
// recomputes any of these values.

export interface ReferencePayload {
  url: string;
  title: string | null;
  text: string | null;
}

export interface ReportPayload {
  id: string;
  published: string;
  description: string;
  references: ReferencePayload[];
  cpe: string[];
}

export interface PredictionRow {
  label: string;
  score: number;
  in_cache: boolean;
  recency_index: number | null;
  version_transferred: boolean;
}

export interface AdjustmentInfo {
  boost_base: number;
  magnitude: number;
  window: number;
}

export interface NextPayload {
  report: ReportPayload;
  predictions: PredictionRow[];
  adjustment: AdjustmentInfo;
  position: number;
  remaining: number;
  total: number;
}

export interface ConfirmResponse {
  confirmed: string[];
  cache: { size: number; front: string[] };
  next_id: string | null;
}

export interface KMetrics {
  precision: number;
  recall: number;
  f1: number;
}

export interface StatsPayload {
  confirmed: number;
  remaining: number;
  cache: { size: number; capacity: number };
  metrics: { n: number; k: Record<string, KMetrics>; avg_f1: number } | null;
  unseen_label_hits: number;
}
