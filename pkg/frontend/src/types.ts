/** Wire types of the annotation service API. Field names mirror the
 * JSON payloads exactly; every value shown in the UI originates from
 * one of these. */

export interface Box {
  /** Center/size in [0,1] image coordinates. */
  cx: number;
  cy: number;
  w: number;
  h: number;
}

export interface Proposal {
  proposal_id: string;
  image_id: string;
  box: Box;
  class_id: number;
  class_name: string;
  confidence: number;
  class_distribution: number[];
}

export interface BatchImage {
  image_id: string;
  value: number;
  proposals: Proposal[];
}

export interface Batch {
  batch_id: string;
  batch_value: number;
  images: BatchImage[];
}

export interface PoolCounts {
  unlabeled: number;
  staged: number;
  labeled: number;
}

export interface ProjectInfo {
  id: string;
  class_names: string[];
  metric: string;
  lambda: number;
  update_iterations: number;
  batch_size: number;
  image_size: number;
  pool: PoolCounts;
  busy: boolean;
  pending_batch_id: string | null;
  digest: string;
}

export interface CurvePoint {
  step: number;
  labeled_count: number;
  map_labeled: number;
  loss_first: number;
  loss_last: number;
  duration_s: number;
}

export interface Metrics {
  curve: CurvePoint[];
  pool: PoolCounts;
}

export interface TrainResult {
  duration_s: number;
  iterations: number;
  loss_first: number;
  loss_last: number;
  curve_row: CurvePoint;
}

export interface SubmitResult {
  accepted: number;
  staged_images: number;
}

/** One decision per proposal, as the labels endpoint expects it. */
export interface WireDecision {
  proposal_id: string;
  action: "confirm" | "reject" | "reassign";
  class_id?: number;
  new_class_name?: string;
}

/** Manually drawn box, in the same normalized coordinates as proposals. */
export interface WireAddedBox {
  image_id: string;
  class_id: number;
  cx: number;
  cy: number;
  w: number;
  h: number;
}
