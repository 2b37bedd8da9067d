import type { Batch, CurvePoint, Metrics, ProjectInfo, Proposal } from "../src/types.js";

export function proposal(overrides: Partial<Proposal> = {}): Proposal {
  return {
    proposal_id: "b000001-img0-0",
    image_id: "img0",
    box: { cx: 0.5, cy: 0.5, w: 0.25, h: 0.25 },
    class_id: 0,
    class_name: "disk",
    confidence: 0.8,
    class_distribution: [0.7, 0.2, 0.1],
    ...overrides,
  };
}

/** Two images, three proposals in all. */
export function smallBatch(): Batch {
  return {
    batch_id: "b000001",
    batch_value: 1.5,
    images: [
      {
        image_id: "img0",
        value: 1.0,
        proposals: [
          proposal({ proposal_id: "b000001-img0-0" }),
          proposal({
            proposal_id: "b000001-img0-1",
            class_id: 1,
            class_name: "square",
            class_distribution: [0.2, 0.6, 0.2],
            box: { cx: 0.2, cy: 0.3, w: 0.2, h: 0.3 },
          }),
        ],
      },
      {
        image_id: "img1",
        value: 0.5,
        proposals: [
          proposal({
            proposal_id: "b000001-img1-0",
            image_id: "img1",
            class_id: 2,
            class_name: "triangle",
            class_distribution: [0.1, 0.2, 0.7],
          }),
        ],
      },
    ],
  };
}

export function projectInfo(overrides: Partial<ProjectInfo> = {}): ProjectInfo {
  return {
    id: "p42",
    class_names: ["disk", "square", "triangle"],
    metric: "sum",
    lambda: 0.5,
    update_iterations: 100,
    batch_size: 2,
    image_size: 48,
    pool: { unlabeled: 4, staged: 0, labeled: 0 },
    busy: false,
    pending_batch_id: null,
    digest: "d0",
    ...overrides,
  };
}

export function curvePoint(overrides: Partial<CurvePoint> = {}): CurvePoint {
  return {
    step: 1,
    labeled_count: 2,
    map_labeled: 0.4,
    loss_first: 2.0,
    loss_last: 0.5,
    duration_s: 0.1,
    ...overrides,
  };
}

export function metricsPayload(points: CurvePoint[]): Metrics {
  return { curve: points, pool: { unlabeled: 2, staged: 0, labeled: 2 } };
}

/** Response-shaped object for mocked fetch functions. */
export function jsonResponse(status: number, body: unknown): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    statusText: String(status),
    json: async () => body,
  } as unknown as Response;
}
