import { readFileSync } from "node:fs";
import { resolve } from "node:path";
import process from "node:process";

import type {
  FeatureCollection,
  FilterSpec,
  ScoreQuery,
  ScoresPayload,
  Segment,
} from "../src/api.js";
import type { ServiceClient } from "../src/dashboard.js";

export function seg(
  region_id: string,
  rank: number,
  values: Partial<Segment> = {},
): Segment {
  return {
    region_id,
    rank,
    s_raw: 0,
    t_raw: 0,
    c_raw: 0,
    S: 0,
    T: 0,
    C: 0,
    Q: 0,
    ...values,
  };
}

export function payload(
  weights: number[],
  segments: Segment[],
  metric = "jsd",
): ScoresPayload {
  return { metric, weights, window: { from: 0, to: 86400 }, segments };
}

/** Mount the real dashboard markup into the jsdom document. */
export function mountShell(): void {
  const html = readFileSync(resolve(process.cwd(), "index.html"), "utf8");
  document.body.innerHTML = html.slice(
    html.indexOf("<body>") + "<body>".length,
    html.indexOf("</body>"),
  );
}

export const emptyCollection: FeatureCollection = {
  type: "FeatureCollection",
  features: [],
};

export const twoRegionGeojson: FeatureCollection = {
  type: "FeatureCollection",
  features: [
    {
      type: "Feature",
      properties: { region_id: "A" },
      geometry: {
        type: "Polygon",
        coordinates: [[[0, 0], [0.001, 0], [0.001, 0.001], [0, 0.001], [0, 0]]],
      },
    },
    {
      type: "Feature",
      properties: { region_id: "B" },
      geometry: {
        type: "MultiPolygon",
        coordinates: [
          [[[0.002, 0], [0.003, 0], [0.003, 0.001], [0.002, 0.001], [0.002, 0]]],
        ],
      },
    },
  ],
};

export interface RecordedCalls {
  scores: ScoreQuery[];
  holes: Array<[string, number]>;
  distribution: string[];
  filter: FilterSpec[];
}

/** In-memory service double that records every request it receives. */
export function stubClient(overrides: Partial<ServiceClient> = {}) {
  const calls: RecordedCalls = { scores: [], holes: [], distribution: [], filter: [] };
  const client: ServiceClient = {
    scores: async (q) => {
      calls.scores.push(q);
      return payload(q.weights, [seg("A", 1, { Q: 3 }), seg("B", 2, { Q: 0 })], q.metric);
    },
    regions: async () => [
      { region_id: "A", cell_count: 80, record_count: 720, day_range: [0, 2] },
      { region_id: "B", cell_count: 80, record_count: 120, day_range: [0, 2] },
    ],
    regionsGeojson: async () => twoRegionGeojson,
    holes: async (regionId, minRun) => {
      calls.holes.push([regionId, minRun]);
      return emptyCollection;
    },
    distribution: async (regionId) => {
      calls.distribution.push(regionId);
      return emptyCollection;
    },
    filter: async (spec) => {
      calls.filter.push(spec);
      return { input_count: 147, kept_count: 21, reduction_pct: 85.71428571428571 };
    },
    ...overrides,
  };
  return { client, calls };
}
