// Typed client for the scoring service. Every number displayed anywhere in
// the dashboard comes out of these payloads untouched: the client never
// computes or corrects S/T/C/Q itself.

export interface Segment {
  region_id: string;
  s_raw: number;
  t_raw: number;
  c_raw: number;
  S: number;
  T: number;
  C: number;
  Q: number;
  rank: number;
}

export interface ScoresPayload {
  metric: string;
  weights: number[];
  window: { from: number; to: number };
  segments: Segment[];
}

export interface RegionInfo {
  region_id: string;
  cell_count: number;
  record_count: number;
  day_range: [number, number] | null;
}

export interface FilterStats {
  input_count: number;
  kept_count: number;
  reduction_pct: number;
}

export interface FilterSpec {
  region_ids?: string[];
  t0?: number;
  t1?: number;
  days_of_week?: number[];
  hours_of_day?: number[];
  min_brightness?: number;
  min_S?: number;
  min_T?: number;
  min_C?: number;
}

export interface GeoFeature {
  type: "Feature";
  geometry: { type: string; coordinates: unknown };
  properties: Record<string, unknown>;
}

export interface FeatureCollection {
  type: "FeatureCollection";
  features: GeoFeature[];
}

export interface ScoreQuery {
  weights: [number, number, number];
  metric: string;
  from?: number;
  to?: number;
  seed?: number;
}

export const API_BASE = "";

export function scoresUrl(q: ScoreQuery): string {
  const params = new URLSearchParams();
  params.set("weights", q.weights.join(","));
  params.set("metric", q.metric);
  if (q.from !== undefined) params.set("from", String(q.from));
  if (q.to !== undefined) params.set("to", String(q.to));
  if (q.seed !== undefined) params.set("seed", String(q.seed));
  return `${API_BASE}/api/scores?${params.toString()}`;
}

async function getJson<T>(url: string): Promise<T> {
  const r = await fetch(url);
  const body = await r.json();
  if (!r.ok) throw new Error(body?.error ?? `request failed (${r.status})`);
  return body as T;
}

export function fetchScores(q: ScoreQuery): Promise<ScoresPayload> {
  return getJson<ScoresPayload>(scoresUrl(q));
}

export function fetchRegions(): Promise<RegionInfo[]> {
  return getJson<RegionInfo[]>(`${API_BASE}/api/regions`);
}

export function fetchRegionsGeojson(): Promise<FeatureCollection> {
  return getJson<FeatureCollection>(`${API_BASE}/api/regions.geojson`);
}

export function fetchHoles(regionId: string, minRun: number): Promise<FeatureCollection> {
  const id = encodeURIComponent(regionId);
  return getJson<FeatureCollection>(`${API_BASE}/api/holes/${id}?min_run=${minRun}`);
}

export function fetchDistribution(regionId: string, day?: number): Promise<FeatureCollection> {
  const id = encodeURIComponent(regionId);
  const suffix = day === undefined ? "" : `?day=${day}`;
  return getJson<FeatureCollection>(`${API_BASE}/api/distribution/${id}${suffix}`);
}

export async function previewFilter(spec: FilterSpec): Promise<FilterStats> {
  const r = await fetch(`${API_BASE}/api/filter`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(spec),
  });
  const body = await r.json();
  if (!r.ok) throw new Error(body?.error ?? `request failed (${r.status})`);
  return body as FilterStats;
}
