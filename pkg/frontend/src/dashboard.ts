import type { FeatureCollection, FilterSpec, FilterStats, RegionInfo, ScoreQuery, ScoresPayload } from "./api.js";
import { fetchDistribution, fetchHoles, fetchRegions, fetchRegionsGeojson, fetchScores, previewFilter } from "./api.js";
import { initFilterPanel } from "./filter.js";
import { RegionMap } from "./map.js";
import { renderRanking } from "./ranking.js";

// What-if loop: any control change issues a fresh /api/scores request with
// the full parameter tuple and re-renders from the response. Nothing is
// recomputed or cached client-side.

export interface ServiceClient {
  scores: (q: ScoreQuery) => Promise<ScoresPayload>;
  regions: () => Promise<RegionInfo[]>;
  regionsGeojson: () => Promise<FeatureCollection>;
  holes: (regionId: string, minRun: number) => Promise<FeatureCollection>;
  distribution: (regionId: string, day?: number) => Promise<FeatureCollection>;
  filter: (spec: FilterSpec) => Promise<FilterStats>;
}

const liveClient: ServiceClient = {
  scores: fetchScores,
  regions: fetchRegions,
  regionsGeojson: fetchRegionsGeojson,
  holes: fetchHoles,
  distribution: fetchDistribution,
  filter: previewFilter,
};

function input(doc: Document, id: string): HTMLInputElement {
  return doc.getElementById(id) as HTMLInputElement;
}

function epochSeconds(value: string): number | undefined {
  if (value === "") return undefined;
  const ms = Date.parse(`${value}T00:00:00Z`);
  return Number.isNaN(ms) ? undefined : Math.floor(ms / 1000);
}

export function currentQuery(doc: Document): ScoreQuery {
  const q: ScoreQuery = {
    weights: [
      Number(input(doc, "alpha").value),
      Number(input(doc, "beta").value),
      Number(input(doc, "gamma").value),
    ],
    metric: (doc.getElementById("metric") as HTMLSelectElement).value,
  };
  const from = epochSeconds(input(doc, "from").value);
  const to = epochSeconds(input(doc, "to").value);
  if (from !== undefined) q.from = from;
  if (to !== undefined) q.to = to;
  return q;
}

export interface DashboardHandle {
  refresh: () => Promise<void>;
  updateOverlays: () => Promise<void>;
  pending: () => Promise<void>;
  map: RegionMap;
}

export function initDashboard(
  doc: Document,
  client: ServiceClient = liveClient,
): DashboardHandle {
  const statusEl = doc.getElementById("status") as HTMLElement;
  const rankingEl = doc.getElementById("ranking") as HTMLElement;
  const map = new RegionMap(doc.getElementById("map") as HTMLElement);
  const holeRegion = doc.getElementById("hole-region") as HTMLSelectElement;

  let lastTask: Promise<void> = Promise.resolve();

  const refresh = async (): Promise<void> => {
    for (const id of ["alpha", "beta", "gamma"])
      (doc.getElementById(`${id}-value`) as HTMLElement).textContent =
        input(doc, id).value;
    try {
      const payload = await client.scores(currentQuery(doc));
      renderRanking(rankingEl, payload);
      map.colorByScores(payload);
      statusEl.textContent =
        `metric ${payload.metric}, weights ${payload.weights.join(",")}, ` +
        `window ${payload.window.from}–${payload.window.to}`;
    } catch (err) {
      statusEl.textContent = `error: ${(err as Error).message}`;
    }
  };

  const updateOverlays = async (): Promise<void> => {
    const region = holeRegion.value;
    if (!region) return;
    try {
      if (input(doc, "show-holes").checked) {
        const minRun = Math.max(1, Number(input(doc, "min-run").value) || 1);
        map.showHoles(await client.holes(region, minRun));
      } else {
        map.clearHoles();
      }
      if (input(doc, "show-distribution").checked) {
        map.showDistribution(await client.distribution(region));
      } else {
        map.clearDistribution();
      }
    } catch (err) {
      statusEl.textContent = `error: ${(err as Error).message}`;
    }
  };

  for (const id of ["alpha", "beta", "gamma", "metric", "from", "to"]) {
    doc.getElementById(id)?.addEventListener("change", () => {
      lastTask = refresh();
    });
  }
  for (const id of ["hole-region", "min-run", "show-holes", "show-distribution"]) {
    doc.getElementById(id)?.addEventListener("change", () => {
      lastTask = updateOverlays();
    });
  }
  initFilterPanel(doc, client.filter);

  lastTask = (async () => {
    try {
      const [regions, geojson] = await Promise.all([
        client.regions(),
        client.regionsGeojson(),
      ]);
      map.setRegions(geojson);
      holeRegion.textContent = "";
      for (const r of regions) {
        const opt = doc.createElement("option");
        opt.value = r.region_id;
        opt.textContent = `${r.region_id} (${r.record_count} records)`;
        holeRegion.append(opt);
      }
    } catch (err) {
      statusEl.textContent = `error: ${(err as Error).message}`;
    }
    await refresh();
  })();

  return { refresh, updateOverlays, pending: () => lastTask, map };
}
