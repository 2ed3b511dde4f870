import { fetchDistribution, fetchHoles, fetchRegions, fetchRegionsGeojson, fetchScores, previewFilter } from "./api.js";
import { initFilterPanel } from "./filter.js";
import { RegionMap } from "./map.js";
import { renderRanking } from "./ranking.js";
const liveClient = {
    scores: fetchScores,
    regions: fetchRegions,
    regionsGeojson: fetchRegionsGeojson,
    holes: fetchHoles,
    distribution: fetchDistribution,
    filter: previewFilter,
};
function input(doc, id) {
    return doc.getElementById(id);
}
function epochSeconds(value) {
    if (value === "")
        return undefined;
    const ms = Date.parse(`${value}T00:00:00Z`);
    return Number.isNaN(ms) ? undefined : Math.floor(ms / 1000);
}
export function currentQuery(doc) {
    const q = {
        weights: [
            Number(input(doc, "alpha").value),
            Number(input(doc, "beta").value),
            Number(input(doc, "gamma").value),
        ],
        metric: doc.getElementById("metric").value,
    };
    const from = epochSeconds(input(doc, "from").value);
    const to = epochSeconds(input(doc, "to").value);
    if (from !== undefined)
        q.from = from;
    if (to !== undefined)
        q.to = to;
    return q;
}
export function initDashboard(doc, client = liveClient) {
    const statusEl = doc.getElementById("status");
    const rankingEl = doc.getElementById("ranking");
    const map = new RegionMap(doc.getElementById("map"));
    const holeRegion = doc.getElementById("hole-region");
    let lastTask = Promise.resolve();
    const refresh = async () => {
        for (const id of ["alpha", "beta", "gamma"])
            doc.getElementById(`${id}-value`).textContent =
                input(doc, id).value;
        try {
            const payload = await client.scores(currentQuery(doc));
            renderRanking(rankingEl, payload);
            map.colorByScores(payload);
            statusEl.textContent =
                `metric ${payload.metric}, weights ${payload.weights.join(",")}, ` +
                    `window ${payload.window.from}–${payload.window.to}`;
        }
        catch (err) {
            statusEl.textContent = `error: ${err.message}`;
        }
    };
    const updateOverlays = async () => {
        const region = holeRegion.value;
        if (!region)
            return;
        try {
            if (input(doc, "show-holes").checked) {
                const minRun = Math.max(1, Number(input(doc, "min-run").value) || 1);
                map.showHoles(await client.holes(region, minRun));
            }
            else {
                map.clearHoles();
            }
            if (input(doc, "show-distribution").checked) {
                map.showDistribution(await client.distribution(region));
            }
            else {
                map.clearDistribution();
            }
        }
        catch (err) {
            statusEl.textContent = `error: ${err.message}`;
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
        }
        catch (err) {
            statusEl.textContent = `error: ${err.message}`;
        }
        await refresh();
    })();
    return { refresh, updateOverlays, pending: () => lastTask, map };
}
