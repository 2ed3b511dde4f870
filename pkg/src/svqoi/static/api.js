// Typed client for the scoring service. Every number displayed anywhere in
// the dashboard comes out of these payloads untouched: the client never
// computes or corrects S/T/C/Q itself.
export const API_BASE = "";
export function scoresUrl(q) {
    const params = new URLSearchParams();
    params.set("weights", q.weights.join(","));
    params.set("metric", q.metric);
    if (q.from !== undefined)
        params.set("from", String(q.from));
    if (q.to !== undefined)
        params.set("to", String(q.to));
    if (q.seed !== undefined)
        params.set("seed", String(q.seed));
    return `${API_BASE}/api/scores?${params.toString()}`;
}
async function getJson(url) {
    const r = await fetch(url);
    const body = await r.json();
    if (!r.ok)
        throw new Error(body?.error ?? `request failed (${r.status})`);
    return body;
}
export function fetchScores(q) {
    return getJson(scoresUrl(q));
}
export function fetchRegions() {
    return getJson(`${API_BASE}/api/regions`);
}
export function fetchRegionsGeojson() {
    return getJson(`${API_BASE}/api/regions.geojson`);
}
export function fetchHoles(regionId, minRun) {
    const id = encodeURIComponent(regionId);
    return getJson(`${API_BASE}/api/holes/${id}?min_run=${minRun}`);
}
export function fetchDistribution(regionId, day) {
    const id = encodeURIComponent(regionId);
    const suffix = day === undefined ? "" : `?day=${day}`;
    return getJson(`${API_BASE}/api/distribution/${id}${suffix}`);
}
export async function previewFilter(spec) {
    const r = await fetch(`${API_BASE}/api/filter`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(spec),
    });
    const body = await r.json();
    if (!r.ok)
        throw new Error(body?.error ?? `request failed (${r.status})`);
    return body;
}
