// Rows appear strictly in the server-assigned rank order (ties by region id,
// matching the server's own tie rule), and every score is printed exactly as
// received. Bar widths are presentation only.
function bar(cls, label, value) {
    const wrap = document.createElement("div");
    wrap.className = "bar-wrap";
    const fill = document.createElement("div");
    fill.className = `bar ${cls}`;
    fill.style.width = `${Math.max(0, Math.min(1, value)) * 100}%`;
    const text = document.createElement("span");
    text.className = "bar-label";
    text.textContent = `${label}=${String(value)}`;
    wrap.append(fill, text);
    return wrap;
}
function row(seg) {
    const el = document.createElement("div");
    el.className = "rank-row";
    el.dataset.region = seg.region_id;
    el.dataset.rank = String(seg.rank);
    const badge = document.createElement("span");
    badge.className = "rank-badge";
    badge.textContent = `#${seg.rank}`;
    const name = document.createElement("span");
    name.className = "region-name";
    name.textContent = seg.region_id;
    const q = document.createElement("span");
    q.className = "q-value";
    q.textContent = `Q=${String(seg.Q)}`;
    const bars = document.createElement("div");
    bars.className = "bars";
    bars.append(bar("s", "S", seg.S), bar("t", "T", seg.T), bar("c", "C", seg.C));
    el.append(badge, name, q, bars);
    return el;
}
export function renderRanking(root, payload) {
    const ordered = [...payload.segments].sort((a, b) => a.rank - b.rank || a.region_id.localeCompare(b.region_id));
    root.textContent = "";
    for (const seg of ordered)
        root.append(row(seg));
}
export function rankedRegionIds(root) {
    return [...root.querySelectorAll(".rank-row")].map((el) => el.dataset.region ?? "");
}
