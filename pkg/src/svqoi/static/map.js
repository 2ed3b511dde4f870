// SVG choropleth of the region polygons, shaded by the served Q values, with
// optional coverage-hole and per-cell sample-count overlays. Scaling a Q into
// a fill opacity or a count into a dot radius is presentation; the underlying
// numbers are carried through verbatim (data-q, <title>).
const W = 640;
const H = 420;
const PAD = 12;
const SVG_NS = "http://www.w3.org/2000/svg";
function collectRings(fc) {
    const rings = [];
    for (const f of fc.features) {
        const g = f.geometry;
        if (g.type === "Polygon")
            rings.push(...g.coordinates);
        else if (g.type === "MultiPolygon")
            for (const poly of g.coordinates)
                rings.push(...poly);
    }
    return rings;
}
function projector(fc) {
    let minLon = Infinity, maxLon = -Infinity, minLat = Infinity, maxLat = -Infinity;
    for (const ring of collectRings(fc)) {
        for (const [lon, lat] of ring) {
            minLon = Math.min(minLon, lon);
            maxLon = Math.max(maxLon, lon);
            minLat = Math.min(minLat, lat);
            maxLat = Math.max(maxLat, lat);
        }
    }
    const sx = (W - 2 * PAD) / Math.max(maxLon - minLon, 1e-12);
    const sy = (H - 2 * PAD) / Math.max(maxLat - minLat, 1e-12);
    const s = Math.min(sx, sy);
    return ([lon, lat]) => [PAD + (lon - minLon) * s, H - PAD - (lat - minLat) * s];
}
export class RegionMap {
    constructor(root) {
        this.toXY = null;
        this.paths = new Map();
        this.svg = document.createElementNS(SVG_NS, "svg");
        this.svg.setAttribute("viewBox", `0 0 ${W} ${H}`);
        this.svg.classList.add("region-map");
        this.regionLayer = document.createElementNS(SVG_NS, "g");
        this.holeLayer = document.createElementNS(SVG_NS, "g");
        this.dotLayer = document.createElementNS(SVG_NS, "g");
        this.svg.append(this.regionLayer, this.dotLayer, this.holeLayer);
        root.append(this.svg);
    }
    setRegions(fc) {
        this.toXY = projector(fc);
        this.regionLayer.textContent = "";
        this.paths.clear();
        for (const f of fc.features) {
            const rid = String(f.properties.region_id ?? "");
            const g = f.geometry;
            const polys = g.type === "Polygon" ? [g.coordinates] : g.coordinates;
            const d = polys
                .map((rings) => rings
                .map((ring) => "M" + ring.map((pt) => this.toXY(pt).map((v) => v.toFixed(2)).join(",")).join("L") + "Z")
                .join(""))
                .join("");
            const path = document.createElementNS(SVG_NS, "path");
            path.setAttribute("d", d);
            path.classList.add("region-shape");
            path.dataset.region = rid;
            path.append(document.createElementNS(SVG_NS, "title"));
            this.regionLayer.append(path);
            this.paths.set(rid, path);
        }
    }
    colorByScores(payload) {
        const qs = payload.segments.map((s) => s.Q);
        const max = Math.max(...qs, 0);
        for (const seg of payload.segments) {
            const path = this.paths.get(seg.region_id);
            if (!path)
                continue;
            path.dataset.q = String(seg.Q);
            path.dataset.rank = String(seg.rank);
            path.style.fillOpacity = String(max > 0 ? 0.15 + 0.85 * (seg.Q / max) : 0.15);
            const title = path.querySelector("title");
            if (title)
                title.textContent = `${seg.region_id} — rank ${seg.rank}, Q=${String(seg.Q)}`;
        }
    }
    showHoles(fc) {
        if (!this.toXY)
            return;
        this.holeLayer.textContent = "";
        for (const f of fc.features) {
            if (f.geometry.type !== "LineString")
                continue;
            const pts = f.geometry.coordinates
                .map((pt) => this.toXY(pt).map((v) => v.toFixed(2)).join(","))
                .join(" ");
            const line = document.createElementNS(SVG_NS, "polyline");
            line.setAttribute("points", pts);
            line.classList.add("hole");
            const title = document.createElementNS(SVG_NS, "title");
            title.textContent = `hole: ${String(f.properties.cells)} cells, ${String(f.properties.length_m)} m`;
            line.append(title);
            this.holeLayer.append(line);
        }
    }
    clearHoles() {
        this.holeLayer.textContent = "";
    }
    showDistribution(fc) {
        if (!this.toXY)
            return;
        this.dotLayer.textContent = "";
        const counts = fc.features.map((f) => Number(f.properties.count ?? 0));
        const max = Math.max(...counts, 1);
        for (const f of fc.features) {
            if (f.geometry.type !== "Point")
                continue;
            const [x, y] = this.toXY(f.geometry.coordinates);
            const count = Number(f.properties.count ?? 0);
            if (count === 0)
                continue;
            const dot = document.createElementNS(SVG_NS, "circle");
            dot.setAttribute("cx", x.toFixed(2));
            dot.setAttribute("cy", y.toFixed(2));
            dot.setAttribute("r", (1.2 + 3.8 * Math.sqrt(count / max)).toFixed(2));
            dot.classList.add("sample-dot");
            dot.dataset.count = String(count);
            this.dotLayer.append(dot);
        }
    }
    clearDistribution() {
        this.dotLayer.textContent = "";
    }
}
