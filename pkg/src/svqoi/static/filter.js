import { previewFilter } from "./api.js";
// Filter preview panel: collects only the fields the user actually set into
// a spec, posts it, and prints the returned counts without reformatting —
// the reduction percentage is the server's number, verbatim.
export function readFilterSpec(root) {
    const spec = {};
    const dows = [];
    for (let d = 0; d < 7; d++) {
        const box = root.querySelector(`#dow-${d}`);
        if (box?.checked)
            dows.push(d);
    }
    if (dows.length)
        spec.days_of_week = dows;
    const num = (id) => {
        const el = root.querySelector(`#${id}`);
        return el && el.value !== "" ? Number(el.value) : undefined;
    };
    const brightness = num("min-brightness");
    if (brightness !== undefined)
        spec.min_brightness = brightness;
    const minS = num("min-s");
    if (minS !== undefined)
        spec.min_S = minS;
    const minT = num("min-t");
    if (minT !== undefined)
        spec.min_T = minT;
    const minC = num("min-c");
    if (minC !== undefined)
        spec.min_C = minC;
    const regions = root.querySelector("#filter-regions");
    if (regions && regions.value.trim() !== "")
        spec.region_ids = regions.value.split(",").map((s) => s.trim()).filter(Boolean);
    return spec;
}
export function renderFilterStats(el, stats) {
    el.textContent =
        `kept ${stats.kept_count} of ${stats.input_count} records — ` +
            `reduction ${String(stats.reduction_pct)}%`;
}
export function initFilterPanel(root, post = previewFilter) {
    const statsEl = root.querySelector("#filter-stats");
    const button = root.querySelector("#filter-preview");
    const preview = async () => {
        if (!statsEl)
            return;
        try {
            renderFilterStats(statsEl, await post(readFilterSpec(root)));
        }
        catch (err) {
            statsEl.textContent = `filter error: ${err.message}`;
        }
    };
    button?.addEventListener("click", () => {
        void preview();
    });
    return { preview };
}
