import { beforeEach, describe, expect, it } from "vitest";

import type { FeatureCollection } from "../src/api.js";
import { RegionMap } from "../src/map.js";
import { payload, seg, twoRegionGeojson } from "./helpers.js";

let root: HTMLElement;
let map: RegionMap;

beforeEach(() => {
  root = document.createElement("div");
  map = new RegionMap(root);
  map.setRegions(twoRegionGeojson);
});

describe("region layer", () => {
  it("draws one path per region", () => {
    const paths = root.querySelectorAll("path.region-shape");
    expect(paths).toHaveLength(2);
    expect([...paths].map((p) => p.getAttribute("data-region"))).toEqual(["A", "B"]);
  });

  it("tags each region with its served Q and rank, verbatim", () => {
    map.colorByScores(
      payload([1, 1, 1], [seg("A", 1, { Q: 2.718281828 }), seg("B", 2, { Q: 0 })]),
    );
    const a = root.querySelector('path[data-region="A"]')!;
    expect(a.getAttribute("data-q")).toBe("2.718281828");
    expect(a.getAttribute("data-rank")).toBe("1");
    expect(a.querySelector("title")!.textContent).toBe("A — rank 1, Q=2.718281828");
    expect(root.querySelector('path[data-region="B"]')!.getAttribute("data-q")).toBe("0");
  });

  it("ignores segments for regions not on the map", () => {
    map.colorByScores(payload([1, 1, 1], [seg("ZZZ", 1, { Q: 5 })]));
    expect(root.querySelector('path[data-q="5"]')).toBeNull();
  });
});

describe("overlays", () => {
  const holes: FeatureCollection = {
    type: "FeatureCollection",
    features: [
      {
        type: "Feature",
        properties: { region_id: "A", cells: 3, length_m: 30 },
        geometry: { type: "LineString", coordinates: [[0, 0.0001], [0.0003, 0.0001]] },
      },
    ],
  };

  const dots: FeatureCollection = {
    type: "FeatureCollection",
    features: [
      {
        type: "Feature",
        properties: { count: 0 },
        geometry: { type: "Point", coordinates: [0.0001, 0.0001] },
      },
      {
        type: "Feature",
        properties: { count: 5 },
        geometry: { type: "Point", coordinates: [0.0002, 0.0001] },
      },
      {
        type: "Feature",
        properties: { count: 2 },
        geometry: { type: "Point", coordinates: [0.0003, 0.0001] },
      },
    ],
  };

  it("draws hole runs as polylines with their extent in the tooltip", () => {
    map.showHoles(holes);
    const lines = root.querySelectorAll("polyline.hole");
    expect(lines).toHaveLength(1);
    expect(lines[0].querySelector("title")!.textContent).toBe("hole: 3 cells, 30 m");
    map.clearHoles();
    expect(root.querySelectorAll("polyline.hole")).toHaveLength(0);
  });

  it("draws a dot per visited cell, skipping empty ones", () => {
    map.showDistribution(dots);
    const circles = root.querySelectorAll("circle.sample-dot");
    expect(circles).toHaveLength(2);
    expect([...circles].map((c) => c.getAttribute("data-count"))).toEqual(["5", "2"]);
    map.clearDistribution();
    expect(root.querySelectorAll("circle.sample-dot")).toHaveLength(0);
  });
});
