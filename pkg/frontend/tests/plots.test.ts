import { describe, expect, it } from "vitest";

import { renderDistributions, renderHistogram } from "../src/plots.js";
import type { DistributionsResponse } from "../src/types.js";
import { fixture } from "./helpers.js";

describe("score distribution plots", () => {
  it("renders one bar per pre-binned bucket, values untouched", () => {
    const hist = {
      edges: [0, 0.25, 0.5, 0.75, 1],
      counts: [3, 0, 5, 2],
      n: 10,
    };
    const html = renderHistogram("final", hist);
    const bars = [...html.matchAll(/<rect /g)];
    expect(bars.length).toBe(4);
    expect(html).toContain("0.50–0.75: 5");
    expect(html).toContain("n=10");
  });

  it("covers every column the service pre-binned", () => {
    const dists = fixture<DistributionsResponse>("distributions.json");
    const html = renderDistributions(dists, "original");
    for (const column of Object.keys(dists.distributions.original)) {
      expect(html).toContain(`data-column="${column}"`);
    }
  });

  it("reports missing aspects instead of recomputing", () => {
    const dists = fixture<DistributionsResponse>("distributions.json");
    expect(renderDistributions(dists, "9:16")).toContain("no score distributions");
  });
});
