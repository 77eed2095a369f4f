// Ordering parity: the gallery shows candidates exactly in the order the
// API returned them — never re-sorted, never re-scored client-side.
import { describe, expect, it } from "vitest";

import { galleryOrder, renderGallery, renderMetadataHeader, renderProposalBrowser } from "../src/gallery.js";
import type { ProposalsResponse, SearchResponse, VideoDetail } from "../src/types.js";
import { extractSectionKeys, extractTileOrder, fixture } from "./helpers.js";

describe("search gallery ordering parity", () => {
  for (const name of [
    "search-default-original.json",
    "search-aesthetic-only.json",
    "search-vertical-faces.json",
  ]) {
    it(`matches the recorded API ordering in ${name}`, () => {
      const recorded = fixture<SearchResponse>(name);
      const html = renderGallery(recorded.hits, "synthetic-mini");
      expect(extractTileOrder(html)).toEqual(
        recorded.hits.map((h) => h.candidate_id),
      );
    });
  }

  it("galleryOrder is the identity over API hits", () => {
    const recorded = fixture<SearchResponse>("search-default-original.json");
    expect(galleryOrder(recorded.hits)).toEqual(
      recorded.hits.map((h) => h.candidate_id),
    );
  });

  it("recorded isolation ordering is monotone in the isolated column", () => {
    // sanity on the fixture itself: aesthetic-only weights sort by the
    // normalized aesthetic column (server-side guarantee we rely on)
    const recorded = fixture<SearchResponse>("search-aesthetic-only.json");
    const values = recorded.hits.map((h) => h.scores.normalized.aesthetic ?? -1);
    const sorted = [...values].sort((a, b) => b - a);
    expect(values).toEqual(sorted);
  });
});

describe("proposal browser", () => {
  it("renders sections and entries in recorded order", () => {
    const recorded = fixture<ProposalsResponse>("proposals-main-characters-2x3.json");
    const html = renderProposalBrowser(recorded, "synthetic-mini", []);
    expect(extractSectionKeys(html)).toEqual(recorded.sections.map((s) => s.key));
    expect(extractTileOrder(html)).toEqual(
      recorded.sections.flatMap((s) => s.entries.map((e) => e.candidate_id)),
    );
  });

  it("caps at the recorded k and tags every tile with the aspect", () => {
    const recorded = fixture<ProposalsResponse>("proposals-main-characters-2x3.json");
    const html = renderProposalBrowser(recorded, "synthetic-mini", []);
    for (const section of recorded.sections) {
      expect(section.entries.length).toBeLessThanOrEqual(4);
    }
    const aspects = [...html.matchAll(/data-aspect="([^"]+)"/g)].map((m) => m[1]);
    expect(aspects.length).toBeGreaterThan(0);
    expect(new Set(aspects)).toEqual(new Set(["2:3"]));
  });

  it("opens only the requested sections", () => {
    const recorded = fixture<ProposalsResponse>("proposals-per-keyword-original.json");
    const first = recorded.sections[0].key;
    const html = renderProposalBrowser(recorded, "synthetic-mini", [first]);
    const open = [...html.matchAll(/<details class="section"( open)?[^>]*data-section="([^"]+)"/g)]
      .filter((m) => m[1])
      .map((m) => m[2]);
    expect(open).toEqual([first]);
  });

  it("renders a reason for empty proposal sets", () => {
    const empty: ProposalsResponse = {
      preset: "main-characters",
      aspect: "original",
      reason: "no qualifying faces (open-eyed, medium/close-up)",
      sections: [],
    };
    const html = renderProposalBrowser(empty, "v", []);
    expect(html).toContain("no qualifying faces");
  });
});

describe("metadata header", () => {
  it("shows title, summary, and keyword chips", () => {
    const detail = fixture<VideoDetail>("video.json");
    const html = renderMetadataHeader(detail);
    expect(html).toContain(detail.video.title);
    expect(html).toContain(detail.video.summary.slice(0, 30));
    for (const kw of detail.video.keywords) {
      expect(html).toContain(`data-keyword="${kw.text}"`);
    }
  });

  it("escapes markup in metadata", () => {
    const detail = fixture<VideoDetail>("video.json");
    detail.video.title = `<script>alert("x")</script>`;
    const html = renderMetadataHeader(detail);
    expect(html).not.toContain("<script>");
    expect(html).toContain("&lt;script&gt;");
  });
});
