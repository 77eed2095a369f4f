import { describe, expect, it } from "vitest";

import {
  defaultState,
  queryToBody,
  stateFromParams,
  stateToParams,
  withAspect,
  type UiState,
} from "../src/state.js";

function roundTrip(state: UiState): UiState {
  return stateFromParams(new URLSearchParams(stateToParams(state).toString()));
}

describe("URL state round trip", () => {
  it("defaults serialize to an empty query string", () => {
    expect(stateToParams(defaultState()).toString()).toBe("");
  });

  it("defaults survive the round trip", () => {
    expect(roundTrip(defaultState())).toEqual(defaultState());
  });

  it("a fully loaded session survives the round trip", () => {
    const state = defaultState();
    state.video = "synthetic-mini";
    state.tab = "search";
    state.aspect = "2:3";
    state.preset = "per-emotion";
    state.openSections = ["happiness", "character-0"];
    state.expandedGroup = 3;
    state.page = 4;
    state.pageSize = 12;
    state.query.minFaces = 1;
    state.query.maxFaces = 2;
    state.query.emotions = ["happiness", "surprise"];
    state.query.eyesOpenOnly = true;
    state.query.clusterIds = [0, 2];
    state.query.shotScales = ["medium", "close-up"];
    state.query.keywords = ["crimson field", "portrait"];
    state.query.reverse = true;
    state.query.weights.aesthetic = 2.5;
    state.query.weights.semantic = 0;
    state.query.weights.facePosition = 0.4;
    state.query.weights.faceAggregation = "mean";
    expect(roundTrip(state)).toEqual(state);
  });

  it("keywords with spaces and separators survive", () => {
    const state = defaultState();
    state.query.keywords = ["golden eagle", "Swiss Alps hotel"];
    expect(roundTrip(state).query.keywords).toEqual(state.query.keywords);
  });

  it("garbage parameters fall back to defaults", () => {
    const params = new URLSearchParams(
      "page=zero&min_faces=x&wa=-3&agg=median&tab=nope",
    );
    const state = stateFromParams(params);
    expect(state.page).toBe(1);
    expect(state.query.minFaces).toBeNull();
    expect(state.query.weights.aesthetic).toBe(1);
    expect(state.query.weights.faceAggregation).toBe("max");
    expect(state.tab).toBe("proposals");
  });
});

describe("aspect switching", () => {
  it("resets pagination and any open group", () => {
    const state = defaultState();
    state.page = 7;
    state.expandedGroup = 2;
    const switched = withAspect(state, "16:9");
    expect(switched.aspect).toBe("16:9");
    expect(switched.page).toBe(1);
    expect(switched.expandedGroup).toBeNull();
  });
});

describe("query draft to API schema", () => {
  it("always produces a valid search body", () => {
    const body = queryToBody(defaultState());
    expect(body.aspect).toBe("original");
    expect(body.page).toBe(1);
    expect(body.page_size).toBe(24);
    expect(body.weights).toEqual({
      aesthetic: 1,
      semantic: 1,
      logo: 1,
      face_position: 1,
      on_face_focus: 1,
      face_aggregation: "max",
    });
    // unset filters are omitted, not sent as nulls
    expect("min_faces" in body).toBe(false);
    expect("emotions" in body).toBe(false);
  });

  it("carries every set filter", () => {
    const state = defaultState();
    state.aspect = "2:3";
    state.page = 2;
    state.query.minFaces = 1;
    state.query.emotions = ["fear"];
    state.query.eyesOpenOnly = true;
    state.query.clusterIds = [1];
    state.query.shotScales = ["medium"];
    state.query.keywords = ["portrait"];
    state.query.reverse = true;
    const body = queryToBody(state);
    expect(body).toMatchObject({
      aspect: "2:3",
      page: 2,
      min_faces: 1,
      emotions: ["fear"],
      eyes_open_only: true,
      cluster_ids: [1],
      shot_scales: ["medium"],
      keywords: ["portrait"],
      reverse: true,
    });
  });
});
