// Application controller: owns the UiState, syncs it with the URL, calls
// the API, and re-renders. One delegated click/submit listener wires the
// string-rendered views to state transitions.
import { ApiError, ReviewApi } from "./api.js";
import {
  escapeHtml,
  renderGallery,
  renderMetadataHeader,
  renderPager,
  renderProposalBrowser,
  renderStaleBanner,
} from "./gallery.js";
import { readFilterForm, renderFilterPanel } from "./filters.js";
import { renderGroupExpansion } from "./groups.js";
import { renderDistributions } from "./plots.js";
import {
  defaultState,
  queryToBody,
  stateFromParams,
  stateToParams,
  withAspect,
  type UiState,
} from "./state.js";
import type {
  SearchFacets,
  SelectionsResponse,
  VideoDetail,
} from "./types.js";

const PRESETS = ["main-characters", "per-emotion", "per-keyword"];
const DIGEST_POLL_MS = 30_000;

export class App {
  state: UiState = defaultState();
  private detail: VideoDetail | null = null;
  private facets: SearchFacets | null = null;
  private selections: SelectionsResponse | null = null;
  private stale = false;
  private reviewer: string;

  constructor(
    private root: HTMLElement,
    private api: ReviewApi = new ReviewApi(),
    private win: Window = window,
  ) {
    this.reviewer = this.win.localStorage.getItem("framepick-reviewer") ?? "reviewer";
    this.root.addEventListener("click", (ev) => this.onClick(ev));
    this.root.addEventListener("submit", (ev) => this.onSubmit(ev));
    this.root.addEventListener("change", (ev) => this.onChange(ev));
    this.win.addEventListener("popstate", () => {
      this.state = stateFromParams(new URLSearchParams(this.win.location.search));
      void this.refresh();
    });
    this.win.setInterval(() => void this.checkDigest(), DIGEST_POLL_MS);
  }

  async start(): Promise<void> {
    this.state = stateFromParams(new URLSearchParams(this.win.location.search));
    if (!this.state.video) {
      const videos = await this.api.listVideos();
      if (videos.length) this.state.video = videos[0].video_id;
    }
    await this.refresh();
  }

  private pushUrl(): void {
    const params = stateToParams(this.state);
    const url = params.toString() ? `?${params}` : this.win.location.pathname;
    this.win.history.pushState(null, "", url);
  }

  private async checkDigest(): Promise<void> {
    if (!this.state.video || this.stale) return;
    try {
      const fresh = await this.api.video(this.state.video);
      if (this.detail && fresh.dataset_digest !== this.detail.dataset_digest) {
        this.stale = true;
        await this.render();
      }
    } catch {
      // transient poll failure; the next tick retries
    }
  }

  private async refresh(): Promise<void> {
    if (!this.state.video) {
      this.root.innerHTML = `<p class="empty">no processed videos available</p>`;
      return;
    }
    this.detail = await this.api.video(this.state.video);
    this.selections = await this.api.selections(this.state.video);
    await this.render();
  }

  private selectedId(aspect: string): string | undefined {
    return this.selections?.latest?.[aspect]?.candidate_id;
  }

  async render(): Promise<void> {
    if (!this.detail || !this.state.video) return;
    const video = this.state.video;
    const parts: string[] = [];
    if (this.stale) parts.push(renderStaleBanner());
    parts.push(renderMetadataHeader(this.detail));
    parts.push(this.renderTabs());

    if (this.state.tab === "proposals") {
      const proposals = await this.api.proposals(
        video,
        this.state.preset,
        this.state.aspect,
      );
      parts.push(
        renderProposalBrowser(
          proposals,
          video,
          this.state.openSections,
          this.selectedId(this.state.aspect),
        ),
      );
    } else {
      const result = await this.api.search(video, queryToBody(this.state));
      this.facets = result.facets;
      parts.push(`<div class="search-layout">`);
      parts.push(renderFilterPanel(this.state, this.detail, this.facets));
      parts.push(`<div class="results">`);
      parts.push(renderGallery(result.hits, video, this.selectedId(this.state.aspect)));
      parts.push(renderPager(result.page, result.total, result.page_size));
      const dists = await this.api.distributions(video);
      parts.push(renderDistributions(dists, this.state.aspect));
      parts.push(`</div></div>`);
    }

    if (this.state.expandedGroup !== null) {
      const group = await this.api.group(video, this.state.expandedGroup);
      parts.push(renderGroupExpansion(group, video, this.state.aspect));
    }
    parts.push(this.renderSelections());
    this.root.innerHTML = parts.join("\n");
  }

  private renderTabs(): string {
    const aspectButtons = (this.detail?.aspects ?? [])
      .map(
        (a) => `
        <button class="aspect${a === this.state.aspect ? " active" : ""}"
                data-action="aspect" data-aspect="${escapeHtml(a)}">${escapeHtml(a)}</button>`,
      )
      .join("");
    const presetOptions = PRESETS.map(
      (p) =>
        `<option value="${p}" ${p === this.state.preset ? "selected" : ""}>${p}</option>`,
    ).join("");
    return `
      <nav class="toolbar">
        <button class="tab${this.state.tab === "proposals" ? " active" : ""}"
                data-action="tab" data-tab="proposals">proposals</button>
        <button class="tab${this.state.tab === "search" ? " active" : ""}"
                data-action="tab" data-tab="search">search</button>
        <select data-action="preset" ${this.state.tab !== "proposals" ? "hidden" : ""}>
          ${presetOptions}
        </select>
        <span class="aspects">${aspectButtons}</span>
        <label class="reviewer">you:
          <input type="text" data-role="reviewer" value="${escapeHtml(this.reviewer)}">
        </label>
      </nav>`;
  }

  private renderSelections(): string {
    const latest = this.selections?.latest ?? {};
    const rows = Object.keys(latest)
      .sort()
      .map((aspect) => {
        const r = latest[aspect];
        return `<li><strong>${escapeHtml(aspect)}</strong>: ${escapeHtml(r.candidate_id)}
                by ${escapeHtml(r.chosen_by)}</li>`;
      })
      .join("");
    return `
      <footer class="selections">
        <h3>current selections</h3>
        <ul>${rows || "<li>none yet</li>"}</ul>
      </footer>`;
  }

  private async onClick(ev: Event): Promise<void> {
    const target = (ev.target as HTMLElement).closest<HTMLElement>("[data-action]");
    if (!target) return;
    const action = target.dataset.action;
    if (action === "tab") {
      this.state = { ...this.state, tab: target.dataset.tab as "proposals" | "search", page: 1 };
    } else if (action === "aspect") {
      this.state = withAspect(this.state, target.dataset.aspect!);
    } else if (action === "expand-group") {
      this.state = { ...this.state, expandedGroup: Number(target.dataset.group) };
    } else if (action === "close-group") {
      this.state = { ...this.state, expandedGroup: null };
    } else if (action === "page-prev") {
      this.state = { ...this.state, page: Math.max(1, this.state.page - 1) };
    } else if (action === "page-next") {
      this.state = { ...this.state, page: this.state.page + 1 };
    } else if (action === "select") {
      await this.select(target.dataset.candidate!, target.dataset.aspect!);
      return;
    } else if (action === "variant") {
      this.swapVariant(target);
      return;
    } else if (action === "add-keyword") {
      await this.addKeyword();
      return;
    } else if (action === "reload") {
      this.win.location.reload();
      return;
    } else {
      return;
    }
    this.pushUrl();
    await this.render();
  }

  // optimistic selection: mark the tile immediately, reconcile on ack
  private async select(candidateId: string, aspect: string): Promise<void> {
    if (!this.state.video) return;
    this.root
      .querySelectorAll(`.tile[data-aspect="${aspect}"].selected`)
      .forEach((el) => el.classList.remove("selected"));
    this.root
      .querySelectorAll(`[data-candidate="${candidateId}"]`)
      .forEach((el) => el.closest(".tile, .member")?.classList.add("selected"));
    try {
      await this.api.select(this.state.video, candidateId, aspect, this.reviewer);
      this.selections = await this.api.selections(this.state.video);
      await this.render();
    } catch (err) {
      await this.render(); // roll back the optimistic mark
      this.flash(err instanceof ApiError ? err.message : String(err));
    }
  }

  private swapVariant(button: HTMLElement): void {
    const member = button.closest<HTMLElement>(".member");
    if (!member || !this.state.video) return;
    const candidate = button.dataset.candidate!;
    const aspect = button.dataset.aspect!;
    const img = member.querySelector("img");
    if (img) {
      img.src = `/videos/${encodeURIComponent(this.state.video)}/images/${encodeURIComponent(candidate)}`;
    }
    const pick = member.querySelector<HTMLElement>('[data-action="select"]');
    if (pick) {
      pick.dataset.candidate = candidate;
      pick.dataset.aspect = aspect;
      pick.textContent = `select ${aspect}`;
    }
    member
      .querySelectorAll(".aspect-toggle")
      .forEach((el) => el.classList.toggle("active", el === button));
  }

  private async addKeyword(): Promise<void> {
    if (!this.state.video) return;
    const input = this.root.querySelector<HTMLInputElement>('input[name="new_keyword"]');
    const text = input?.value.trim();
    if (!text) return;
    try {
      await this.api.addKeyword(this.state.video, text);
      this.detail = await this.api.video(this.state.video);
      this.state.query.keywords.push(text);
      this.pushUrl();
      await this.render();
    } catch (err) {
      if (err instanceof ApiError && err.status === 422) {
        this.flash(err.message); // no embedding provider: tell the reviewer
      } else {
        this.flash(err instanceof ApiError ? err.message : String(err));
      }
    }
  }

  private async onSubmit(ev: Event): Promise<void> {
    const form = ev.target as HTMLFormElement;
    if (form.dataset.role !== "filters") return;
    ev.preventDefault();
    const bag: Record<string, string | string[]> = {};
    for (const [name, value] of new FormData(form).entries()) {
      const text = String(value);
      const existing = bag[name];
      if (existing === undefined) bag[name] = text;
      else if (Array.isArray(existing)) existing.push(text);
      else bag[name] = [existing, text];
    }
    const { aspect, query } = readFilterForm(bag);
    this.state = { ...this.state, query, page: 1 };
    if (aspect && aspect !== this.state.aspect) {
      this.state = withAspect(this.state, aspect);
    }
    this.pushUrl();
    await this.render();
  }

  private onChange(ev: Event): void {
    const target = ev.target as HTMLElement;
    if (target.matches('[data-role="reviewer"]')) {
      this.reviewer = (target as HTMLInputElement).value.trim() || "reviewer";
      this.win.localStorage.setItem("framepick-reviewer", this.reviewer);
    } else if (target.closest('[data-action="preset"]')) {
      this.state = {
        ...this.state,
        preset: (target as HTMLSelectElement).value,
        openSections: [],
      };
      this.pushUrl();
      void this.render();
    } else if (target.matches('input[type="range"]')) {
      const output = target.parentElement?.querySelector("output");
      if (output) output.textContent = Number((target as HTMLInputElement).value).toFixed(1);
    }
  }

  private flash(message: string): void {
    const el = this.win.document.createElement("div");
    el.className = "flash";
    el.textContent = message;
    this.root.prepend(el);
    this.win.setTimeout(() => el.remove(), 4000);
  }
}
