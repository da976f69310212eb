/** DOM application: instructions -> demo -> rounds -> completion.
 *
 * All mutation goes through the service API; the only state kept here is
 * the session token, the current round's selection, and the score history.
 */

import { ApiError, ExperimentApi } from "./api.js";
import type { DemoPayload, RoundView, SessionDescriptor, SubmitResult } from "./api.js";
import { renderScoreChart } from "./chart.js";
import {
  ClientRoundState,
  constraintHint,
  newRoundState,
  selectedIds,
  submitEnabled,
  toggleTile,
} from "./state.js";

export interface AppOptions {
  condition?: "random" | "rooney" | "control";
}

export class ExperimentApp {
  private session: SessionDescriptor | null = null;
  private roundState: ClientRoundState | null = null;
  private scores: number[] = [];
  private demoSelected = new Set<number>();
  private demo: DemoPayload | null = null;

  constructor(
    private root: HTMLElement,
    private api: ExperimentApi,
    private options: AppOptions = {},
  ) {}

  private doc(): Document {
    return this.root.ownerDocument;
  }

  private el(tag: string, attrs: Record<string, string> = {}, text = ""): HTMLElement {
    const node = this.doc().createElement(tag);
    for (const [key, value] of Object.entries(attrs)) {
      if (key === "class") node.className = value;
      else node.setAttribute(key, value);
    }
    if (text) node.textContent = text;
    return node;
  }

  async start(): Promise<void> {
    this.renderInstructions();
  }

  // -- instructions ---------------------------------------------------------

  private renderInstructions(): void {
    this.root.innerHTML = "";
    const screen = this.el("section", { "data-testid": "screen-instructions", class: "screen" });
    screen.appendChild(this.el("h1", {}, "Tile selection game"));
    const text = this.el("div", { class: "instructions" });
    for (const paragraph of [
      "You will play 25 rounds. In each round you see 100 tiles, each with an estimated value. Every tile also has a hidden true value.",
      "Select exactly 10 tiles per round, trying to maximize the total true value of your selection. After you submit, the true values of your chosen tiles are revealed.",
      "The estimated values are noisy estimates of the true values.",
      "Your score is the sum of true values across rounds; 15,000 points correspond to $1.00 of bonus.",
    ]) {
      text.appendChild(this.el("p", {}, paragraph));
    }
    screen.appendChild(text);
    const button = this.el("button", { "data-testid": "btn-start" }, "Continue to demonstration");
    button.addEventListener("click", () => void this.renderDemo());
    screen.appendChild(button);
    this.root.appendChild(screen);
  }

  // -- demonstration --------------------------------------------------------

  private async renderDemo(): Promise<void> {
    this.demo = await this.api.getDemo();
    this.demoSelected = new Set();
    this.drawDemo("");
  }

  private drawDemo(status: string): void {
    const demo = this.demo;
    if (!demo) return;
    this.root.innerHTML = "";
    const screen = this.el("section", { "data-testid": "screen-demo", class: "screen" });
    screen.appendChild(this.el("h1", {}, "Demonstration"));
    screen.appendChild(this.el(
      "p", {},
      `These practice tiles show how estimated values relate to true values. ` +
      `Click tiles to inspect their true values and leave the ${demo.select_count} ` +
      `tiles with the highest true values selected, then press Done.`,
    ));
    const grid = this.el("div", { class: "tile-grid" });
    for (const tile of demo.tiles) {
      const selected = this.demoSelected.has(tile.id);
      const node = this.el("button", {
        class: `tile red${selected ? " selected" : ""}`,
        "data-testid": `demo-tile-${tile.id}`,
      });
      node.appendChild(this.el("span", { class: "observed" }, String(tile.observed)));
      if (selected) {
        // latent shown only while inspected: the demo teaches the relation
        node.appendChild(this.el("span", { class: "latent" }, `true: ${tile.latent}`));
      }
      node.addEventListener("click", () => {
        if (this.demoSelected.has(tile.id)) this.demoSelected.delete(tile.id);
        else this.demoSelected.add(tile.id);
        this.drawDemo("");
      });
      grid.appendChild(node);
    }
    screen.appendChild(grid);
    const done = this.el("button", { "data-testid": "btn-demo-done" }, "Done");
    (done as HTMLButtonElement).disabled = this.demoSelected.size !== demo.select_count;
    done.addEventListener("click", () => void this.finishDemo());
    screen.appendChild(done);
    screen.appendChild(this.el("p", { "data-testid": "demo-status", class: "status" }, status));
    this.root.appendChild(screen);
  }

  private async finishDemo(): Promise<void> {
    const result = await this.api.checkDemo(Array.from(this.demoSelected));
    if (!result.passed) {
      this.drawDemo("Not quite: keep exploring until the three highest true values are selected.");
      return;
    }
    this.session = await this.api.createSession(this.options.condition ?? "random");
    await this.loadRound();
  }

  // -- experiment rounds ----------------------------------------------------

  private async loadRound(): Promise<void> {
    if (!this.session) throw new Error("no session");
    const view = await this.api.getRound(this.session.session_id);
    this.roundState = newRoundState(view.round_index, view.tiles, view.k, view.ell);
    this.drawRound(view, "");
  }

  private drawRound(view: RoundView, error: string, retry?: () => void): void {
    const state = this.roundState;
    if (!state) return;
    this.root.innerHTML = "";
    const screen = this.el("section", { "data-testid": "screen-round", class: "screen" });
    screen.appendChild(this.el(
      "h1", { "data-testid": "round-title" },
      `Round ${view.round_index} of ${view.total_rounds}`,
    ));
    screen.appendChild(this.el(
      "p", {},
      `Select exactly ${view.k} tiles to maximize their total true value. ` +
      (view.ell > 0 ? `You must include at least ${view.ell} blue tile(s).` : ""),
    ));

    const grid = this.el("div", { class: "tile-grid" });
    for (const tile of view.tiles) {
      const selected = state.selected.has(tile.id);
      const node = this.el("button", {
        class: `tile ${tile.color}${selected ? " selected" : ""}`,
        "data-testid": `tile-${tile.id}`,
      });
      node.appendChild(this.el("span", { class: "observed" }, String(tile.observed)));
      node.addEventListener("click", () => {
        this.roundState = toggleTile(state, tile.id);
        this.drawRound(view, "");
      });
      grid.appendChild(node);
    }
    screen.appendChild(grid);

    const footer = this.el("div", { class: "round-footer" });
    footer.appendChild(this.el(
      "span", { "data-testid": "selection-count" },
      `${state.selected.size}/${view.k} selected`,
    ));
    const hint = constraintHint(state);
    footer.appendChild(this.el(
      "span", { "data-testid": "constraint-hint", class: "hint" }, hint,
    ));
    const submit = this.el("button", { "data-testid": "btn-submit", class: "submit" }, "Submit selection");
    (submit as HTMLButtonElement).disabled = !submitEnabled(state);
    submit.addEventListener("click", () => void this.submitRound(view));
    footer.appendChild(submit);
    screen.appendChild(footer);

    const errorBox = this.el("p", { "data-testid": "inline-error", class: "error" }, error);
    if (retry) {
      const retryButton = this.el("button", { "data-testid": "btn-retry" }, "Retry");
      retryButton.addEventListener("click", () => retry());
      errorBox.appendChild(retryButton);
    }
    screen.appendChild(errorBox);

    const chart = this.el("div", { "data-testid": "round-chart" });
    renderScoreChart(chart, this.scores, view.total_rounds);
    screen.appendChild(chart);
    this.root.appendChild(screen);
  }

  private async submitRound(view: RoundView): Promise<void> {
    const state = this.roundState;
    if (!state || !this.session) return;
    let result: SubmitResult;
    try {
      result = await this.api.submitSelection(
        this.session.session_id, selectedIds(state), view.round_index,
      );
    } catch (err) {
      if (err instanceof ApiError) {
        // server stays authoritative; selection is preserved for correction
        this.drawRound(view, err.message);
      } else {
        this.drawRound(view, "Network problem; your selection was kept.",
                       () => void this.submitRound(view));
      }
      return;
    }
    this.scores.push(result.round_score);
    this.drawReveal(result);
  }

  // -- reveal and completion ------------------------------------------------

  private drawReveal(result: SubmitResult): void {
    this.root.innerHTML = "";
    const screen = this.el("section", { "data-testid": "screen-reveal", class: "screen" });
    screen.appendChild(this.el("h1", {}, `Round ${result.round_index} results`));
    const list = this.el("div", { class: "reveal-list" });
    for (const tile of result.revealed) {
      const row = this.el("div", {
        class: `reveal-row ${tile.color}`,
        "data-testid": `reveal-row-${tile.id}`,
      });
      row.appendChild(this.el("span", { class: "chip" }, tile.color));
      const observed = this.el("s", { class: "observed" }, String(tile.observed));
      row.appendChild(observed);
      row.appendChild(this.el("span", { class: "latent" }, String(tile.latent)));
      list.appendChild(row);
    }
    screen.appendChild(list);
    const totals = this.el("div", { class: "totals" });
    totals.appendChild(this.el("span", { "data-testid": "round-score" },
                               `Round points: ${result.round_score}`));
    totals.appendChild(this.el("span", { "data-testid": "cumulative-points" },
                               `Total points: ${result.cumulative_points}`));
    totals.appendChild(this.el("span", { "data-testid": "bonus-dollars" },
                               `Bonus: $${result.bonus_dollars.toFixed(2)}`));
    screen.appendChild(totals);
    const next = this.el(
      "button", { "data-testid": "btn-next" },
      result.completed ? "Finish" : "Next round",
    );
    next.addEventListener("click", () => {
      if (result.completed) this.drawComplete(result);
      else void this.loadRound();
    });
    screen.appendChild(next);
    this.root.appendChild(screen);
  }

  private drawComplete(result: SubmitResult): void {
    this.root.innerHTML = "";
    const screen = this.el("section", { "data-testid": "screen-complete", class: "screen" });
    screen.appendChild(this.el("h1", {}, "All rounds complete"));
    screen.appendChild(this.el("p", { "data-testid": "cumulative-points" },
                               `Total points: ${result.cumulative_points}`));
    screen.appendChild(this.el("p", { "data-testid": "bonus-dollars" },
                               `Bonus earned: $${result.bonus_dollars.toFixed(2)}`));
    const chart = this.el("div", { "data-testid": "score-chart" });
    renderScoreChart(chart, this.scores, this.scores.length);
    screen.appendChild(chart);
    this.root.appendChild(screen);
  }
}
