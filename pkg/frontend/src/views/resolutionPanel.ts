/** Resolution control: gamma slider, reduction selector, detect button,
 * and the list of completed/running runs with their topic counts.
 *
 * Detection posts to the service and is polled once a second until the
 * job is done or failed.  Posting parameters identical to an existing
 * run highlights that run instead of spawning a new job.
 */

import { ApiClient, RunSummary } from "../api.js";

export interface ResolutionPanelOptions {
  api: ApiClient;
  onSelectRun?: (runKey: string) => void;
  pollIntervalMs?: number;
}

const REDUCTIONS = [10, 25, 50, 100];

export class ResolutionPanel {
  readonly element: HTMLElement;
  private readonly api: ApiClient;
  private readonly onSelectRun?: (runKey: string) => void;
  private readonly pollIntervalMs: number;
  private runs: RunSummary[] = [];
  private highlighted: string | null = null;
  private banner: HTMLElement;
  private slider: HTMLInputElement;
  private sliderValue: HTMLElement;
  private reductionSelect: HTMLSelectElement;
  private detectButton: HTMLButtonElement;
  private runList: HTMLElement;
  private pollTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(container: HTMLElement, options: ResolutionPanelOptions) {
    this.api = options.api;
    this.onSelectRun = options.onSelectRun;
    this.pollIntervalMs = options.pollIntervalMs ?? 1000;

    this.element = document.createElement("section");
    this.element.className = "resolution-panel";
    this.element.innerHTML = `
      <h2>Resolution</h2>
      <div class="banner hidden" data-role="banner"></div>
      <label>gamma
        <input type="range" min="0.5" max="4" step="0.01" value="1.0" data-role="gamma">
        <output data-role="gamma-value">1.00</output>
      </label>
      <label>reduction %
        <select data-role="reduction"></select>
      </label>
      <button data-role="detect">Detect</button>
      <ul class="run-list" data-role="runs"></ul>
    `;
    container.appendChild(this.element);

    this.banner = this.query("[data-role=banner]");
    this.slider = this.query("[data-role=gamma]") as HTMLInputElement;
    this.sliderValue = this.query("[data-role=gamma-value]");
    this.reductionSelect = this.query("[data-role=reduction]") as HTMLSelectElement;
    this.detectButton = this.query("[data-role=detect]") as HTMLButtonElement;
    this.runList = this.query("[data-role=runs]");

    for (const p of REDUCTIONS) {
      const option = document.createElement("option");
      option.value = String(p);
      option.textContent = String(p);
      if (p === 50) option.selected = true;
      this.reductionSelect.appendChild(option);
    }
    this.slider.addEventListener("input", () => {
      this.sliderValue.textContent = Number(this.slider.value).toFixed(2);
    });
    this.detectButton.addEventListener("click", () => void this.detect());
  }

  private query(selector: string): HTMLElement {
    return this.element.querySelector(selector) as HTMLElement;
  }

  get gamma(): number {
    return Number(this.slider.value);
  }

  set gamma(value: number) {
    this.slider.value = String(value);
    this.sliderValue.textContent = value.toFixed(2);
  }

  get reduction(): number {
    return Number(this.reductionSelect.value);
  }

  async refresh(): Promise<void> {
    try {
      this.runs = await this.api.listRuns();
      this.setConnected(true);
    } catch {
      this.setConnected(false);
      return;
    }
    this.renderRuns();
  }

  async detect(): Promise<void> {
    let response;
    try {
      response = await this.api.startRun({ gamma: this.gamma, reduction: this.reduction });
      this.setConnected(true);
    } catch (err) {
      this.setConnected(false, err instanceof Error ? err.message : String(err));
      return;
    }
    this.highlighted = response.run;
    await this.refresh();
    if (response.cached) {
      return; // existing run highlighted, nothing to poll
    }
    this.schedulePoll(response.run);
  }

  private schedulePoll(runKey: string): void {
    if (this.pollTimer !== null) clearTimeout(this.pollTimer);
    this.pollTimer = setTimeout(() => void this.poll(runKey), this.pollIntervalMs);
  }

  private async poll(runKey: string): Promise<void> {
    this.pollTimer = null;
    let status;
    try {
      status = await this.api.getRun(runKey);
      this.setConnected(true);
    } catch {
      this.setConnected(false);
      return;
    }
    this.mergeRun(status);
    this.renderRuns();
    if (status.status === "queued" || status.status === "running") {
      this.schedulePoll(runKey);
    }
  }

  private mergeRun(run: RunSummary): void {
    const index = this.runs.findIndex((r) => r.run === run.run);
    if (index >= 0) this.runs[index] = run;
    else this.runs.push(run);
  }

  private setConnected(connected: boolean, detail = ""): void {
    this.banner.classList.toggle("hidden", connected);
    this.detectButton.disabled = !connected;
    this.slider.disabled = !connected;
    this.reductionSelect.disabled = !connected;
    if (!connected) {
      this.banner.textContent = detail
        ? `Service unreachable: ${detail}. Retry when the server is back.`
        : "Service unreachable. Retry when the server is back.";
    }
  }

  private renderRuns(): void {
    this.runList.textContent = "";
    const ordered = [...this.runs].sort(
      (a, b) => a.params.gamma - b.params.gamma || a.run.localeCompare(b.run),
    );
    for (const run of ordered) {
      const item = document.createElement("li");
      item.dataset.run = run.run;
      item.classList.toggle("highlight", run.run === this.highlighted);
      item.classList.add(`status-${run.status}`);
      const label = document.createElement("span");
      label.className = "run-label";
      label.textContent = `gamma ${run.params.gamma} / p ${run.params.reduction}`;
      const detail = document.createElement("span");
      detail.className = "run-detail";
      if (run.status === "done") {
        detail.textContent = `${run.n_topics} topics`;
      } else if (run.status === "failed") {
        detail.textContent = `failed: ${run.error ?? "unknown error"}`;
      } else {
        detail.textContent = run.status;
      }
      item.append(label, " ", detail);
      if (run.status === "done") {
        item.addEventListener("click", () => this.onSelectRun?.(run.run));
      }
      this.runList.appendChild(item);
    }
  }
}
