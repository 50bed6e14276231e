/** Cross-resolution comparison: a heat map of shared-term counts
 * between the topics of two runs.  Cell shading is proportional to the
 * count; clicking a cell lists the shared terms of that topic pair.
 */

import { ApiClient, FlowMatrix } from "../api.js";

export class HeatmapView {
  readonly element: HTMLElement;
  private readonly api: ApiClient;
  private runA: string | null = null;
  private runB: string | null = null;

  constructor(container: HTMLElement, api: ApiClient) {
    this.api = api;
    this.element = document.createElement("section");
    this.element.className = "heatmap-view";
    this.element.innerHTML = `
      <h2>Compare resolutions</h2>
      <div data-role="content"><p class="empty">Pick two runs to compare.</p></div>
      <div data-role="terms"></div>
    `;
    container.appendChild(this.element);
  }

  private get content(): HTMLElement {
    return this.element.querySelector("[data-role=content]") as HTMLElement;
  }

  private get termsPane(): HTMLElement {
    return this.element.querySelector("[data-role=terms]") as HTMLElement;
  }

  async show(runA: string, runB: string): Promise<void> {
    this.runA = runA;
    this.runB = runB;
    this.termsPane.textContent = "";
    let matrix: FlowMatrix;
    try {
      matrix = await this.api.compare(runA, runB);
    } catch {
      this.renderEmpty("Comparison unavailable.");
      return;
    }
    if (matrix.rows.length === 0 || matrix.cols.length === 0) {
      this.renderEmpty("Nothing to compare: one of the runs has no topics.");
      return;
    }
    this.render(matrix);
  }

  renderEmpty(message: string): void {
    this.content.textContent = "";
    const p = document.createElement("p");
    p.className = "empty";
    p.textContent = message;
    this.content.appendChild(p);
  }

  render(matrix: FlowMatrix): void {
    this.content.textContent = "";
    const max = Math.max(1, ...matrix.counts.flat());
    const table = document.createElement("table");
    table.className = "heatmap";

    const head = document.createElement("tr");
    head.appendChild(document.createElement("th"));
    for (const col of matrix.cols) {
      const th = document.createElement("th");
      th.textContent = `A${col}`;
      head.appendChild(th);
    }
    table.appendChild(head);

    matrix.counts.forEach((rowCounts, i) => {
      const row = document.createElement("tr");
      const label = document.createElement("th");
      label.textContent = `B${matrix.rows[i]}`;
      row.appendChild(label);
      rowCounts.forEach((count, j) => {
        const td = document.createElement("td");
        const intensity = count / max;
        td.dataset.count = String(count);
        td.dataset.intensity = intensity.toFixed(3);
        td.style.backgroundColor = `rgba(38, 70, 120, ${intensity.toFixed(3)})`;
        td.title = `${count} shared terms`;
        td.textContent = count > 0 ? String(count) : "";
        td.addEventListener("click", () => void this.showSharedTerms(matrix.rows[i], matrix.cols[j]));
        row.appendChild(td);
      });
      table.appendChild(row);
    });
    this.content.appendChild(table);
  }

  private async showSharedTerms(rowTopic: number, colTopic: number): Promise<void> {
    if (this.runA === null || this.runB === null) return;
    let termsA, termsB;
    try {
      [termsA, termsB] = await Promise.all([
        this.api.topicsTerms(this.runA),
        this.api.topicsTerms(this.runB),
      ]);
    } catch {
      this.termsPane.textContent = "Shared terms unavailable.";
      return;
    }
    const a = new Set(termsA.topics.find((t) => t.id === colTopic)?.terms ?? []);
    const shared = (termsB.topics.find((t) => t.id === rowTopic)?.terms ?? []).filter((t) =>
      a.has(t),
    );
    this.termsPane.textContent = "";
    const heading = document.createElement("h3");
    heading.textContent = `Shared terms A${colTopic} ∩ B${rowTopic} (${shared.length})`;
    const list = document.createElement("p");
    list.className = "shared-terms";
    list.textContent = shared.join(" ");
    this.termsPane.append(heading, list);
  }
}
