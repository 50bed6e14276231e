/** Stratified topic sheet: strata as rows, terms in the order the API
 * delivers them (no client-side reordering), rank value on hover, and
 * the residual stratum visually separated.
 */

import { ApiClient, Sheet, ServiceError } from "../api.js";

export class SheetView {
  readonly element: HTMLElement;
  private readonly api: ApiClient;

  constructor(container: HTMLElement, api: ApiClient) {
    this.api = api;
    this.element = document.createElement("section");
    this.element.className = "sheet-view";
    this.element.innerHTML = `
      <h2>Topic sheet</h2>
      <div data-role="content"><p class="empty">Select a run and topic.</p></div>
    `;
    container.appendChild(this.element);
  }

  private get content(): HTMLElement {
    return this.element.querySelector("[data-role=content]") as HTMLElement;
  }

  async show(runKey: string, topicId: number): Promise<void> {
    let sheet: Sheet;
    try {
      sheet = await this.api.sheet(runKey, topicId);
    } catch (err) {
      if (err instanceof ServiceError && err.status === 404) {
        this.renderEmpty(`No sheet for topic ${topicId}: ${err.detail}`);
        return;
      }
      this.renderEmpty("Service unreachable.");
      return;
    }
    this.render(sheet);
  }

  renderEmpty(message: string): void {
    this.content.textContent = "";
    const p = document.createElement("p");
    p.className = "empty";
    p.textContent = message;
    this.content.appendChild(p);
  }

  render(sheet: Sheet): void {
    this.content.textContent = "";
    const table = document.createElement("table");
    table.className = "sheet-grid";
    const body = document.createElement("tbody");
    for (const stratum of sheet.strata) {
      const row = document.createElement("tr");
      row.className = "stratum";
      for (const cell of stratum) {
        const td = document.createElement("td");
        td.textContent = cell.term;
        if (cell.r !== null && cell.r !== undefined) {
          td.title = `r = ${cell.r.toFixed(4)}`;
        }
        row.appendChild(td);
      }
      body.appendChild(row);
    }
    table.appendChild(body);
    this.content.appendChild(table);

    if (sheet.residual.length > 0) {
      const residual = document.createElement("div");
      residual.className = "residual";
      const heading = document.createElement("h3");
      heading.textContent = "No embedding";
      residual.appendChild(heading);
      const row = document.createElement("p");
      row.textContent = sheet.residual.map((c) => c.term).join(" ");
      residual.appendChild(row);
      this.content.appendChild(residual);
    }
  }
}
