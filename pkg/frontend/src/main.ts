import { ApiClient } from "./api.js";
import { HeatmapView } from "./views/heatmapView.js";
import { ResolutionPanel } from "./views/resolutionPanel.js";
import { SheetView } from "./views/sheetView.js";

function bootstrap(root: HTMLElement): void {
  const api = new ApiClient();
  const layout = document.createElement("div");
  layout.className = "layout";
  root.appendChild(layout);

  const sheetView = new SheetView(layout, api);
  const heatmap = new HeatmapView(layout, api);

  const topicPicker = document.createElement("div");
  topicPicker.className = "topic-picker";
  sheetView.element.prepend(topicPicker);

  let selectedRuns: string[] = [];

  const panel = new ResolutionPanel(layout, {
    api,
    onSelectRun: (runKey) => void onRunSelected(runKey),
  });
  layout.prepend(panel.element);

  async function onRunSelected(runKey: string): Promise<void> {
    selectedRuns = [...selectedRuns.filter((r) => r !== runKey), runKey].slice(-2);
    const topics = await api.runTopics(runKey);
    topicPicker.textContent = "";
    topics.topics.forEach((topic) => {
      const button = document.createElement("button");
      button.textContent = `Topic ${topic.id} (${topic.size})`;
      button.addEventListener("click", () => void sheetView.show(runKey, topic.id));
      topicPicker.appendChild(button);
    });
    if (topics.topics.length > 0) {
      void sheetView.show(runKey, topics.topics[0].id);
    }
    if (selectedRuns.length === 2) {
      void heatmap.show(selectedRuns[0], selectedRuns[1]);
    }
  }

  void panel.refresh();
}

const rootElement = document.getElementById("app");
if (rootElement) {
  bootstrap(rootElement);
}
