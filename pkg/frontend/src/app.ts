import { ApiClient, ApiError } from "./api";
import { PanelState } from "./panels";
import { QaChat } from "./qaChat";
import { RerankDialog } from "./rerankDialog";
import { installShortcuts, ShortcutAction } from "./shortcuts";
import type { PanelId, SearchHit, TextHit } from "./types";
import { VirtualGrid } from "./virtualGrid";

const ROW_HEIGHT = 96;
const GRID_HEIGHT = 640;

/** Wires panels, grid, dialog, chat, and shortcuts onto a host element. */
export class App {
  readonly api: ApiClient;
  readonly panels = new PanelState();
  readonly grid: VirtualGrid;
  readonly dialog: RerankDialog;
  readonly chat: QaChat;
  private status: HTMLElement;
  private queryInput: HTMLInputElement;
  private textResults: HTMLElement;
  private lastQuery = "";

  constructor(host: HTMLElement, api?: ApiClient) {
    this.api = api ?? new ApiClient("");
    host.innerHTML = "";

    const bar = document.createElement("form");
    bar.className = "query-bar";
    this.queryInput = document.createElement("input");
    this.queryInput.type = "search";
    this.queryInput.setAttribute("aria-label", "Search query");
    this.queryInput.placeholder = "Search keyframes… (1-4 switch panels, ? for help)";
    const go = document.createElement("button");
    go.textContent = "Search";
    bar.append(this.queryInput, go);
    bar.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.runQuery(this.queryInput.value);
    });

    this.status = document.createElement("p");
    this.status.className = "status";
    this.status.setAttribute("aria-live", "polite");

    const gridHost = document.createElement("div");
    gridHost.className = "grid-host";
    this.grid = new VirtualGrid(gridHost, {
      rowHeight: ROW_HEIGHT,
      height: GRID_HEIGHT,
      onOpen: (hit) => this.openHit(hit),
    });

    this.textResults = document.createElement("ol");
    this.textResults.className = "text-results";
    this.textResults.hidden = true;

    const chatHost = document.createElement("div");
    chatHost.className = "chat-host";
    chatHost.hidden = true;
    this.chat = new QaChat(chatHost, this.api);

    this.dialog = new RerankDialog(host);
    host.append(bar, this.status, gridHost, this.textResults, chatHost);

    installShortcuts(document, (action) => this.dispatch(action));
  }

  dispatch(action: ShortcutAction): void {
    switch (action.kind) {
      case "panel":
        this.switchPanel(action.panel);
        break;
      case "next-group":
        this.grid.nextGroup();
        break;
      case "prev-group":
        this.grid.prevGroup();
        break;
      case "open-hit":
        this.grid.openActive();
        break;
      case "rerank":
        void this.startRerank();
        break;
      case "help":
        this.setStatus("1-4 panels · j/k groups · Enter open · shift-click select · r rerank");
        break;
    }
  }

  switchPanel(panel: PanelId): void {
    this.panels.activate(panel);
    const isQa = panel === "qa";
    (this.chat.root.parentElement as HTMLElement).hidden = !isQa;
    this.textResults.hidden = panel === "fused" || isQa;
    (this.grid.viewport.parentElement as HTMLElement).hidden = panel !== "fused";
    this.setStatus(`panel: ${panel}`);
  }

  async runQuery(text: string): Promise<void> {
    const panel = this.panels.activePanel();
    this.panels.setQueryText(text);
    this.lastQuery = text;
    this.setStatus("Loading…");
    try {
      if (panel === "fused") {
        const { k, alpha } = this.panels.query();
        const { groups } = await this.api.searchGrouped(text, k, alpha);
        this.grid.setGroups(groups);
        this.setStatus(`${groups.length} video groups`);
      } else if (panel === "ocr" || panel === "asr") {
        const { hits } = await this.api.searchText(text, panel);
        this.renderTextHits(hits);
        this.setStatus(`${hits.length} ${panel.toUpperCase()} segments`);
      } else {
        const group = this.grid.activeGroup();
        if (group) await this.chat.ask({ video_id: group.video_id }, text);
      }
    } catch (error) {
      this.setStatus(error instanceof ApiError ? `${error.code}: ${error.message}` : "request failed");
    }
  }

  async startRerank(): Promise<void> {
    const selected = this.panels.selectedIds().length
      ? this.panels.selectedIds()
      : this.grid.displayedOrder();
    if (!this.lastQuery || selected.length === 0) {
      this.setStatus("nothing to rerank");
      return;
    }
    try {
      const { questions } = await this.api.rerankQuestions(this.lastQuery);
      this.dialog.open(questions, {
        onConfirm: (edited) => void this.executeRerank(edited, selected),
        onCancel: () => this.setStatus("rerank cancelled"),
      });
    } catch (error) {
      this.setStatus(error instanceof ApiError ? `${error.code}: ${error.message}` : "request failed");
    }
  }

  private async executeRerank(questions: string[], hits: string[]): Promise<void> {
    try {
      const result = await this.api.rerankExecute(this.lastQuery, questions, hits);
      if (result.degraded) {
        this.setStatus("VQA provider degraded — original order kept");
        return;
      }
      this.grid.applyServerOrder(result.hits);
      this.setStatus("reranked by yes-count");
    } catch (error) {
      this.setStatus(error instanceof ApiError ? `${error.code}: ${error.message}` : "request failed");
    }
  }

  private renderTextHits(hits: TextHit[]): void {
    this.textResults.innerHTML = "";
    for (const hit of hits) {
      const item = document.createElement("li");
      const time = document.createElement("time");
      time.textContent = `${(hit.t_start_ms / 1000).toFixed(1)}s`;
      const text = document.createElement("span");
      text.textContent = ` [${hit.video_id}] ${hit.text}`;
      item.append(time, text);
      item.addEventListener("click", () =>
        this.setStatus(`open ${hit.video_id} @ ${hit.t_start_ms} ms`),
      );
      this.textResults.append(item);
    }
  }

  private openHit(hit: SearchHit): void {
    // seek-on-click: position the player at the hit's timestamp
    this.setStatus(`open ${hit.video_id} @ ${hit.timestamp_ms} ms`);
    window.dispatchEvent(
      new CustomEvent("fusionkit:open", { detail: { video_id: hit.video_id, timestamp_ms: hit.timestamp_ms } }),
    );
  }

  setStatus(text: string): void {
    this.status.textContent = text;
  }

  statusText(): string {
    return this.status.textContent ?? "";
  }
}

export function mount(selector = "#app"): App {
  const host = document.querySelector<HTMLElement>(selector);
  if (!host) throw new Error(`no host element matching ${selector}`);
  return new App(host);
}
