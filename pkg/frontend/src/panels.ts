import type { PanelId } from "./types";

export interface PanelQuery {
  text: string;
  k: number;
  alpha: number;
}

/**
 * Per-panel query state with exactly one active panel. The "object search"
 * panel of the original layout maps onto fused text search with an object
 * phrase, so only four panels exist: fused, ocr, asr, qa.
 */
export class PanelState {
  private active: PanelId = "fused";
  private queries = new Map<PanelId, PanelQuery>();
  private selection = new Set<string>();

  constructor(defaults: { k: number; alpha: number } = { k: 100, alpha: 0.7 }) {
    for (const panel of ["fused", "ocr", "asr", "qa"] as PanelId[]) {
      this.queries.set(panel, { text: "", k: defaults.k, alpha: defaults.alpha });
    }
  }

  activePanel(): PanelId {
    return this.active;
  }

  activate(panel: PanelId): void {
    this.active = panel;
  }

  query(panel?: PanelId): PanelQuery {
    return this.queries.get(panel ?? this.active)!;
  }

  setQueryText(text: string): void {
    this.query().text = text;
  }

  selectedIds(): string[] {
    return [...this.selection];
  }

  toggleSelection(keyframeId: string, displayed: Iterable<string>): void {
    // invariant: selection only over currently displayed hits
    if (this.selection.has(keyframeId)) {
      this.selection.delete(keyframeId);
      return;
    }
    for (const id of displayed) {
      if (id === keyframeId) {
        this.selection.add(keyframeId);
        return;
      }
    }
  }

  /** Drop selected ids that are no longer displayed. */
  syncSelection(displayed: Iterable<string>): void {
    const visible = new Set(displayed);
    for (const id of this.selection) {
      if (!visible.has(id)) this.selection.delete(id);
    }
  }
}
