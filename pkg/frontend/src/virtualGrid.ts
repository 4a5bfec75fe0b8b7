import type { RerankHit, SearchHit, VideoGroup } from "./types";

export interface GridOptions {
  /** Fixed pixel height of one group row. */
  rowHeight: number;
  /** Visible viewport height in pixels (jsdom has no layout, so this is explicit). */
  height: number;
  /** Extra rows mounted above and below the viewport. */
  overscan?: number;
  onOpen?: (hit: SearchHit) => void;
}

interface Row {
  group: VideoGroup;
  badges: Map<string, { yes: number; unknown: number }>;
}

/**
 * Grouped result grid with row virtualization: one row per video group,
 * best-first, and only the rows intersecting the viewport (plus overscan)
 * exist in the DOM. Ordering is never computed client-side; the grid shows
 * groups exactly as the server returned them, and `applyServerOrder`
 * re-derives rows from a server-provided reranked hit list.
 */
export class VirtualGrid {
  readonly viewport: HTMLElement;
  private spacer: HTMLElement;
  private emptyState: HTMLElement;
  private rows: Row[] = [];
  private mounted = new Map<number, HTMLElement>();
  private selected = new Set<string>();
  private activeRow = 0;
  private opts: Required<Omit<GridOptions, "onOpen">> & Pick<GridOptions, "onOpen">;

  constructor(container: HTMLElement, opts: GridOptions) {
    this.opts = { overscan: 3, ...opts };
    this.viewport = document.createElement("div");
    this.viewport.className = "vg-viewport";
    this.viewport.style.height = `${this.opts.height}px`;
    this.viewport.style.overflowY = "auto";
    this.viewport.style.position = "relative";
    this.spacer = document.createElement("div");
    this.spacer.className = "vg-spacer";
    this.spacer.style.position = "relative";
    this.emptyState = document.createElement("p");
    this.emptyState.className = "vg-empty";
    this.emptyState.textContent = "No results.";
    this.viewport.append(this.spacer);
    container.append(this.viewport);
    this.viewport.addEventListener("scroll", () => this.render());
  }

  setGroups(groups: VideoGroup[]): void {
    this.rows = groups.map((group) => ({ group, badges: new Map() }));
    this.selected.clear();
    this.activeRow = 0;
    this.viewport.scrollTop = 0;
    this.render(true);
  }

  /**
   * Apply a server-returned reranked order: groups appear in order of their
   * first hit in the response, hits within a group follow the response
   * order, and yes/unknown badges are attached. No local re-sorting.
   */
  applyServerOrder(hits: RerankHit[]): void {
    const groupOrder: string[] = [];
    const byVideo = new Map<string, RerankHit[]>();
    for (const hit of hits) {
      if (!byVideo.has(hit.video_id)) {
        byVideo.set(hit.video_id, []);
        groupOrder.push(hit.video_id);
      }
      byVideo.get(hit.video_id)!.push(hit);
    }
    this.rows = groupOrder.map((videoId) => {
      const groupHits = byVideo.get(videoId)!;
      const badges = new Map(
        groupHits.map((h) => [h.keyframe_id, { yes: h.yes_count, unknown: h.unknown_count }]),
      );
      return {
        group: { video_id: videoId, best: Math.max(...groupHits.map((h) => h.fused)), hits: groupHits },
        badges,
      };
    });
    this.render(true);
  }

  displayedOrder(): string[] {
    return this.rows.flatMap((row) => row.group.hits.map((h) => h.keyframe_id));
  }

  mountedRowCount(): number {
    return this.mounted.size;
  }

  rowCount(): number {
    return this.rows.length;
  }

  selectedIds(): string[] {
    return [...this.selected];
  }

  toggleSelect(keyframeId: string): void {
    // selection is only valid over currently displayed hits
    const displayed = new Set(this.displayedOrder());
    if (!displayed.has(keyframeId)) return;
    if (this.selected.has(keyframeId)) {
      this.selected.delete(keyframeId);
    } else {
      this.selected.add(keyframeId);
    }
    this.render(true);
  }

  nextGroup(): void {
    this.moveActive(1);
  }

  prevGroup(): void {
    this.moveActive(-1);
  }

  activeGroup(): VideoGroup | undefined {
    return this.rows[this.activeRow]?.group;
  }

  openActive(): void {
    const group = this.activeGroup();
    if (group && group.hits.length > 0) this.opts.onOpen?.(group.hits[0]);
  }

  private moveActive(delta: number): void {
    if (this.rows.length === 0) return;
    this.activeRow = Math.min(this.rows.length - 1, Math.max(0, this.activeRow + delta));
    const top = this.activeRow * this.opts.rowHeight;
    if (top < this.viewport.scrollTop) this.viewport.scrollTop = top;
    const bottom = top + this.opts.rowHeight;
    if (bottom > this.viewport.scrollTop + this.opts.height) {
      this.viewport.scrollTop = bottom - this.opts.height;
    }
    this.render(true);
  }

  private visibleRange(): [number, number] {
    const { rowHeight, height, overscan } = this.opts;
    const first = Math.max(0, Math.floor(this.viewport.scrollTop / rowHeight) - overscan);
    const last = Math.min(
      this.rows.length,
      Math.ceil((this.viewport.scrollTop + height) / rowHeight) + overscan,
    );
    return [first, last];
  }

  private render(force = false): void {
    this.spacer.style.height = `${this.rows.length * this.opts.rowHeight}px`;
    if (this.rows.length === 0) {
      if (!this.emptyState.isConnected) this.viewport.append(this.emptyState);
    } else {
      this.emptyState.remove();
    }
    const [first, last] = this.visibleRange();
    for (const [index, el] of this.mounted) {
      if (index < first || index >= last) {
        el.remove();
        this.mounted.delete(index);
      } else if (force) {
        el.replaceWith(this.buildRow(index));
        this.mounted.set(index, this.spacer.querySelector(`[data-row="${index}"]`)!);
      }
    }
    for (let i = first; i < last; i++) {
      if (!this.mounted.has(i)) {
        const el = this.buildRow(i);
        this.spacer.append(el);
        this.mounted.set(i, el);
      }
    }
  }

  private buildRow(index: number): HTMLElement {
    const { group, badges } = this.rows[index];
    const row = document.createElement("div");
    row.className = "vg-row" + (index === this.activeRow ? " vg-row-active" : "");
    row.dataset.row = String(index);
    row.dataset.videoId = group.video_id;
    row.style.position = "absolute";
    row.style.top = `${index * this.opts.rowHeight}px`;
    row.style.height = `${this.opts.rowHeight}px`;

    const label = document.createElement("span");
    label.className = "vg-video";
    label.textContent = `${group.video_id} (best ${group.best.toFixed(3)})`;
    row.append(label);

    for (const hit of group.hits) {
      const cell = document.createElement("button");
      cell.className = "vg-hit" + (this.selected.has(hit.keyframe_id) ? " vg-hit-selected" : "");
      cell.dataset.keyframeId = hit.keyframe_id;
      cell.textContent = `${(hit.timestamp_ms / 1000).toFixed(1)}s`;
      cell.title = `fused ${hit.fused.toFixed(4)}`;
      const badge = badges.get(hit.keyframe_id);
      if (badge) {
        const mark = document.createElement("span");
        mark.className = "vg-badge";
        mark.textContent = `yes ${badge.yes}/3` + (badge.unknown ? ` ?${badge.unknown}` : "");
        cell.append(mark);
      }
      cell.addEventListener("click", (event) => {
        if ((event as MouseEvent).shiftKey) {
          this.toggleSelect(hit.keyframe_id);
        } else {
          this.opts.onOpen?.(hit);
        }
      });
      row.append(cell);
    }
    return row;
  }
}
