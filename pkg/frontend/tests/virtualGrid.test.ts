import { beforeEach, describe, expect, it } from "vitest";

import { VirtualGrid } from "../src/virtualGrid";
import { asReranked, makeGroups, makeHit } from "./helpers";

const ROW = 100;
const HEIGHT = 500;
const OVERSCAN = 3;

function makeGrid(onOpen?: (hit: any) => void) {
  const host = document.createElement("div");
  document.body.append(host);
  return new VirtualGrid(host, { rowHeight: ROW, height: HEIGHT, overscan: OVERSCAN, onOpen });
}

describe("VirtualGrid", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("renders one row per group for a small payload", () => {
    const grid = makeGrid();
    grid.setGroups(makeGroups(2, 3));
    expect(grid.mountedRowCount()).toBe(2);
    expect(document.querySelectorAll(".vg-row").length).toBe(2);
  });

  it("renders an empty-state message for no results", () => {
    const grid = makeGrid();
    grid.setGroups([]);
    expect(document.querySelector(".vg-empty")?.textContent).toMatch(/no results/i);
    expect(grid.mountedRowCount()).toBe(0);
  });

  it("bounds mounted nodes by viewport, not result count, for 10k hits", () => {
    const grid = makeGrid();
    // 2000 groups x 5 hits = 10,000 hits
    grid.setGroups(makeGroups(2000, 5));
    const viewportCapacity = Math.ceil(HEIGHT / ROW) + 2 * OVERSCAN + 1;
    expect(grid.rowCount()).toBe(2000);
    expect(grid.mountedRowCount()).toBeLessThanOrEqual(viewportCapacity);
    expect(document.querySelectorAll(".vg-row").length).toBeLessThanOrEqual(viewportCapacity);
    expect(document.querySelectorAll(".vg-hit").length).toBeLessThanOrEqual(viewportCapacity * 5);
  });

  it("recycles rows while scrolling and keeps the bound", () => {
    const grid = makeGrid();
    grid.setGroups(makeGroups(2000, 5));
    const capacity = Math.ceil(HEIGHT / ROW) + 2 * OVERSCAN + 1;
    for (const y of [0, 5_000, 50_000, 123_400, 199_500]) {
      grid.viewport.scrollTop = y;
      grid.viewport.dispatchEvent(new Event("scroll"));
      expect(grid.mountedRowCount()).toBeLessThanOrEqual(capacity);
      const firstVisible = Math.floor(y / ROW);
      const mountedIndexes = [...document.querySelectorAll<HTMLElement>(".vg-row")].map((el) =>
        Number(el.dataset.row),
      );
      expect(Math.min(...mountedIndexes)).toBeGreaterThanOrEqual(firstVisible - OVERSCAN);
    }
  });

  it("shows groups best-first exactly as the server sent them", () => {
    const grid = makeGrid();
    const groups = makeGroups(5, 2);
    grid.setGroups(groups);
    const order = [...document.querySelectorAll<HTMLElement>(".vg-row")].map(
      (el) => el.dataset.videoId,
    );
    expect(order).toEqual(groups.map((g) => g.video_id));
  });

  it("applyServerOrder reorders hits and attaches yes-count badges", () => {
    const grid = makeGrid();
    const groups = makeGroups(2, 2);
    grid.setGroups(groups);
    const [a0, a1] = groups[0].hits;
    const [b0] = groups[1].hits;
    grid.applyServerOrder([asReranked(b0, 3), asReranked(a1, 2, 1), asReranked(a0, 0)]);
    expect(grid.displayedOrder()).toEqual([b0.keyframe_id, a1.keyframe_id, a0.keyframe_id]);
    const badges = [...document.querySelectorAll(".vg-badge")].map((el) => el.textContent);
    expect(badges).toContain("yes 3/3");
    expect(badges).toContain("yes 2/3 ?1");
  });

  it("selection only covers displayed hits", () => {
    const grid = makeGrid();
    grid.setGroups(makeGroups(2, 2));
    grid.toggleSelect("v0000:00000000");
    grid.toggleSelect("ghost:00000000");
    expect(grid.selectedIds()).toEqual(["v0000:00000000"]);
  });

  it("keyboard group navigation moves the active row and opens the best hit", () => {
    const opened: string[] = [];
    const grid = makeGrid((hit) => opened.push(hit.keyframe_id));
    grid.setGroups(makeGroups(10, 2));
    grid.nextGroup();
    grid.nextGroup();
    expect(grid.activeGroup()?.video_id).toBe("v0002");
    grid.prevGroup();
    expect(grid.activeGroup()?.video_id).toBe("v0001");
    grid.openActive();
    expect(opened).toEqual(["v0001:00000000"]);
  });

  it("clicking a hit opens the video at its timestamp", () => {
    const opened: Array<{ video_id: string; timestamp_ms: number }> = [];
    const grid = makeGrid((hit) => opened.push(hit));
    const hit = makeHit("v042", 30, 0.8);
    grid.setGroups([{ video_id: "v042", best: 0.8, hits: [hit] }]);
    document.querySelector<HTMLButtonElement>(".vg-hit")!.click();
    expect(opened[0].timestamp_ms).toBe(1200);
  });
});
