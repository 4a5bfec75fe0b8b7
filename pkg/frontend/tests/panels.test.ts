import { describe, expect, it } from "vitest";

import { PanelState } from "../src/panels";

describe("PanelState", () => {
  it("starts on the fused panel with configured defaults", () => {
    const panels = new PanelState({ k: 50, alpha: 0.7 });
    expect(panels.activePanel()).toBe("fused");
    expect(panels.query()).toEqual({ text: "", k: 50, alpha: 0.7 });
  });

  it("exactly one panel is active at a time", () => {
    const panels = new PanelState();
    panels.activate("asr");
    expect(panels.activePanel()).toBe("asr");
    panels.activate("qa");
    expect(panels.activePanel()).toBe("qa");
  });

  it("query text is kept per panel", () => {
    const panels = new PanelState();
    panels.setQueryText("dog in park");
    panels.activate("ocr");
    panels.setQueryText("stop sign");
    expect(panels.query("fused").text).toBe("dog in park");
    expect(panels.query("ocr").text).toBe("stop sign");
  });

  it("selection only accepts currently displayed hits", () => {
    const panels = new PanelState();
    const displayed = ["a", "b", "c"];
    panels.toggleSelection("b", displayed);
    panels.toggleSelection("ghost", displayed);
    expect(panels.selectedIds()).toEqual(["b"]);
  });

  it("syncSelection drops ids that left the display", () => {
    const panels = new PanelState();
    panels.toggleSelection("a", ["a", "b"]);
    panels.toggleSelection("b", ["a", "b"]);
    panels.syncSelection(["b"]);
    expect(panels.selectedIds()).toEqual(["b"]);
  });
});
