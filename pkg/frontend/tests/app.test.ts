import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import { App } from "../src/app";
import { asReranked, jsonResponse, makeGroups } from "./helpers";
import type { RerankHit } from "../src/types";

function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}

interface Script {
  groups?: ReturnType<typeof makeGroups>;
  questions?: string[];
  rerankHits?: RerankHit[];
  degraded?: boolean;
  captured: { path: string; body: any }[];
}

function scriptedApi(script: Script): ApiClient {
  return new ApiClient("", async (url, init) => {
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    script.captured.push({ path: url, body });
    if (url === "/search") {
      return jsonResponse({ groups: script.groups ?? [] });
    }
    if (url === "/rerank/questions") {
      return jsonResponse({ questions: script.questions ?? ["A?", "B?", "C?"] });
    }
    if (url === "/rerank/execute") {
      return jsonResponse({ hits: script.rerankHits ?? [], degraded: script.degraded ?? false });
    }
    return jsonResponse({ error: { code: "unknown_target", message: url } }, 404);
  });
}

function makeApp(script: Script): App {
  const host = document.createElement("div");
  document.body.append(host);
  return new App(host, scriptedApi(script));
}

describe("App rerank flow", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("confirm path applies the server-returned order", async () => {
    const groups = makeGroups(2, 2);
    const [a0, a1] = groups[0].hits;
    const [b0, b1] = groups[1].hits;
    const script: Script = {
      groups,
      rerankHits: [asReranked(b1, 3), asReranked(b0, 2), asReranked(a0, 1), asReranked(a1, 0)],
      captured: [],
    };
    const app = makeApp(script);
    await app.runQuery("yellow dog");
    expect(app.grid.displayedOrder()).toEqual([
      a0.keyframe_id,
      a1.keyframe_id,
      b0.keyframe_id,
      b1.keyframe_id,
    ]);

    await app.startRerank();
    expect(app.dialog.isOpen()).toBe(true);
    document.querySelector<HTMLButtonElement>(".rerank-submit")!.click();
    await flush();

    expect(app.grid.displayedOrder()).toEqual([
      b1.keyframe_id,
      b0.keyframe_id,
      a0.keyframe_id,
      a1.keyframe_id,
    ]);
  });

  it("editing a question sends the edited text to execute", async () => {
    const script: Script = { groups: makeGroups(1, 2), rerankHits: [], captured: [] };
    const app = makeApp(script);
    await app.runQuery("yellow dog");
    await app.startRerank();

    const input = document.querySelectorAll<HTMLInputElement>(".rerank-question")[1];
    input.value = "Is the dog wearing a collar?";
    input.dispatchEvent(new Event("input"));
    document.querySelector<HTMLButtonElement>(".rerank-submit")!.click();
    await flush();

    const execute = script.captured.find((c) => c.path === "/rerank/execute");
    expect(execute?.body.questions).toEqual(["A?", "Is the dog wearing a collar?", "C?"]);
    expect(execute?.body.query).toBe("yellow dog");
  });

  it("cancel leaves the ordering untouched and sends no execute", async () => {
    const groups = makeGroups(3, 2);
    const script: Script = { groups, captured: [] };
    const app = makeApp(script);
    await app.runQuery("yellow dog");
    const before = app.grid.displayedOrder();

    await app.startRerank();
    document.querySelector<HTMLButtonElement>(".rerank-cancel")!.click();
    await flush();

    expect(app.grid.displayedOrder()).toEqual(before);
    expect(script.captured.some((c) => c.path === "/rerank/execute")).toBe(false);
    expect(app.statusText()).toMatch(/cancelled/);
  });

  it("degraded execute keeps the original order and warns", async () => {
    const groups = makeGroups(2, 1);
    const script: Script = { groups, degraded: true, rerankHits: [], captured: [] };
    const app = makeApp(script);
    await app.runQuery("yellow dog");
    const before = app.grid.displayedOrder();

    await app.startRerank();
    document.querySelector<HTMLButtonElement>(".rerank-submit")!.click();
    await flush();

    expect(app.grid.displayedOrder()).toEqual(before);
    expect(app.statusText()).toMatch(/degraded/);
  });

  it("keyboard shortcut dispatch switches panels and navigates groups", async () => {
    const script: Script = { groups: makeGroups(4, 1), captured: [] };
    const app = makeApp(script);
    await app.runQuery("query");
    app.dispatch({ kind: "next-group" });
    app.dispatch({ kind: "next-group" });
    expect(app.grid.activeGroup()?.video_id).toBe("v0002");
    app.dispatch({ kind: "panel", panel: "qa" });
    expect(app.panels.activePanel()).toBe("qa");
  });
});
