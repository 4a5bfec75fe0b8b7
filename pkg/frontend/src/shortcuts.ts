import type { PanelId } from "./types";

export type ShortcutAction =
  | { kind: "panel"; panel: PanelId }
  | { kind: "next-group" }
  | { kind: "prev-group" }
  | { kind: "open-hit" }
  | { kind: "rerank" }
  | { kind: "help" };

/** Documented key map; every grid/panel action is reachable by keyboard. */
export const KEY_MAP: Record<string, ShortcutAction> = {
  "1": { kind: "panel", panel: "fused" },
  "2": { kind: "panel", panel: "ocr" },
  "3": { kind: "panel", panel: "asr" },
  "4": { kind: "panel", panel: "qa" },
  j: { kind: "next-group" },
  k: { kind: "prev-group" },
  Enter: { kind: "open-hit" },
  o: { kind: "open-hit" },
  r: { kind: "rerank" },
  "?": { kind: "help" },
};

function isTypingTarget(target: EventTarget | null): boolean {
  return (
    target instanceof HTMLElement &&
    (target.tagName === "INPUT" || target.tagName === "TEXTAREA" || target.isContentEditable)
  );
}

/** Map a keydown to its action, or null when typing in a field / unbound key. */
export function resolveShortcut(event: KeyboardEvent): ShortcutAction | null {
  if (event.ctrlKey || event.metaKey || event.altKey) return null;
  if (isTypingTarget(event.target)) return null;
  return KEY_MAP[event.key] ?? null;
}

export function installShortcuts(
  root: Pick<Document, "addEventListener">,
  handler: (action: ShortcutAction) => void,
): void {
  root.addEventListener("keydown", (event) => {
    const action = resolveShortcut(event as KeyboardEvent);
    if (action) {
      (event as KeyboardEvent).preventDefault();
      handler(action);
    }
  });
}
