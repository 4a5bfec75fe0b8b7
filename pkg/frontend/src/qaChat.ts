import { ApiClient, ApiError } from "./api";
import type { QaResponse } from "./types";

export type QaTarget = { keyframe_id?: string; video_id?: string };

/**
 * Conversational QA panel: question/answer bubbles over stateless /qa
 * calls. Per-frame answers are expandable, low-agreement votes are flagged
 * for human judgment, and provider failures render a retryable error bubble.
 */
export class QaChat {
  readonly root: HTMLElement;
  private log: HTMLElement;

  constructor(container: HTMLElement, private api: ApiClient) {
    this.root = document.createElement("section");
    this.root.className = "qa-chat";
    this.log = document.createElement("div");
    this.log.className = "qa-log";
    this.log.setAttribute("role", "log");
    this.log.setAttribute("aria-live", "polite");
    this.root.append(this.log);
    container.append(this.root);
  }

  async ask(target: QaTarget, question: string): Promise<void> {
    this.appendBubble("qa-user", question);
    const pending = this.appendBubble("qa-loading", "Thinking…");
    try {
      const answer = await this.api.qa(question, target);
      pending.remove();
      this.renderAnswer(answer);
    } catch (error) {
      pending.remove();
      this.renderError(target, question, error);
    }
  }

  bubbles(): HTMLElement[] {
    return [...this.log.children] as HTMLElement[];
  }

  private appendBubble(className: string, text: string): HTMLElement {
    const bubble = document.createElement("div");
    bubble.className = `qa-bubble ${className}`;
    bubble.textContent = text;
    this.log.append(bubble);
    return bubble;
  }

  private renderAnswer(answer: QaResponse): void {
    const bubble = this.appendBubble("qa-answer", "");
    const text = document.createElement("p");
    text.className = "qa-text";
    text.textContent = answer.text;
    bubble.append(text);

    const meta = document.createElement("span");
    meta.className = "qa-meta";
    meta.textContent = `${answer.category} · ${answer.latency_ms} ms`;
    bubble.append(meta);

    if (answer.low_agreement) {
      const flag = document.createElement("span");
      flag.className = "qa-low-agreement";
      flag.textContent = "low agreement — judge for yourself";
      bubble.append(flag);
    }

    if (answer.per_frame.length > 1) {
      const details = document.createElement("details");
      details.className = "qa-per-frame";
      const summary = document.createElement("summary");
      summary.textContent = `per-frame answers (${answer.per_frame.length})`;
      details.append(summary);
      for (const frame of answer.per_frame) {
        const line = document.createElement("div");
        line.textContent = `${frame.keyframe_id}: ${frame.answer}`;
        details.append(line);
      }
      bubble.append(details);
    }
  }

  private renderError(target: QaTarget, question: string, error: unknown): void {
    const bubble = this.appendBubble("qa-error", "");
    const text = document.createElement("span");
    text.textContent =
      error instanceof ApiError ? `${error.code}: ${error.message}` : "request failed";
    const retry = document.createElement("button");
    retry.className = "qa-retry";
    retry.textContent = "Retry";
    retry.addEventListener("click", () => {
      bubble.remove();
      void this.ask(target, question);
    });
    bubble.append(text, retry);
  }
}
