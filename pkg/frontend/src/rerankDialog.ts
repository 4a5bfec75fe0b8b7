export interface DialogCallbacks {
  onConfirm: (questions: string[]) => void;
  onCancel: () => void;
}

/**
 * Confirmation dialog for the three generated clarification questions.
 * The user can edit each question before any VQA cost is paid; submit stays
 * disabled unless exactly three non-empty questions are present. Cancel
 * closes without calling onConfirm, leaving the result ordering untouched.
 */
export class RerankDialog {
  readonly root: HTMLElement;
  private inputs: HTMLInputElement[] = [];
  private submit: HTMLButtonElement;
  private callbacks: DialogCallbacks | null = null;

  constructor(container: HTMLElement) {
    this.root = document.createElement("div");
    this.root.className = "rerank-dialog";
    this.root.setAttribute("role", "dialog");
    this.root.setAttribute("aria-label", "Confirm clarification questions");
    this.root.hidden = true;

    const heading = document.createElement("h2");
    heading.textContent = "Confirm clarification questions";
    this.root.append(heading);

    for (let i = 0; i < 3; i++) {
      const input = document.createElement("input");
      input.type = "text";
      input.className = "rerank-question";
      input.setAttribute("aria-label", `Question ${i + 1}`);
      input.addEventListener("input", () => this.refresh());
      this.inputs.push(input);
      this.root.append(input);
    }

    this.submit = document.createElement("button");
    this.submit.className = "rerank-submit";
    this.submit.textContent = "Run rerank";
    this.submit.addEventListener("click", () => {
      if (this.submit.disabled) return;
      const questions = this.questions();
      this.close();
      this.callbacks?.onConfirm(questions);
    });

    const cancel = document.createElement("button");
    cancel.className = "rerank-cancel";
    cancel.textContent = "Cancel";
    cancel.addEventListener("click", () => this.cancel());

    this.root.append(this.submit, cancel);
    this.root.addEventListener("keydown", (event) => {
      if ((event as KeyboardEvent).key === "Escape") this.cancel();
    });
    container.append(this.root);
  }

  open(questions: string[], callbacks: DialogCallbacks): void {
    this.callbacks = callbacks;
    this.inputs.forEach((input, i) => {
      input.value = questions[i] ?? "";
    });
    this.root.hidden = false;
    this.refresh();
    this.inputs[0].focus();
  }

  cancel(): void {
    if (this.root.hidden) return;
    this.close();
    this.callbacks?.onCancel();
  }

  isOpen(): boolean {
    return !this.root.hidden;
  }

  questions(): string[] {
    return this.inputs.map((input) => input.value.trim());
  }

  submitEnabled(): boolean {
    return !this.submit.disabled;
  }

  private refresh(): void {
    this.submit.disabled = !this.questions().every((q) => q.length > 0);
  }

  private close(): void {
    this.root.hidden = true;
  }
}
