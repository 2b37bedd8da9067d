/** Non-blocking error/status banner with an optional retry action.
 * Every 4xx/5xx surfaces here; the screen underneath stays usable. */

export class Banner {
  readonly el: HTMLElement;

  constructor(doc: Document = document) {
    this.el = doc.createElement("div");
    this.el.className = "banner";
    this.el.id = "banner";
    this.el.setAttribute("role", "alert");
    this.el.hidden = true;
  }

  show(message: string, retry?: () => void): void {
    const doc = this.el.ownerDocument;
    this.el.textContent = "";
    const text = doc.createElement("span");
    text.id = "banner-text";
    text.textContent = message;
    this.el.append(text);
    if (retry) {
      const btn = doc.createElement("button");
      btn.id = "banner-retry";
      btn.textContent = "retry";
      btn.addEventListener("click", () => {
        this.hide();
        retry();
      });
      this.el.append(btn);
    }
    const dismiss = doc.createElement("button");
    dismiss.id = "banner-dismiss";
    dismiss.textContent = "dismiss";
    dismiss.addEventListener("click", () => this.hide());
    this.el.append(dismiss);
    this.el.hidden = false;
  }

  hide(): void {
    this.el.hidden = true;
  }

  get visible(): boolean {
    return !this.el.hidden;
  }

  get message(): string {
    return this.el.querySelector("#banner-text")?.textContent ?? "";
  }
}
