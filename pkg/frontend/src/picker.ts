/** Class picker with type-ahead and new-class creation.
 *
 * Entries are ranked by the proposal's own class distribution (most
 * likely first), so the default highlight is the proposal's top class
 * and a reassignment is usually two keystrokes.
 */

export interface PickEntry {
  /** Existing class id, or null for the "create new class" entry. */
  id: number | null;
  name: string;
  create?: boolean;
}

export interface Pick {
  classId: number | null;
  className: string;
}

/** Classes ordered by descending distribution mass (stable on ties);
 * without a distribution the registry order is kept. */
export function rankClasses(classes: string[], distribution?: number[]): PickEntry[] {
  const entries = classes.map((name, id) => ({ id, name }));
  if (!distribution) return entries;
  return entries
    .map((e, i) => ({ e, mass: distribution[i] ?? 0, i }))
    .sort((a, b) => b.mass - a.mass || a.i - b.i)
    .map(({ e }) => e);
}

/** Case-insensitive type-ahead: prefix matches first, then substring
 * matches, original order preserved within each group. */
export function filterClasses(entries: PickEntry[], query: string): PickEntry[] {
  const q = query.trim().toLowerCase();
  if (!q) return entries;
  const prefix = entries.filter((e) => e.name.toLowerCase().startsWith(q));
  const inner = entries.filter(
    (e) => !e.name.toLowerCase().startsWith(q) && e.name.toLowerCase().includes(q),
  );
  return [...prefix, ...inner];
}

/** Filtered entries plus a trailing create-entry when the query names a
 * class that does not exist yet. */
export function buildEntries(
  classes: string[],
  distribution: number[] | undefined,
  query: string,
): PickEntry[] {
  const out = filterClasses(rankClasses(classes, distribution), query);
  const name = query.trim();
  if (name && !classes.some((c) => c.toLowerCase() === name.toLowerCase())) {
    out.push({ id: null, name, create: true });
  }
  return out;
}

export interface PickerOptions {
  classes: string[];
  distribution?: number[];
  onPick: (pick: Pick) => void;
  onCancel: () => void;
}

/** Modal DOM component. `open` shows it with the input focused; arrow
 * keys move the highlight, Enter picks, Escape cancels. */
export class ClassPicker {
  readonly el: HTMLElement;
  private readonly input: HTMLInputElement;
  private readonly list: HTMLUListElement;
  private options: PickerOptions | null = null;
  private entries: PickEntry[] = [];
  private highlight = 0;

  constructor(doc: Document = document) {
    this.el = doc.createElement("div");
    this.el.className = "picker";
    this.el.hidden = true;
    this.input = doc.createElement("input");
    this.input.type = "text";
    this.input.id = "picker-input";
    this.input.placeholder = "class name…";
    this.input.setAttribute("aria-label", "class name");
    this.list = doc.createElement("ul");
    this.list.id = "picker-list";
    this.el.append(this.input, this.list);

    this.input.addEventListener("input", () => this.refresh());
    this.input.addEventListener("keydown", (ev) => this.onKey(ev));
  }

  get isOpen(): boolean {
    return !this.el.hidden;
  }

  open(options: PickerOptions): void {
    this.options = options;
    this.input.value = "";
    this.highlight = 0;
    this.el.hidden = false;
    this.refresh();
    this.input.focus();
  }

  close(): void {
    this.el.hidden = true;
    this.options = null;
  }

  private refresh(): void {
    if (!this.options) return;
    this.entries = buildEntries(
      this.options.classes,
      this.options.distribution,
      this.input.value,
    );
    this.highlight = Math.min(this.highlight, Math.max(this.entries.length - 1, 0));
    this.list.textContent = "";
    this.entries.forEach((entry, i) => {
      const li = this.list.ownerDocument.createElement("li");
      li.textContent = entry.create ? `create “${entry.name}”` : entry.name;
      li.className = i === this.highlight ? "highlight" : "";
      if (entry.create) li.classList.add("create");
      li.addEventListener("click", () => this.pick(entry));
      this.list.append(li);
    });
  }

  private onKey(ev: KeyboardEvent): void {
    if (ev.key === "ArrowDown") {
      this.highlight = Math.min(this.highlight + 1, this.entries.length - 1);
      this.refresh();
      ev.preventDefault();
    } else if (ev.key === "ArrowUp") {
      this.highlight = Math.max(this.highlight - 1, 0);
      this.refresh();
      ev.preventDefault();
    } else if (ev.key === "Enter") {
      const entry = this.entries[this.highlight];
      if (entry) this.pick(entry);
      ev.preventDefault();
    } else if (ev.key === "Escape") {
      const opts = this.options;
      this.close();
      opts?.onCancel();
      ev.preventDefault();
    }
    ev.stopPropagation(); // keep labeling shortcuts out of the picker
  }

  private pick(entry: PickEntry): void {
    const opts = this.options;
    this.close();
    opts?.onPick({ classId: entry.id, className: entry.name });
  }
}
