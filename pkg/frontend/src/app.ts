import { ApiError, Client } from "./api.js";
import { Banner } from "./banner.js";
import { actionFor } from "./keyboard.js";
import { ClassPicker } from "./picker.js";
import { BatchReview, type AddedBox } from "./store.js";
import type { Metrics, ProjectInfo } from "./types.js";
import { renderCurveScreen } from "./views/curves.js";
import { renderLabelingScreen } from "./views/labeling.js";
import { renderProjectScreen } from "./views/project.js";

export type Screen = "project" | "label" | "curves";

export interface AppOptions {
  /** Interval for re-fetching project info while the server is busy. */
  pollIntervalMs?: number;
}

/** Application shell: screen switching, server communication, error
 * banner, and the keyboard-first labeling loop.
 *
 * State discipline: everything shown comes from the last acknowledged
 * server response. After a mutation the project info is re-fetched
 * rather than patched locally. At most one mutation is in flight.
 */
export class App {
  readonly client: Client;
  readonly root: HTMLElement;
  readonly banner: Banner;
  readonly picker: ClassPicker;

  screen: Screen = "project";
  info: ProjectInfo | null = null;
  review: BatchReview | null = null;
  metricsData: Metrics | null = null;
  mutationInFlight = false;

  private readonly doc: Document;
  private readonly pollIntervalMs: number;
  private pollTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(root: HTMLElement, client: Client, options: AppOptions = {}) {
    this.root = root;
    this.client = client;
    this.doc = root.ownerDocument;
    this.pollIntervalMs = options.pollIntervalMs ?? 1000;
    this.banner = new Banner(this.doc);
    this.picker = new ClassPicker(this.doc);
    this.doc.addEventListener("keydown", (ev) => this.onKeydown(ev));
    this.render();
  }

  // ----- screens ----------------------------------------------------------

  goto(screen: Screen): void {
    this.screen = screen;
    this.render();
  }

  render(): void {
    this.root.textContent = "";
    this.root.append(this.banner.el, this.renderNav());
    const body =
      this.screen === "label"
        ? renderLabelingScreen(this, this.doc)
        : this.screen === "curves"
          ? renderCurveScreen(this, this.doc)
          : renderProjectScreen(this, this.doc);
    this.root.append(body, this.picker.el);
  }

  private renderNav(): HTMLElement {
    const nav = this.doc.createElement("nav");
    const entries: [string, Screen, boolean][] = [
      ["project", "project", false],
      ["label", "label", !this.info],
      ["curves", "curves", !this.info],
    ];
    for (const [label, screen, disabled] of entries) {
      const btn = this.doc.createElement("button");
      btn.id = `nav-${screen}`;
      btn.textContent = label;
      btn.disabled = disabled;
      btn.className = this.screen === screen ? "active" : "";
      btn.addEventListener("click", () => {
        if (screen === "curves") void this.showCurves();
        else this.goto(screen);
      });
      nav.append(btn);
    }
    return nav;
  }

  // ----- server actions ---------------------------------------------------

  async createProject(body: Record<string, unknown>): Promise<void> {
    await this.runMutation(async () => {
      this.info = await this.client.createProject(body);
      this.screen = "project";
    });
  }

  async loadProject(id: string): Promise<void> {
    try {
      this.info = await this.client.getProject(id);
      this.banner.hide();
      this.screen = "project";
      this.watchBusy();
    } catch (err) {
      this.surface(err, () => void this.loadProject(id));
    }
    this.render();
  }

  async refreshInfo(): Promise<void> {
    if (!this.info) return;
    this.info = await this.client.getProject(this.info.id);
    this.watchBusy();
  }

  async uploadFiles(files: { name: string; blob?: Blob }[] | File[]): Promise<void> {
    const id = this.info?.id;
    if (!id) return;
    const payload = Array.from(files as File[]).map((f) => ({
      name: f.name,
      blob: f as Blob,
    }));
    await this.runMutation(async () => {
      await this.client.uploadScenes(id, payload);
      await this.refreshInfo();
    });
  }

  async selectBatch(): Promise<void> {
    const id = this.info?.id;
    if (!id) return;
    await this.runMutation(async () => {
      const batch = await this.client.select(id);
      this.review = new BatchReview(batch);
      this.screen = "label";
      await this.refreshInfo();
    });
  }

  async submitBatch(): Promise<void> {
    const id = this.info?.id;
    const review = this.review;
    if (!id || !review) return;
    if (!review.submitReady) {
      this.banner.show(`${review.undecided} proposals are still undecided`);
      return;
    }
    await this.runMutation(async () => {
      await this.client.submitLabels(
        id,
        review.batchId,
        review.wireDecisions(),
        review.wireAddedBoxes(),
      );
      this.review = null;
      this.screen = "project";
      await this.refreshInfo();
    });
  }

  async trainNow(): Promise<void> {
    const id = this.info?.id;
    if (!id) return;
    await this.runMutation(async () => {
      await this.client.train(id);
      await this.refreshInfo();
      this.metricsData = await this.client.metrics(id);
    });
  }

  async showCurves(): Promise<void> {
    const id = this.info?.id;
    if (!id) return;
    try {
      this.metricsData = await this.client.metrics(id);
      this.screen = "curves";
      this.banner.hide();
    } catch (err) {
      this.surface(err, () => void this.showCurves());
    }
    this.render();
  }

  // ----- keyboard ---------------------------------------------------------

  private onKeydown(ev: KeyboardEvent): void {
    if (this.screen !== "label" || !this.review || this.picker.isOpen) return;
    const action = actionFor(ev);
    if (!action) return;
    ev.preventDefault();
    const review = this.review;
    switch (action) {
      case "confirm":
        review.confirm();
        break;
      case "reject":
        review.reject();
        break;
      case "reassign":
        this.openPicker();
        return; // picker renders itself; keep focus state untouched
      case "next-proposal":
        review.nextProposal();
        break;
      case "prev-proposal":
        review.prevProposal();
        break;
      case "next-image":
        review.nextImage();
        break;
      case "prev-image":
        review.prevImage();
        break;
      case "submit":
        void this.submitBatch();
        return;
    }
    this.render();
  }

  private openPicker(): void {
    const review = this.review;
    const focused = review?.focusedProposal;
    if (!this.info || !review || !focused) return;
    this.picker.open({
      classes: this.info.class_names,
      distribution: focused.proposal.class_distribution,
      onPick: (pick) => {
        review.reassign(pick.classId, pick.className);
        this.render();
      },
      onCancel: () => this.render(),
    });
  }

  addBox(box: AddedBox): void {
    this.review?.addBox(box);
  }

  // ----- plumbing ---------------------------------------------------------

  /** Run one mutating action: single-flight, banner on failure, full
   * re-render afterwards. Stale-batch conflicts trigger a fresh select. */
  private async runMutation(fn: () => Promise<void>): Promise<void> {
    if (this.mutationInFlight) return;
    this.mutationInFlight = true;
    this.render();
    let followup: (() => Promise<void>) | null = null;
    try {
      await fn();
      this.banner.hide();
    } catch (err) {
      followup = this.surface(err, () => void this.runMutation(fn));
    } finally {
      this.mutationInFlight = false;
      this.render();
    }
    if (followup) await followup();
  }

  /** Show an error banner; returns a follow-up action for conflicts
   * that have a canonical recovery. */
  private surface(err: unknown, retry?: () => void): (() => Promise<void>) | null {
    if (err instanceof ApiError) {
      if (err.status === 409 && err.code === "stale_batch") {
        this.review = null;
        this.banner.show("batch went stale — selecting a fresh one");
        return () => this.selectBatch();
      }
      if (err.status === 409 && err.code === "busy") {
        this.banner.show("server is busy training — will refresh when done");
        this.watchBusy(true);
        return null;
      }
      this.banner.show(`${err.code}: ${err.message}`, retry);
      return null;
    }
    this.banner.show(err instanceof Error ? err.message : String(err), retry);
    return null;
  }

  /** Poll project info while the server reports busy. */
  private watchBusy(force = false): void {
    if (!force && !this.info?.busy) return;
    if (this.pollTimer !== null) return;
    this.pollTimer = setTimeout(async () => {
      this.pollTimer = null;
      try {
        await this.refreshInfo();
      } catch {
        // transient poll failure; the next user action will surface it
      }
      this.render();
      if (this.info?.busy) this.watchBusy();
    }, this.pollIntervalMs);
  }
}
