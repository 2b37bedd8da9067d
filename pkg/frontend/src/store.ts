import type { Batch, Box, Proposal, WireAddedBox, WireDecision } from "./types.js";

/** Review verdict of one proposal. Starts undecided; only explicit user
 * actions move it, and submit stays blocked while any remain. */
export type DecisionState =
  | { kind: "undecided" }
  | { kind: "confirmed" }
  | { kind: "rejected" }
  | { kind: "reassigned"; classId: number | null; className: string };

export interface ProposalReview {
  proposal: Proposal;
  decision: DecisionState;
}

export interface ImageReview {
  imageId: string;
  value: number;
  proposals: ProposalReview[];
}

export interface AddedBox {
  imageId: string;
  classId: number;
  className: string;
  box: Box;
}

/** Client-side state of one proposed batch under review.
 *
 * Pure bookkeeping: no requests, no DOM. The cursor tracks the focused
 * image/proposal so single-key decisions can walk the whole batch.
 */
export class BatchReview {
  readonly batchId: string;
  readonly images: ImageReview[];
  readonly added: AddedBox[] = [];
  cursor = 0; // image index
  focus = 0; // proposal index within the image

  constructor(batch: Batch) {
    this.batchId = batch.batch_id;
    this.images = batch.images.map((img) => ({
      imageId: img.image_id,
      value: img.value,
      proposals: img.proposals.map((p) => ({
        proposal: p,
        decision: { kind: "undecided" } as DecisionState,
      })),
    }));
  }

  get currentImage(): ImageReview {
    return this.images[this.cursor];
  }

  get focusedProposal(): ProposalReview | null {
    return this.currentImage.proposals[this.focus] ?? null;
  }

  get total(): number {
    return this.images.reduce((n, img) => n + img.proposals.length, 0);
  }

  get undecided(): number {
    return this.images.reduce(
      (n, img) => n + img.proposals.filter((p) => p.decision.kind === "undecided").length,
      0,
    );
  }

  /** Submit is allowed exactly when every proposal has a decision. */
  get submitReady(): boolean {
    return this.undecided === 0;
  }

  decide(decision: DecisionState): void {
    const target = this.focusedProposal;
    if (!target) return;
    target.decision = decision;
    this.advance();
  }

  confirm(): void {
    this.decide({ kind: "confirmed" });
  }

  reject(): void {
    this.decide({ kind: "rejected" });
  }

  reassign(classId: number | null, className: string): void {
    this.decide({ kind: "reassigned", classId, className });
  }

  /** Move focus to the next undecided proposal, crossing image
   * boundaries, so repeated single-key decisions cover the batch. */
  advance(): void {
    for (let step = 0; step < this.images.length; step++) {
      const i = (this.cursor + step) % this.images.length;
      const from = step === 0 ? this.focus : -1;
      const next = this.images[i].proposals.findIndex(
        (p, j) => j > from && p.decision.kind === "undecided",
      );
      if (next >= 0) {
        this.cursor = i;
        this.focus = next;
        return;
      }
      // wrap within the starting image before leaving it
      if (step === 0) {
        const before = this.images[i].proposals.findIndex(
          (p) => p.decision.kind === "undecided",
        );
        if (before >= 0) {
          this.focus = before;
          return;
        }
      }
    }
  }

  gotoImage(index: number): void {
    if (index < 0 || index >= this.images.length) return;
    this.cursor = index;
    this.focus = 0;
  }

  nextImage(): void {
    this.gotoImage(Math.min(this.cursor + 1, this.images.length - 1));
  }

  prevImage(): void {
    this.gotoImage(Math.max(this.cursor - 1, 0));
  }

  nextProposal(): void {
    const n = this.currentImage.proposals.length;
    if (n > 0) this.focus = (this.focus + 1) % n;
  }

  prevProposal(): void {
    const n = this.currentImage.proposals.length;
    if (n > 0) this.focus = (this.focus - 1 + n) % n;
  }

  addBox(box: AddedBox): void {
    this.added.push(box);
  }

  removeBox(index: number): void {
    this.added.splice(index, 1);
  }

  /** Per-image progress pairs for the progress bar. */
  progress(): { decided: number; total: number } {
    return { decided: this.total - this.undecided, total: this.total };
  }

  /** Wire decisions, one per proposal id. Throws while any proposal is
   * undecided — the caller must keep submit disabled until ready. */
  wireDecisions(): WireDecision[] {
    if (!this.submitReady) {
      throw new Error(`${this.undecided} proposals are still undecided`);
    }
    const out: WireDecision[] = [];
    for (const img of this.images) {
      for (const { proposal, decision } of img.proposals) {
        if (decision.kind === "confirmed") {
          out.push({ proposal_id: proposal.proposal_id, action: "confirm" });
        } else if (decision.kind === "rejected") {
          out.push({ proposal_id: proposal.proposal_id, action: "reject" });
        } else if (decision.kind === "reassigned") {
          out.push(
            decision.classId !== null
              ? { proposal_id: proposal.proposal_id, action: "reassign", class_id: decision.classId }
              : { proposal_id: proposal.proposal_id, action: "reassign", new_class_name: decision.className },
          );
        }
      }
    }
    return out;
  }

  wireAddedBoxes(): WireAddedBox[] {
    return this.added.map((b) => ({
      image_id: b.imageId,
      class_id: b.classId,
      cx: b.box.cx,
      cy: b.box.cy,
      w: b.box.w,
      h: b.box.h,
    }));
  }
}
