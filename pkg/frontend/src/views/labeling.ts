import type { App } from "../app.js";
import { KEY_HELP } from "../keyboard.js";
import { boxCss } from "../overlay.js";
import type { DecisionState, ProposalReview } from "../store.js";

/** Labeling screen: the selected batch's images with proposal overlays,
 * one-key decisions, a class picker for reassignment, manual box
 * additions, and the gated submit button. */

function decisionLabel(d: DecisionState): string {
  switch (d.kind) {
    case "undecided":
      return "undecided";
    case "confirmed":
      return "confirmed";
    case "rejected":
      return "rejected";
    case "reassigned":
      return `→ ${d.className}`;
  }
}

function overlayFor(
  doc: Document,
  review: ProposalReview,
  focused: boolean,
): HTMLElement {
  const el = doc.createElement("div");
  const rect = boxCss(review.proposal.box);
  el.className = `overlay overlay-${review.decision.kind}` + (focused ? " focused" : "");
  el.dataset.proposalId = review.proposal.proposal_id;
  el.style.left = rect.left;
  el.style.top = rect.top;
  el.style.width = rect.width;
  el.style.height = rect.height;
  const tag = doc.createElement("span");
  tag.className = "tag";
  const shown =
    review.decision.kind === "reassigned"
      ? review.decision.className
      : review.proposal.class_name;
  tag.textContent = `${shown} ${review.proposal.confidence.toFixed(2)}`;
  el.append(tag);
  return el;
}

export function renderLabelingScreen(app: App, doc: Document): HTMLElement {
  const wrap = doc.createElement("div");
  wrap.className = "label-screen";
  const review = app.review;
  if (!app.info || !review) {
    const empty = doc.createElement("p");
    empty.id = "no-batch";
    empty.textContent = "no batch under review — select one from the project screen";
    wrap.append(empty);
    return wrap;
  }

  const { decided, total } = review.progress();
  const progress = doc.createElement("div");
  progress.className = "progress";
  const fill = doc.createElement("div");
  fill.className = "progress-fill";
  fill.style.width = total ? `${(decided / total) * 100}%` : "100%";
  const text = doc.createElement("span");
  text.id = "progress-text";
  text.textContent = `${decided} of ${total} proposals decided`;
  progress.append(fill, text);
  wrap.append(progress);

  const image = review.currentImage;
  const pane = doc.createElement("div");
  pane.className = "image-pane";
  const imageWrap = doc.createElement("div");
  imageWrap.className = "image-wrap";
  const img = doc.createElement("img");
  img.id = "scene-image";
  img.src = app.client.imageUrl(app.info.id, image.imageId);
  img.alt = image.imageId;
  imageWrap.append(img);
  image.proposals.forEach((p, i) => {
    imageWrap.append(overlayFor(doc, p, i === review.focus));
  });
  pane.append(imageWrap);

  const nav = doc.createElement("p");
  nav.className = "image-nav";
  const prev = doc.createElement("button");
  prev.id = "prev-image";
  prev.textContent = "◀";
  prev.disabled = review.cursor === 0;
  prev.addEventListener("click", () => {
    review.prevImage();
    app.render();
  });
  const pos = doc.createElement("span");
  pos.id = "image-pos";
  pos.textContent = ` image ${review.cursor + 1} / ${review.images.length} — ${image.imageId} `;
  const next = doc.createElement("button");
  next.id = "next-image";
  next.textContent = "▶";
  next.disabled = review.cursor === review.images.length - 1;
  next.addEventListener("click", () => {
    review.nextImage();
    app.render();
  });
  nav.append(prev, pos, next);
  pane.append(nav);
  wrap.append(pane);

  const side = doc.createElement("div");
  side.className = "side-pane";

  const list = doc.createElement("ol");
  list.id = "proposal-list";
  image.proposals.forEach((p, i) => {
    const li = doc.createElement("li");
    li.className = `decision-${p.decision.kind}` + (i === review.focus ? " focused" : "");
    li.textContent = `${p.proposal.class_name} (${p.proposal.confidence.toFixed(2)}) — ${decisionLabel(p.decision)}`;
    li.addEventListener("click", () => {
      review.focus = i;
      app.render();
    });
    list.append(li);
  });
  side.append(list);

  // manual box additions, in the same normalized coordinates
  const addForm = doc.createElement("form");
  addForm.id = "add-box-form";
  const classSel = doc.createElement("select");
  classSel.id = "add-box-class";
  app.info.class_names.forEach((name, i) => {
    const opt = doc.createElement("option");
    opt.value = String(i);
    opt.textContent = name;
    classSel.append(opt);
  });
  const coords: Record<string, HTMLInputElement> = {};
  for (const [name, fallback] of [["cx", "0.5"], ["cy", "0.5"], ["w", "0.2"], ["h", "0.2"]]) {
    const input = doc.createElement("input");
    input.type = "number";
    input.id = `add-box-${name}`;
    input.step = "0.01";
    input.min = "0";
    input.max = "1";
    input.value = fallback;
    coords[name] = input;
  }
  const addBtn = doc.createElement("button");
  addBtn.type = "submit";
  addBtn.id = "add-box-btn";
  addBtn.textContent = "add box";
  addForm.append(classSel, coords.cx, coords.cy, coords.w, coords.h, addBtn);
  addForm.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const classId = Number(classSel.value);
    app.review?.addBox({
      imageId: image.imageId,
      classId,
      className: app.info!.class_names[classId],
      box: {
        cx: Number(coords.cx.value),
        cy: Number(coords.cy.value),
        w: Number(coords.w.value),
        h: Number(coords.h.value),
      },
    });
    app.render();
  });
  side.append(addForm);

  const addedList = doc.createElement("ul");
  addedList.id = "added-boxes";
  review.added.forEach((b, i) => {
    if (b.imageId !== image.imageId) return;
    const li = doc.createElement("li");
    li.textContent = `${b.className} @ (${b.box.cx.toFixed(2)}, ${b.box.cy.toFixed(2)}) `;
    const rm = doc.createElement("button");
    rm.textContent = "remove";
    rm.addEventListener("click", () => {
      review.removeBox(i);
      app.render();
    });
    li.append(rm);
    addedList.append(li);
  });
  side.append(addedList);

  const submit = doc.createElement("button");
  submit.id = "submit-btn";
  submit.textContent = review.submitReady
    ? "submit labels"
    : `submit labels (${review.undecided} undecided)`;
  submit.disabled = !review.submitReady || app.mutationInFlight;
  submit.addEventListener("click", () => void app.submitBatch());
  side.append(submit);

  const help = doc.createElement("dl");
  help.className = "keys";
  for (const { keys, what } of KEY_HELP) {
    const dt = doc.createElement("dt");
    dt.textContent = keys;
    const dd = doc.createElement("dd");
    dd.textContent = what;
    help.append(dt, dd);
  }
  side.append(help);

  wrap.append(side);
  return wrap;
}
