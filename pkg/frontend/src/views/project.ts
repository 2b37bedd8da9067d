import type { App } from "../app.js";

/** Project screen: create or load a project, inspect pool counters,
 * upload scenes, kick off selection and training. */

const METRICS = ["sum", "avg", "max", "det_class_diff", "weighted_cell_sum", "random"];

function field(
  doc: Document,
  labelText: string,
  input: HTMLElement,
): HTMLLabelElement {
  const label = doc.createElement("label");
  label.textContent = labelText + " ";
  label.append(input);
  return label;
}

function numberInput(doc: Document, id: string, value: number, min = 1): HTMLInputElement {
  const el = doc.createElement("input");
  el.type = "number";
  el.id = id;
  el.min = String(min);
  el.value = String(value);
  return el;
}

function renderSetupForms(app: App, doc: Document): HTMLElement {
  const wrap = doc.createElement("div");
  wrap.className = "setup";

  const create = doc.createElement("form");
  create.id = "create-form";
  const heading = doc.createElement("h2");
  heading.textContent = "New project";
  const classes = doc.createElement("input");
  classes.type = "text";
  classes.id = "create-classes";
  classes.value = "disk, square, triangle";
  const metric = doc.createElement("select");
  metric.id = "create-metric";
  for (const m of METRICS) {
    const opt = doc.createElement("option");
    opt.value = m;
    opt.textContent = m;
    metric.append(opt);
  }
  const imageSize = numberInput(doc, "create-image-size", 48, 16);
  const batchSize = numberInput(doc, "create-batch-size", 10);
  const iters = numberInput(doc, "create-update-iters", 200);
  const createBtn = doc.createElement("button");
  createBtn.type = "submit";
  createBtn.id = "create-btn";
  createBtn.textContent = "create project";
  create.append(
    heading,
    field(doc, "classes (comma separated)", classes),
    field(doc, "selection metric", metric),
    field(doc, "image size", imageSize),
    field(doc, "batch size", batchSize),
    field(doc, "update iterations", iters),
    createBtn,
  );
  create.addEventListener("submit", (ev) => {
    ev.preventDefault();
    void app.createProject({
      class_names: classes.value.split(",").map((s) => s.trim()).filter(Boolean),
      metric: metric.value,
      image_size: Number(imageSize.value),
      batch_size: Number(batchSize.value),
      update_iterations: Number(iters.value),
    });
  });

  const load = doc.createElement("form");
  load.id = "load-form";
  const loadHeading = doc.createElement("h2");
  loadHeading.textContent = "Open existing";
  const loadId = doc.createElement("input");
  loadId.type = "text";
  loadId.id = "load-id";
  loadId.placeholder = "project id";
  const loadBtn = doc.createElement("button");
  loadBtn.type = "submit";
  loadBtn.id = "load-btn";
  loadBtn.textContent = "open";
  load.append(loadHeading, field(doc, "project id", loadId), loadBtn);
  load.addEventListener("submit", (ev) => {
    ev.preventDefault();
    if (loadId.value.trim()) void app.loadProject(loadId.value.trim());
  });

  wrap.append(create, load);
  return wrap;
}

function renderDashboard(app: App, doc: Document): HTMLElement {
  const info = app.info!;
  const wrap = doc.createElement("div");
  wrap.className = "dashboard";

  const heading = doc.createElement("h2");
  heading.id = "project-id";
  heading.textContent = `project ${info.id}`;
  wrap.append(heading);

  const busy = doc.createElement("span");
  busy.id = "busy-flag";
  busy.textContent = "training in progress…";
  busy.hidden = !info.busy;
  wrap.append(busy);

  const pool = doc.createElement("p");
  pool.id = "pool-counts";
  for (const [key, value] of Object.entries(info.pool)) {
    const span = doc.createElement("span");
    span.id = `pool-${key}`;
    span.textContent = `${key}: ${value}`;
    pool.append(span, doc.createTextNode("  "));
  }
  wrap.append(pool);

  const classList = doc.createElement("ul");
  classList.id = "class-list";
  info.class_names.forEach((name, i) => {
    const li = doc.createElement("li");
    li.textContent = `${i}: ${name}`;
    classList.append(li);
  });
  wrap.append(classList);

  const uploadForm = doc.createElement("form");
  uploadForm.id = "upload-form";
  const fileInput = doc.createElement("input");
  fileInput.type = "file";
  fileInput.id = "upload-input";
  fileInput.multiple = true;
  fileInput.accept = ".png,.json";
  const uploadBtn = doc.createElement("button");
  uploadBtn.type = "submit";
  uploadBtn.id = "upload-btn";
  uploadBtn.textContent = "upload scenes";
  uploadForm.append(field(doc, "scene files", fileInput), uploadBtn);
  uploadForm.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const files = fileInput.files;
    if (files && files.length) void app.uploadFiles(Array.from(files));
  });
  wrap.append(uploadForm);

  const actions = doc.createElement("p");
  const selectBtn = doc.createElement("button");
  selectBtn.id = "select-btn";
  selectBtn.textContent = "select next batch";
  selectBtn.disabled = info.pool.unlabeled === 0 || info.busy || app.mutationInFlight;
  selectBtn.addEventListener("click", () => void app.selectBatch());
  const trainBtn = doc.createElement("button");
  trainBtn.id = "train-btn";
  trainBtn.textContent = "train";
  trainBtn.disabled = info.pool.staged === 0 || info.busy || app.mutationInFlight;
  trainBtn.title =
    info.pool.staged === 0 ? "nothing staged — submit a labeled batch first" : "train on the staged batch";
  trainBtn.addEventListener("click", () => void app.trainNow());
  actions.append(selectBtn, doc.createTextNode(" "), trainBtn);
  wrap.append(actions);

  return wrap;
}

export function renderProjectScreen(app: App, doc: Document): HTMLElement {
  return app.info ? renderDashboard(app, doc) : renderSetupForms(app, doc);
}
