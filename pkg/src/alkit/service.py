"""HTTP+JSON API over annotation projects.

Thin FastAPI wiring around :mod:`alkit.project`; all errors use a
uniform ``{code, message}`` body with 400 (validation), 404 (unknown
id), and 409 (busy / stale batch) statuses.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response
from starlette.datastructures import UploadFile

from . import detector as det
from .project import Project, ProjectError, create_project, load_project


def create_app(root: Path, ui_dir: Path | None = None) -> FastAPI:
    """Service over a projects root directory (one subdirectory per project).

    When ``ui_dir`` points at a directory, it is served statically under
    ``/ui`` so the browser frontend shares the API's origin.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    app = FastAPI(title="alkit annotation service")
    if ui_dir is not None and Path(ui_dir).is_dir():
        from starlette.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")
    projects: dict[str, Project] = {}

    def get_project(project_id: str) -> Project:
        if project_id not in projects:
            for manifest in sorted(root.glob("*/manifest.json")):
                try:
                    project = load_project(manifest.parent)
                except ProjectError:
                    continue
                projects.setdefault(project.project_id, project)
            if project_id not in projects:
                raise ProjectError(404, "not_found", f"no project {project_id!r}")
        return projects[project_id]

    @app.exception_handler(ProjectError)
    async def project_error(_req: Request, exc: ProjectError) -> JSONResponse:
        return JSONResponse(status_code=exc.status, content={"code": exc.code, "message": exc.message})

    @app.post("/projects")
    async def post_projects(request: Request) -> JSONResponse:
        body = await request.json() if await request.body() else {}
        if not isinstance(body, dict):
            raise ProjectError(400, "bad_request", "body must be a JSON object")
        kwargs = {}
        if "class_names" in body:
            kwargs["class_names"] = [str(n) for n in body["class_names"]]
        for key, cast in (
            ("metric", str),
            ("image_size", int),
            ("lambda", float),
            ("update_iterations", int),
            ("batch_size", int),
        ):
            if key in body:
                kwargs["lam" if key == "lambda" else key] = cast(body[key])
        grid_fields = {}
        for key in ("s_h", "s_v", "boxes_per_cell", "context_margin", "confidence_threshold", "nms_iou"):
            if key in body:
                grid_fields[key] = body[key]
        if grid_fields or "class_names" in kwargs:
            n_classes = len(kwargs.get("class_names", [f"class_{i}" for i in range(5)]))
            try:
                kwargs["grid"] = det.GridConfig(num_classes=n_classes, **grid_fields)
            except (TypeError, ValueError) as exc:
                raise ProjectError(400, "bad_request", str(exc))
        try:
            project = create_project(root / _fresh_dir_name(root), **kwargs)
        except (TypeError, ValueError) as exc:
            raise ProjectError(400, "bad_request", str(exc))
        projects[project.project_id] = project
        return JSONResponse(status_code=201, content=project.info())

    @app.get("/projects/{project_id}")
    def get_project_info(project_id: str) -> dict:
        return get_project(project_id).info()

    @app.post("/projects/{project_id}/data")
    async def post_data(project_id: str, request: Request) -> dict:
        project = get_project(project_id)
        form = await request.form()
        files: list[tuple[str, bytes]] = []
        # multi_items, not values: repeated field names carry several files
        for _, value in form.multi_items():
            if isinstance(value, UploadFile):
                files.append((value.filename or "unnamed", await value.read()))
        if not files:
            raise ProjectError(400, "bad_request", "multipart upload with scene files required")
        return {"added": project.ingest(files)}

    @app.post("/projects/{project_id}/select")
    def post_select(project_id: str) -> dict:
        return get_project(project_id).propose_batch()

    @app.post("/projects/{project_id}/labels")
    async def post_labels(project_id: str, request: Request) -> dict:
        project = get_project(project_id)
        body = await request.json()
        if not isinstance(body, dict) or "batch_id" not in body:
            raise ProjectError(400, "bad_request", "body must carry batch_id, decisions, added_boxes")
        decisions = body.get("decisions", [])
        added = body.get("added_boxes", [])
        if not isinstance(decisions, list) or not isinstance(added, list):
            raise ProjectError(400, "bad_request", "decisions and added_boxes must be lists")
        return project.submit_labels(str(body["batch_id"]), decisions, added)

    @app.post("/projects/{project_id}/train")
    def post_train(project_id: str) -> dict:
        return get_project(project_id).train()

    @app.get("/projects/{project_id}/metrics")
    def get_metrics(project_id: str) -> dict:
        return get_project(project_id).metrics()

    @app.get("/projects/{project_id}/images/{image_id}")
    def get_image(project_id: str, image_id: str) -> Response:
        data = get_project(project_id).image_bytes(image_id)
        return Response(content=data, media_type="image/png")

    return app


def _fresh_dir_name(root: Path) -> str:
    n = sum(1 for _ in root.glob("p*"))
    while True:
        name = f"p{n:04d}"
        if not (root / name).exists():
            return name
        n += 1


def serve(project_dir: Path, port: int, host: str = "127.0.0.1") -> None:
    """Run the service; ``project_dir`` may be a single project directory
    (its parent becomes the root) or a root holding several."""
    import uvicorn

    project_dir = Path(project_dir)
    root = project_dir.parent if (project_dir / "manifest.json").exists() else project_dir
    # a checked-out frontend next to src/ is hosted at /ui when present
    frontend = Path(__file__).resolve().parents[2] / "frontend"
    ui_dir = frontend if (frontend / "index.html").exists() else None
    uvicorn.run(create_app(root, ui_dir=ui_dir), host=host, port=port)
