"""FastAPI application: REST wrappers over the core pipeline, the WebSocket
session endpoint, and static hosting for the browser UI."""

from __future__ import annotations

import asyncio
import json
from pathlib import Path

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.responses import HTMLResponse
from fastapi.staticfiles import StaticFiles

from .. import __version__
from .. import io as stent_io
from ..errors import StentKitError
from ..mesh import check_validity
from ..metrics import mis_radius_profile, summarize
from ..pipeline import RunSpec, run_deployment
from .models import (
    CheckRequest,
    CheckResponse,
    DeployRequest,
    DeployResponse,
    DiameterSummaryModel,
    HealthResponse,
    MetricsRequest,
    MetricsResponse,
    ProfileSampleModel,
)
from .session import Session

STATIC_DIR = Path(__file__).parent / "static"

_FALLBACK_PAGE = """<!doctype html>
<html><head><title>stentkit</title></head>
<body><h1>stentkit session service</h1>
<p>The browser UI bundle is not installed. The WebSocket session endpoint is
live at <code>/ws</code> and the REST API under <code>/api</code>.</p>
</body></html>
"""


def create_app(export_dir: str = ".") -> FastAPI:
    app = FastAPI(title="stentkit", version=__version__)
    # one interactive session at a time; the engine mutates one mesh copy
    busy = {"active": False}

    @app.get("/api/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(version=__version__)

    @app.post("/api/check", response_model=CheckResponse)
    def check(req: CheckRequest) -> CheckResponse:
        try:
            report = check_validity(stent_io.load_mesh(req.mesh_path))
        except (StentKitError, OSError) as e:
            raise HTTPException(status_code=400, detail=str(e)) from None
        return CheckResponse(
            is_watertight=report.is_watertight,
            boundary_edge_count=report.boundary_edge_count,
            non_manifold_edge_count=report.non_manifold_edge_count,
            self_intersecting_face_pairs=list(report.self_intersecting_face_pairs),
        )

    @app.post("/api/deploy", response_model=DeployResponse)
    def deploy_endpoint(req: DeployRequest) -> DeployResponse:
        try:
            mesh = stent_io.load_mesh(req.mesh_path)
            tree = stent_io.load_centerline(req.centerline_path)
            spec = RunSpec(
                start=(req.start_path, req.start_arc), end=(req.end_path, req.end_arc),
                diameter=req.diameter, nominal_length=req.nominal_length,
                foreshortening=req.foreshortening, k=req.k, d_infl=req.d_infl,
                dr=req.dr, d_con=req.d_con, r_init=req.r_init,
                capsule_length=req.capsule_length,
            )
            result = run_deployment(mesh, tree, spec)
            stent_io.save_mesh(req.out_path, result.mesh)
        except (StentKitError, ValueError, OSError) as e:
            raise HTTPException(status_code=400, detail=str(e)) from None
        s = result.stented_summary
        vr = result.report.validity
        return DeployResponse(
            steps=len(result.report.steps),
            moved_vertex_count=result.report.moved_vertex_count,
            wall_time_ms=result.report.wall_time_ms,
            is_watertight=vr.is_watertight,
            self_intersections=len(vr.self_intersecting_face_pairs),
            stented_summary=DiameterSummaryModel(
                minimum=s.minimum, maximum=s.maximum, mean=s.mean, sd=s.sd,
                sample_count=s.sample_count,
            ),
            out_path=req.out_path,
        )

    @app.post("/api/metrics", response_model=MetricsResponse)
    def metrics_endpoint(req: MetricsRequest) -> MetricsResponse:
        try:
            mesh = stent_io.load_mesh(req.mesh_path)
            tree = stent_io.load_centerline(req.centerline_path)
            pid = req.path_id if req.path_id is not None else tree.root_ids()[0]
            profile = mis_radius_profile(mesh, tree.path(pid).points, spacing=req.spacing)
            summary = summarize(profile)
        except (StentKitError, ValueError, OSError) as e:
            raise HTTPException(status_code=400, detail=str(e)) from None
        return MetricsResponse(
            profile=[ProfileSampleModel(
                arc_length=s.arc_length, mis_radius=s.mis_radius,
                equivalent_radius=s.equivalent_radius,
                cross_section_area=s.cross_section_area, note=s.note,
            ) for s in profile],
            summary=DiameterSummaryModel(
                minimum=summary.minimum, maximum=summary.maximum, mean=summary.mean,
                sd=summary.sd, sample_count=summary.sample_count,
            ),
        )

    @app.websocket("/ws")
    async def session_socket(ws: WebSocket):
        await ws.accept()
        if busy["active"]:
            await ws.send_text(json.dumps(
                {"kind": "error", "seq": 0, "body": {"message": "session busy"}}))
            await ws.close()
            return
        busy["active"] = True
        session = Session(export_dir=export_dir)
        seq = 0
        loop = asyncio.get_running_loop()
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    seq += 1
                    await ws.send_text(json.dumps({
                        "kind": "error", "seq": seq,
                        "body": {"message": "malformed frame: not valid JSON"},
                    }))
                    continue
                gen = session.handle(msg)
                while True:
                    # run the (possibly long) step work off the event loop
                    out = await loop.run_in_executor(None, _next_or_none, gen)
                    if out is None:
                        break
                    seq += 1
                    await ws.send_text(json.dumps(out.envelope(seq)))
                    for blob in out.binary:
                        await ws.send_bytes(blob)
        except WebSocketDisconnect:
            pass
        finally:
            busy["active"] = False

    if (STATIC_DIR / "index.html").exists():
        app.mount("/", StaticFiles(directory=STATIC_DIR, html=True), name="ui")
    else:
        @app.get("/", response_class=HTMLResponse)
        def index() -> str:
            return _FALLBACK_PAGE

    return app


def _next_or_none(gen):
    try:
        return next(gen)
    except StopIteration:
        return None
