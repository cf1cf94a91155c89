"""HTTP facade over the coordinator: frames in, track updates out.

Each camera keeps only its latest frame; a frame that arrives before the
buffered one was consumed replaces it and the older one is counted as
dropped. A track advances in lockstep: one tick fires as soon as every
camera its current phase needs holds a frame at least as new as the
track's clock, so a scripted client pushing frames in order reproduces
the offline run byte for byte.

All mutation happens under one process-wide lock; handlers are plain
sync functions so the framework serializes them through its threadpool
and the lock is uncontended in normal use.
"""
from __future__ import annotations

import base64
import binascii
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from starlette.exceptions import HTTPException as StarletteHTTPException

from .boxes import BBox
from .coordinator import (Track, load_scenario_bundle, process_tick, required_cameras,
                          scenario_graph, scenario_layout, select_target,
                          serialize_results, render_trajectory_map)
from .inter import CameraGraph
from .intra import IntraConfig
from .imaging import png_encode, ppm_decode
from .perception import FrameView, OracleDetector, OracleEmbedder
from .schemas import (CameraInfo, CameraList, CameraStats, CreateTrackRequest,
                      CreateTrackResponse, FrameEnvelope, IngestResponse, StatsResponse,
                      TrackStatus, TrackUpdate, BoxModel)
from .simworld import Scenario

API_PREFIX = "/api/v1"

# intra result kind / search event -> (reported state, update carries the box)
STATE_MAP = {
    "tracking": ("tracking", True),
    "reacquired": ("acquiring", True),
    "acquiring_failed": ("acquiring", False),
    "low_confidence": ("low_confidence", True),
    "occlusion": ("occluded", False),
    "exited": ("searching", False),
    "search_miss": ("searching", False),
    "search_hit": ("acquiring", False),
    "done": ("done", False),
}


class ApiError(Exception):
    def __init__(self, status: int, code: str, detail: str):
        self.status = status
        self.code = code
        self.detail = detail
        super().__init__(detail)


@dataclass
class FrameCell:
    index: int
    frame: np.ndarray
    used: bool = False


@dataclass
class CameraState:
    cell: Optional[FrameCell] = None
    frames_received: int = 0
    dropped: int = 0


@dataclass
class TrackRuntime:
    track: Track
    clock: int  # next frame index this track needs


@dataclass
class ServiceState:
    scenario: Scenario
    graph: CameraGraph
    detector: object
    embedder: object
    intra_config: IntraConfig
    search_s_min: float
    cameras: dict[str, CameraState] = field(default_factory=dict)
    tracks: dict[str, TrackRuntime] = field(default_factory=dict)
    next_track: int = 1
    lock: threading.Lock = field(default_factory=threading.Lock)

    def __post_init__(self):
        for cam in self.scenario.cameras:
            self.cameras[cam.id] = CameraState()

    def allocate_track_id(self) -> str:
        track_id = f"t-{self.next_track:06d}"
        self.next_track += 1
        return track_id


def _decode_frame(frame_b64: str) -> np.ndarray:
    try:
        raw = base64.b64decode(frame_b64, validate=True)
        return ppm_decode(raw)
    except (binascii.Error, ValueError) as exc:
        raise ApiError(400, "bad_frame_encoding", f"frame payload is not base64 PPM: {exc}")


def _camera(state: ServiceState, camera_id: str) -> CameraState:
    cam = state.cameras.get(camera_id)
    if cam is None:
        raise ApiError(404, "unknown_camera", f"no camera {camera_id!r} in this deployment")
    return cam


def _buffer_frame(cam: CameraState, index: int, frame: np.ndarray, *,
                  used: bool = False) -> None:
    cam.frames_received += 1
    cell = cam.cell
    if cell is not None and index < cell.index:
        cam.dropped += 1  # stale arrival loses to the buffered frame
        return
    if cell is not None and not cell.used:
        cam.dropped += 1  # buffered frame superseded before any track saw it
    cam.cell = FrameCell(index, frame, used)


def _update_from_event(rt: TrackRuntime) -> Optional[TrackUpdate]:
    event = rt.track.last_event
    if event is None:
        return None
    kind, camera_id, box = event
    mapped = STATE_MAP.get(kind)
    if mapped is None:  # stalled ticks produce no client-visible update
        return None
    state_name, with_box = mapped
    bbox = BoxModel(x=box.x, y=box.y, w=box.w, h=box.h) if (with_box and box) else None
    return TrackUpdate(track_id=rt.track.id, state=state_name,
                       camera_id=camera_id, bbox=bbox)


def _advance(state: ServiceState, rt: TrackRuntime) -> list[TrackUpdate]:
    """Run every tick the buffered frames allow for one track."""
    updates = []
    while True:
        needed = required_cameras(rt.track, state.graph)
        if not needed:
            break
        cells = [state.cameras[c].cell for c in needed if c in state.cameras]
        if len(cells) != len(needed) or any(c is None or c.index < rt.clock for c in cells):
            break
        views = {}
        for cam_id in needed:
            cell = state.cameras[cam_id].cell
            cell.used = True
            views[cam_id] = FrameView(cam_id, cell.index, cell.frame)
        process_tick(rt.track, views, state.detector, state.embedder)
        rt.clock = max(v.frame_index for v in views.values()) + 1
        update = _update_from_event(rt)
        if update is not None:
            updates.append(update)
    return updates


def _track_runtime(state: ServiceState, track_id: str) -> TrackRuntime:
    rt = state.tracks.get(track_id)
    if rt is None:
        raise ApiError(404, "unknown_track", f"no track {track_id!r}")
    return rt


def create_app(scenario: Union[Scenario, str, Path],
               graph: Optional[CameraGraph] = None, *,
               detector=None, embedder=None,
               intra_config: Optional[IntraConfig] = None,
               search_s_min: float = 0.6) -> FastAPI:
    """Service wired to one scenario's camera set and perception backends."""
    if isinstance(scenario, (str, Path)):
        scenario, loaded_graph = load_scenario_bundle(scenario)
        graph = loaded_graph if graph is None else graph
    if graph is None:
        graph = scenario_graph(scenario)
    state = ServiceState(
        scenario=scenario, graph=graph,
        detector=detector if detector is not None else OracleDetector(scenario),
        embedder=embedder if embedder is not None else OracleEmbedder(scenario),
        intra_config=intra_config if intra_config is not None else IntraConfig(reid_s_min=0.6),
        search_s_min=search_s_min)

    app = FastAPI(title="handoff", docs_url=None, redoc_url=None, openapi_url=None)
    # the console is typically served from a different origin than the API
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    app.state.service = state

    @app.exception_handler(ApiError)
    async def on_api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"error": exc.code, "detail": exc.detail})

    @app.exception_handler(StarletteHTTPException)
    async def on_http_error(request: Request, exc: StarletteHTTPException):
        code = {404: "not_found", 405: "method_not_allowed"}.get(exc.status_code, "http_error")
        return JSONResponse(status_code=exc.status_code,
                            content={"error": code, "detail": str(exc.detail)})

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422,
                            content={"error": "invalid_request", "detail": str(exc.errors())})

    @app.post(API_PREFIX + "/tracks", status_code=201, response_model=CreateTrackResponse)
    def create_track(req: CreateTrackRequest):
        with state.lock:
            cam = _camera(state, req.camera_id)
            frame = _decode_frame(req.frame_b64)
            box = BBox(req.bbox.x, req.bbox.y, req.bbox.w, req.bbox.h)
            h, w = frame.shape[:2]
            if box.w <= 0 or box.h <= 0 or box.clipped(w, h).area <= 0:
                raise ApiError(422, "degenerate_bbox",
                               "selection box has no area inside the frame")
            track_id = state.allocate_track_id()
            track = select_target(req.camera_id, frame, box, state.embedder,
                                  track_id=track_id, intra_config=state.intra_config,
                                  search_s_min=state.search_s_min)
            _buffer_frame(cam, req.frame_index, frame, used=True)
            rt = TrackRuntime(track=track, clock=req.frame_index)
            state.tracks[track_id] = rt
            # the selection frame is also the first tick, as in the offline run
            _advance(state, rt)
            return CreateTrackResponse(track_id=track_id)

    @app.post(API_PREFIX + "/cameras/{camera_id}/frames", response_model=IngestResponse)
    def ingest_frame(camera_id: str, env: FrameEnvelope):
        if env.camera_id != camera_id:
            raise ApiError(422, "camera_mismatch",
                           f"envelope says {env.camera_id!r}, path says {camera_id!r}")
        with state.lock:
            cam = _camera(state, camera_id)
            frame = _decode_frame(env.frame_b64)
            _buffer_frame(cam, env.frame_index, frame)
            updates = []
            for rt in state.tracks.values():
                updates.extend(_advance(state, rt))
            return IngestResponse(updates=updates)

    @app.get(API_PREFIX + "/tracks/{track_id}", response_model=TrackStatus)
    def get_track(track_id: str):
        with state.lock:
            rt = _track_runtime(state, track_id)
            update = _update_from_event(rt)
            return TrackStatus(
                track_id=track_id, phase=rt.track.phase_name(),
                camera=rt.track.current_camera(), ticks=rt.track.ticks,
                entries=len(rt.track.trajectory.entries),
                last_state=update.state if update else None,
                last_bbox=update.bbox if update else None)

    @app.get(API_PREFIX + "/tracks/{track_id}/trajectory")
    def get_trajectory(track_id: str):
        with state.lock:
            rt = _track_runtime(state, track_id)
            return Response(content=serialize_results(rt.track),
                            media_type="application/json")

    @app.get(API_PREFIX + "/tracks/{track_id}/map")
    def get_map(track_id: str):
        with state.lock:
            rt = _track_runtime(state, track_id)
            svg = render_trajectory_map(rt.track, scenario_layout(state.scenario))
            return Response(content=svg, media_type="image/svg+xml")

    @app.get(API_PREFIX + "/cameras", response_model=CameraList)
    def list_cameras():
        with state.lock:
            infos = []
            for spec in state.scenario.cameras:
                cam = state.cameras[spec.id]
                infos.append(CameraInfo(
                    id=spec.id,
                    fov=[spec.fov.x, spec.fov.y, spec.fov.w, spec.fov.h],
                    resolution=list(spec.resolution),
                    frames_received=cam.frames_received, dropped=cam.dropped,
                    last_frame_index=cam.cell.index if cam.cell else None))
            return CameraList(cameras=infos)

    @app.get(API_PREFIX + "/cameras/{camera_id}/preview")
    def camera_preview(camera_id: str):
        with state.lock:
            cam = _camera(state, camera_id)
            if cam.cell is None:
                raise ApiError(404, "no_frames_received",
                               f"camera {camera_id!r} has not sent any frame yet")
            return Response(content=png_encode(cam.cell.frame), media_type="image/png")

    @app.get(API_PREFIX + "/stats", response_model=StatsResponse)
    def stats():
        with state.lock:
            return StatsResponse(
                tracks=len(state.tracks),
                cameras={cam_id: CameraStats(frames_received=c.frames_received,
                                             dropped=c.dropped)
                         for cam_id, c in state.cameras.items()})

    return app
