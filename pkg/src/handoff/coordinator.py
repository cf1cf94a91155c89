"""Track lifecycle across the camera network.

A track starts from a user selection, runs the per-camera state machine
while the target stays in view, switches to graph-guided cross-camera
search when the target exits, and records every confirmed box into a
trajectory that can be serialized to JSON or drawn as a camera map.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Union

import numpy as np

from .boxes import BBox
from .imaging import crop as crop_image
from .intra import (ACQUIRING_FAILED, EXITED, LOW_CONFIDENCE, OCCLUSION, REACQUIRED,
                    TRACKING_OK, IntraConfig, IntraState, intra_step)
from .inter import CameraGraph, SearchState, recommend_cameras, search_step
from .perception import AppearanceVector, FrameView, embed
from .simworld import Scenario, render, scenario_from_dict

PHASE_INTRA = "intra"
PHASE_SEARCHING = "searching"
PHASE_DONE = "done"

# tick event kinds beyond the intra result kinds
SEARCH_MISS = "search_miss"
SEARCH_HIT = "search_hit"
STALLED = "stalled"
DONE = "done"

DEFAULT_TRACK_ID = "t-000001"
SEARCH_S_MIN = 0.6


@dataclass
class IntraPhase:
    camera_id: str
    state: IntraState


@dataclass
class SearchingPhase:
    state: SearchState


@dataclass(frozen=True)
class DonePhase:
    last_camera: Optional[str] = None


Phase = Union[IntraPhase, SearchingPhase, DonePhase]


@dataclass(frozen=True)
class TrajectoryEntry:
    camera_id: str
    frame_index: int
    bbox: BBox
    status: str


@dataclass
class TrajectoryRecord:
    entries: list[TrajectoryEntry] = field(default_factory=list)

    def append(self, entry: TrajectoryEntry) -> None:
        if self.entries:
            last = self.entries[-1]
            if last.camera_id == entry.camera_id and entry.frame_index <= last.frame_index:
                raise ValueError(
                    f"frame {entry.frame_index} does not advance within the "
                    f"{entry.camera_id} run (last was {last.frame_index})")
        self.entries.append(entry)

    def camera_runs(self) -> list[tuple[str, int, int]]:
        """Contiguous same-camera stretches as (camera, first frame, last frame)."""
        runs: list[tuple[str, int, int]] = []
        for e in self.entries:
            if runs and runs[-1][0] == e.camera_id:
                cam, first, _ = runs[-1]
                runs[-1] = (cam, first, e.frame_index)
            else:
                runs.append((e.camera_id, e.frame_index, e.frame_index))
        return runs

    def first_visit_order(self) -> list[str]:
        order: list[str] = []
        for cam, _, _ in self.camera_runs():
            if cam not in order:
                order.append(cam)
        return order


@dataclass
class Track:
    id: str
    target_crop: np.ndarray
    target_features: AppearanceVector
    phase: Phase
    trajectory: TrajectoryRecord = field(default_factory=TrajectoryRecord)
    intra_config: IntraConfig = field(default_factory=IntraConfig)
    search_s_min: float = SEARCH_S_MIN
    ticks: int = 0
    stalls: list[int] = field(default_factory=list)
    phase_log: list[dict] = field(default_factory=list)
    # (kind, camera id, box or None) for the most recent tick
    last_event: Optional[tuple[str, str, Optional[BBox]]] = None

    def current_camera(self) -> Optional[str]:
        if isinstance(self.phase, IntraPhase):
            return self.phase.camera_id
        if isinstance(self.phase, SearchingPhase):
            return self.phase.state.origin
        return self.phase.last_camera

    def phase_name(self) -> str:
        if isinstance(self.phase, IntraPhase):
            return PHASE_INTRA
        if isinstance(self.phase, SearchingPhase):
            return PHASE_SEARCHING
        return PHASE_DONE


def select_target(camera_id: str, frame: np.ndarray, user_box: BBox, embedder, *,
                  track_id: str = DEFAULT_TRACK_ID,
                  intra_config: Optional[IntraConfig] = None,
                  search_s_min: float = SEARCH_S_MIN) -> Track:
    """Start a track from an operator-drawn box on one camera's frame.

    The crop and its embedding are captured once and never updated; every
    later match, in this camera or another, compares against them. The
    track starts in the acquiring phase so the first tick re-locates the
    target instead of trusting a possibly stale selection.
    """
    h, w = frame.shape[:2]
    if user_box.clipped(w, h).area <= 0:
        raise ValueError("selection box has no area inside the frame")
    config = intra_config if intra_config is not None else IntraConfig()
    track = Track(id=track_id,
                  target_crop=crop_image(frame, user_box).copy(),
                  target_features=embed(frame, user_box, embedder),
                  phase=IntraPhase(camera_id, IntraState(config=config)),
                  intra_config=config,
                  search_s_min=search_s_min)
    track.phase_log.append({"phase": PHASE_INTRA, "camera": camera_id, "tick": 0})
    return track


def required_cameras(track: Track, graph: CameraGraph) -> list[str]:
    """Cameras whose frames the next tick needs."""
    if isinstance(track.phase, IntraPhase):
        return [track.phase.camera_id]
    if isinstance(track.phase, SearchingPhase):
        return recommend_cameras(graph, track.phase.state)
    return []


def process_tick(track: Track, frames: Mapping[str, FrameView], detector,
                 embedder) -> Track:
    """Advance the track by one tick over the supplied frames.

    Intra phase consumes the current camera's frame (missing frame: the
    tick is a recorded stall and a no-op). Searching consumes whatever
    recommended-camera frames are present. Confirmed boxes (tracking or
    reacquired) are appended to the trajectory; search ticks never touch
    it.
    """
    if isinstance(track.phase, DonePhase):
        return track

    if isinstance(track.phase, IntraPhase):
        phase = track.phase
        view = frames.get(phase.camera_id)
        if view is None:
            track.stalls.append(track.ticks)
            track.last_event = (STALLED, phase.camera_id, None)
            return track
        track.ticks += 1
        new_state, result = intra_step(phase.state, view, detector, embedder,
                                       track.target_features)
        phase.state = new_state
        track.last_event = (result.kind, phase.camera_id, result.box)
        if result.kind in (TRACKING_OK, REACQUIRED):
            track.trajectory.append(TrajectoryEntry(phase.camera_id, view.frame_index,
                                                    result.box, result.kind))
        elif result.kind == EXITED:
            origin = phase.camera_id
            track.phase = SearchingPhase(SearchState(origin=origin))
            track.phase_log.append({"phase": PHASE_SEARCHING, "camera": origin,
                                    "tick": track.ticks})
        return track

    phase = track.phase
    track.ticks += 1
    new_state, found = search_step(phase.state, frames, detector, embedder,
                                   track.target_features, track.search_s_min)
    phase.state = new_state
    if found is None:
        track.last_event = (SEARCH_MISS, phase.state.origin, None)
        return track
    camera_id, _ = found
    track.phase = IntraPhase(camera_id, IntraState(config=track.intra_config))
    track.phase_log.append({"phase": PHASE_INTRA, "camera": camera_id,
                            "tick": track.ticks})
    # the box is confirmed by the next tick's reacquisition, not recorded here
    track.last_event = (SEARCH_HIT, camera_id, None)
    return track


def finalize_track(track: Track) -> Track:
    """End-of-input: a still-searching track is closed out as done."""
    if isinstance(track.phase, SearchingPhase):
        last = track.phase.state.origin
        track.phase = DonePhase(last_camera=last)
        track.phase_log.append({"phase": PHASE_DONE, "camera": last, "tick": track.ticks})
        track.last_event = (DONE, last, None)
    return track


def serialize_results(track: Track) -> str:
    """Canonical results JSON; byte-identical for identical track states."""
    data = {
        "track_id": track.id,
        "entries": [{"camera": e.camera_id, "frame": e.frame_index,
                     "x": e.bbox.x, "y": e.bbox.y, "w": e.bbox.w, "h": e.bbox.h,
                     "status": e.status} for e in track.trajectory.entries],
        "phases": track.phase_log,
    }
    return json.dumps(data, indent=2) + "\n"


def render_trajectory_map(track: Track, layout: Mapping[str, tuple[float, float]],
                          map_size: tuple[int, int] = (800, 500)) -> str:
    """SVG camera map: labeled nodes, visited highlights, visit polyline.

    Nodes come from the layout in its iteration order; the polyline passes
    through the camera-run sequence (a revisited camera appears once as a
    node but multiple times on the path, with one frame-range label per
    visit). Output is a pure function of the inputs.
    """
    runs = track.trajectory.camera_runs()
    visited = {cam for cam, _, _ in runs}
    missing = sorted(visited - set(layout))
    if missing:
        raise ValueError(f"no layout position for visited cameras: {', '.join(missing)}")
    width, height = map_size
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="#10141a"/>',
    ]
    if len(runs) >= 2:
        points = " ".join(f"{layout[cam][0]:.1f},{layout[cam][1]:.1f}" for cam, _, _ in runs)
        parts.append(f'<polyline points="{points}" fill="none" stroke="#e0a030" '
                     f'stroke-width="2.5"/>')
    for cam in layout:
        x, y = layout[cam]
        fill = "#e0a030" if cam in visited else "#3a4656"
        parts.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="14" fill="{fill}"/>')
        parts.append(f'<text x="{x:.1f}" y="{y - 22:.1f}" text-anchor="middle" '
                     f'font-family="monospace" font-size="13" fill="#c8d2dc">{cam}</text>')
        ranges = [f"f{first}-f{last}" for c, first, last in runs if c == cam]
        if ranges:
            parts.append(f'<text x="{x:.1f}" y="{y + 32:.1f}" text-anchor="middle" '
                         f'font-family="monospace" font-size="11" fill="#8899aa">'
                         f'{" | ".join(ranges)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def scenario_layout(scenario: Scenario,
                    map_size: tuple[int, int] = (800, 500),
                    margin: float = 60.0) -> dict[str, tuple[float, float]]:
    """Map positions for every camera: FOV centers scaled into the canvas."""
    width, height = map_size
    world_w, world_h = scenario.world_size
    layout = {}
    for cam in scenario.cameras:
        cx, cy = cam.fov.center
        layout[cam.id] = (margin + (cx / world_w) * (width - 2 * margin),
                          margin + (cy / world_h) * (height - 2 * margin))
    return layout


def scenario_graph(scenario: Scenario, adjacency: Optional[Mapping] = None) -> CameraGraph:
    """Camera graph for a scenario; no adjacency means an edgeless network."""
    adj = {str(src): tuple(str(d) for d in dsts)
           for src, dsts in dict(adjacency or {}).items()}
    return CameraGraph(cameras=tuple(c.id for c in scenario.cameras), adjacency=adj)


def builtin_scenario_names() -> list[str]:
    here = Path(__file__).parent / "scenarios"
    return sorted(p.stem for p in here.glob("*.json"))


def resolve_scenario(ref: Union[str, Path]) -> Path:
    """Accept a scenario file path or the name of a packaged scenario."""
    path = Path(ref)
    if path.exists():
        return path
    builtin = Path(__file__).parent / "scenarios" / f"{ref}.json"
    if builtin.exists():
        return builtin
    known = ", ".join(builtin_scenario_names())
    raise FileNotFoundError(f"no scenario file {ref!r}; packaged scenarios: {known}")


def load_scenario_bundle(ref: Union[str, Path]) -> tuple[Scenario, CameraGraph]:
    """Scenario plus its camera graph from the optional top-level adjacency map."""
    path = resolve_scenario(ref)
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if not isinstance(doc, dict):
        raise ValueError(f"scenario file {path} must hold a JSON object")
    scenario = scenario_from_dict(doc, name=path.stem)
    return scenario, scenario_graph(scenario, doc.get("adjacency"))


def run_scenario(scenario: Scenario, graph: CameraGraph, detector, embedder, *,
                 camera_id: str, frame_index: int, box: BBox,
                 intra_config: Optional[IntraConfig] = None,
                 search_s_min: float = SEARCH_S_MIN,
                 track_id: str = DEFAULT_TRACK_ID) -> Track:
    """Offline driver: select on one frame, then tick through every frame.

    The selection frame itself is the first tick, so the acquiring step
    runs on the exact frame the operator saw.
    """
    total = scenario.total_frames
    if not 0 <= frame_index < total:
        raise ValueError(f"selection frame {frame_index} outside scenario range 0..{total - 1}")
    selection_frame = render(scenario, camera_id, frame_index)
    track = select_target(camera_id, selection_frame, box, embedder,
                          track_id=track_id, intra_config=intra_config,
                          search_s_min=search_s_min)
    for idx in range(frame_index, total):
        cams = required_cameras(track, graph)
        frames = {cam: FrameView(cam, idx, render(scenario, cam, idx)) for cam in cams}
        process_tick(track, frames, detector, embedder)
    return finalize_track(track)
