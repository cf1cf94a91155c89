"""Deterministic synthetic multi-camera world.

A scenario describes rectangular agents moving along piecewise-linear
waypoint paths through a flat world observed by non-overlapping cameras.
Rendering and ground truth are pure functions of (scenario, camera,
frame index), so any two runs over the same scenario agree byte for byte.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .boxes import BBox, intersection_area
from .imaging import write_ppm

BACKGROUND = (96, 96, 96)


@dataclass(frozen=True)
class Waypoint:
    t: float
    x: float
    y: float


@dataclass(frozen=True)
class AgentSpec:
    id: str
    color: tuple[int, int, int]
    size: tuple[float, float]
    waypoints: tuple[Waypoint, ...]


@dataclass(frozen=True)
class Occluder:
    rect: BBox
    color: tuple[int, int, int]


@dataclass(frozen=True)
class CameraSpec:
    id: str
    fov: BBox
    resolution: tuple[int, int]  # (W, H) pixels


@dataclass(frozen=True)
class GroundTruthEntry:
    agent_id: str
    bbox: BBox
    visible_fraction: float


@dataclass(frozen=True)
class Scenario:
    world_size: tuple[float, float]
    fps: float
    duration: float
    agents: tuple[AgentSpec, ...]
    occluders: tuple[Occluder, ...]
    cameras: tuple[CameraSpec, ...]
    name: str = "scenario"

    def __post_init__(self):
        if self.fps <= 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        if self.duration <= 0:
            raise ValueError(f"duration must be positive, got {self.duration}")
        seen = set()
        for agent in self.agents:
            if agent.id in seen:
                raise ValueError(f"duplicate agent id {agent.id!r}")
            seen.add(agent.id)
            times = [wp.t for wp in agent.waypoints]
            if len(times) < 1:
                raise ValueError(f"agent {agent.id!r} has no waypoints")
            if any(b <= a for a, b in zip(times, times[1:])):
                raise ValueError(f"agent {agent.id!r} waypoint times must be strictly increasing")
        cam_ids = set()
        for cam in self.cameras:
            if cam.id in cam_ids:
                raise ValueError(f"duplicate camera id {cam.id!r}")
            cam_ids.add(cam.id)
            if cam.resolution[0] <= 0 or cam.resolution[1] <= 0:
                raise ValueError(f"camera {cam.id!r} has non-positive resolution")
        for i, a in enumerate(self.cameras):
            for b in self.cameras[i + 1:]:
                if intersection_area(a.fov, b.fov) > 0:
                    raise ValueError(f"camera FOVs overlap: {a.id!r} and {b.id!r}")

    @property
    def total_frames(self) -> int:
        return int(round(self.fps * self.duration))

    def camera(self, camera_id: str) -> CameraSpec:
        for cam in self.cameras:
            if cam.id == camera_id:
                return cam
        raise KeyError(f"unknown camera {camera_id!r}")

    def agent(self, agent_id: str) -> AgentSpec:
        for agent in self.agents:
            if agent.id == agent_id:
                return agent
        raise KeyError(f"unknown agent {agent_id!r}")

    def agent_index(self, agent_id: str) -> int:
        for i, agent in enumerate(self.agents):
            if agent.id == agent_id:
                return i
        raise KeyError(f"unknown agent {agent_id!r}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "world_size": list(self.world_size),
            "fps": self.fps,
            "duration": self.duration,
            "agents": [
                {
                    "id": a.id,
                    "color": list(a.color),
                    "size": list(a.size),
                    "waypoints": [[wp.t, wp.x, wp.y] for wp in a.waypoints],
                }
                for a in self.agents
            ],
            "occluders": [
                {"rect": [o.rect.x, o.rect.y, o.rect.w, o.rect.h], "color": list(o.color)}
                for o in self.occluders
            ],
            "cameras": [
                {
                    "id": c.id,
                    "fov": [c.fov.x, c.fov.y, c.fov.w, c.fov.h],
                    "resolution": list(c.resolution),
                }
                for c in self.cameras
            ],
        }


def _color(raw) -> tuple[int, int, int]:
    r, g, b = (int(v) for v in raw)
    for v in (r, g, b):
        if not 0 <= v <= 255:
            raise ValueError(f"color channel out of range: {raw}")
    return (r, g, b)


def scenario_from_dict(doc: dict, name: str = "scenario") -> Scenario:
    try:
        agents = tuple(
            AgentSpec(
                id=str(a["id"]),
                color=_color(a["color"]),
                size=(float(a["size"][0]), float(a["size"][1])),
                waypoints=tuple(Waypoint(float(t), float(x), float(y)) for t, x, y in a["waypoints"]),
            )
            for a in doc.get("agents", [])
        )
        occluders = tuple(
            Occluder(rect=BBox(*map(float, o["rect"])), color=_color(o["color"]))
            for o in doc.get("occluders", [])
        )
        cameras = tuple(
            CameraSpec(
                id=str(c["id"]),
                fov=BBox(*map(float, c["fov"])),
                resolution=(int(c["resolution"][0]), int(c["resolution"][1])),
            )
            for c in doc.get("cameras", [])
        )
        return Scenario(
            world_size=(float(doc["world_size"][0]), float(doc["world_size"][1])),
            fps=float(doc.get("fps", 30)),
            duration=float(doc["duration"]),
            agents=agents,
            occluders=occluders,
            cameras=cameras,
            name=str(doc.get("name", name)),
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise ValueError(f"malformed scenario: {exc!r}") from exc


def load_scenario(path) -> Scenario:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    return scenario_from_dict(doc, name=path.stem)


def agent_pose(scenario: Scenario, agent_id: str, t: float) -> Optional[tuple[float, float]]:
    """Piecewise-linear position at time t, or None outside the waypoint span."""
    wps = scenario.agent(agent_id).waypoints
    if t < wps[0].t or t > wps[-1].t:
        return None
    for a, b in zip(wps, wps[1:]):
        if t <= b.t:
            if b.t == a.t:
                return (b.x, b.y)
            f = (t - a.t) / (b.t - a.t)
            return (a.x + f * (b.x - a.x), a.y + f * (b.y - a.y))
    return (wps[-1].x, wps[-1].y)


def world_rect_of_agent(scenario: Scenario, agent_id: str, t: float) -> Optional[BBox]:
    pose = agent_pose(scenario, agent_id, t)
    if pose is None:
        return None
    w, h = scenario.agent(agent_id).size
    return BBox(pose[0] - w / 2, pose[1] - h / 2, w, h)


def project(cam: CameraSpec, rect: BBox) -> BBox:
    """World rect -> continuous pixel rect under the camera's FOV scaling."""
    sx = cam.resolution[0] / cam.fov.w
    sy = cam.resolution[1] / cam.fov.h
    return BBox((rect.x - cam.fov.x) * sx, (rect.y - cam.fov.y) * sy, rect.w * sx, rect.h * sy)


def _px(v: float) -> int:
    return int(math.floor(v + 0.5))


def _paint(frame: np.ndarray, rect: BBox, color: tuple[int, int, int]) -> None:
    h, w = frame.shape[:2]
    x0 = max(0, _px(rect.x))
    y0 = max(0, _px(rect.y))
    x1 = min(w, _px(rect.x2))
    y1 = min(h, _px(rect.y2))
    if x1 > x0 and y1 > y0:
        frame[y0:y1, x0:x1] = color


def frame_time(scenario: Scenario, frame_index: int) -> float:
    return frame_index / scenario.fps


def render(scenario: Scenario, camera_id: str, frame_index: int) -> np.ndarray:
    """RGB8 raster: background, agents in declaration order, occluders on top."""
    cam = scenario.camera(camera_id)
    w, h = cam.resolution
    frame = np.empty((h, w, 3), dtype=np.uint8)
    frame[:] = BACKGROUND
    t = frame_time(scenario, frame_index)
    for agent in scenario.agents:
        rect = world_rect_of_agent(scenario, agent.id, t)
        if rect is not None:
            _paint(frame, project(cam, rect), agent.color)
    for occ in scenario.occluders:
        _paint(frame, project(cam, occ.rect), occ.color)
    return frame


def _covered_area(base: BBox, rects: Sequence[BBox]) -> float:
    """Area of base covered by the union of rects (coordinate compression)."""
    clipped = []
    for r in rects:
        x0, y0 = max(r.x, base.x), max(r.y, base.y)
        x1, y1 = min(r.x2, base.x2), min(r.y2, base.y2)
        if x1 > x0 and y1 > y0:
            clipped.append((x0, y0, x1, y1))
    if not clipped:
        return 0.0
    xs = sorted({base.x, base.x2, *(c[0] for c in clipped), *(c[2] for c in clipped)})
    ys = sorted({base.y, base.y2, *(c[1] for c in clipped), *(c[3] for c in clipped)})
    area = 0.0
    for x0, x1 in zip(xs, xs[1:]):
        cx = (x0 + x1) / 2
        for y0, y1 in zip(ys, ys[1:]):
            cy = (y0 + y1) / 2
            if any(c[0] <= cx <= c[2] and c[1] <= cy <= c[3] for c in clipped):
                area += (x1 - x0) * (y1 - y0)
    return area


def ground_truth(scenario: Scenario, camera_id: str, frame_index: int) -> list[GroundTruthEntry]:
    """Entries for agents whose projection intersects the frame.

    visible_fraction measures what remains after occluders and FOV clipping,
    relative to the full (unclipped) agent rectangle.
    """
    cam = scenario.camera(camera_id)
    w, h = cam.resolution
    t = frame_time(scenario, frame_index)
    out = []
    for agent in scenario.agents:
        rect = world_rect_of_agent(scenario, agent.id, t)
        if rect is None or rect.area <= 0:
            continue
        in_fov = BBox(
            max(rect.x, cam.fov.x),
            max(rect.y, cam.fov.y),
            max(0.0, min(rect.x2, cam.fov.x2) - max(rect.x, cam.fov.x)),
            max(0.0, min(rect.y2, cam.fov.y2) - max(rect.y, cam.fov.y)),
        )
        if in_fov.area <= 0:
            continue
        occluded = _covered_area(in_fov, [o.rect for o in scenario.occluders])
        visible = (in_fov.area - occluded) / rect.area
        pixel_box = project(cam, rect).clipped(w, h)
        out.append(GroundTruthEntry(agent.id, pixel_box, max(0.0, min(1.0, visible))))
    return out


def export_frames(scenario: Scenario, out_dir, camera_ids: Optional[Sequence[str]] = None,
                  frames: Optional[range] = None) -> int:
    out_dir = Path(out_dir)
    cams = camera_ids if camera_ids is not None else [c.id for c in scenario.cameras]
    span = frames if frames is not None else range(scenario.total_frames)
    count = 0
    for cam_id in cams:
        sub = out_dir / camera_dirname(cam_id)
        sub.mkdir(parents=True, exist_ok=True)
        for idx in span:
            write_ppm(sub / f"{idx:06d}.ppm", render(scenario, cam_id, idx))
            count += 1
    return count


def camera_dirname(camera_id: str) -> str:
    return camera_id if camera_id.startswith("cam") else f"cam{camera_id}"


GT_CSV_HEADER = ["frame_index", "agent_id", "x", "y", "w", "h", "visible_fraction"]


def export_ground_truth(scenario: Scenario, out_dir,
                        camera_ids: Optional[Sequence[str]] = None) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cams = camera_ids if camera_ids is not None else [c.id for c in scenario.cameras]
    paths = []
    for cam_id in cams:
        path = out_dir / f"{camera_dirname(cam_id)}_gt.csv"
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(GT_CSV_HEADER)
            for idx in range(scenario.total_frames):
                for e in ground_truth(scenario, cam_id, idx):
                    writer.writerow([idx, e.agent_id, repr(e.bbox.x), repr(e.bbox.y),
                                     repr(e.bbox.w), repr(e.bbox.h), repr(e.visible_fraction)])
        paths.append(path)
    return paths


def read_ground_truth_csv(path) -> dict[int, list[GroundTruthEntry]]:
    out: dict[int, list[GroundTruthEntry]] = {}
    with open(path, "r", newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != GT_CSV_HEADER:
            raise ValueError(f"unexpected ground-truth header: {header}")
        for row in reader:
            idx = int(row[0])
            entry = GroundTruthEntry(
                row[1],
                BBox(float(row[2]), float(row[3]), float(row[4]), float(row[5])),
                float(row[6]),
            )
            out.setdefault(idx, []).append(entry)
    return out


def write_otb_ground_truth(path, boxes: Sequence[Optional[BBox]]) -> None:
    """One `x,y,w,h` line per frame; absent frames written as a zero box."""
    with open(path, "w", encoding="utf-8") as f:
        for box in boxes:
            if box is None or box.area <= 0:
                f.write("0,0,0,0\n")
            else:
                f.write(f"{box.x:.2f},{box.y:.2f},{box.w:.2f},{box.h:.2f}\n")


def read_otb_ground_truth(path) -> list[Optional[BBox]]:
    """Accepts comma-, tab-, or space-separated lines; zero boxes read as absent."""
    out: list[Optional[BBox]] = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            parts = line.replace(",", " ").replace("\t", " ").split()
            if len(parts) != 4:
                raise ValueError(f"bad ground-truth line: {line!r}")
            x, y, w, h = (float(p) for p in parts)
            out.append(None if w <= 0 or h <= 0 else BBox(x, y, w, h))
    return out
