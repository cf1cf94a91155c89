"""Cross-camera search for a target that left its last known view.

The camera network is a directed adjacency graph. Each search iteration
widens a hop-limited ring around the camera where the target was lost,
pools person detections from every candidate view, and matches them
against the target's appearance features captured at selection time.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

from .boxes import BBox
from .perception import (AppearanceVector, DetectorUnavailableError, FrameView,
                         detect_persons, embed, perform_reid)

SEARCH_S_MIN = 0.6


@dataclass(frozen=True)
class CameraGraph:
    cameras: tuple[str, ...]
    adjacency: Mapping[str, tuple[str, ...]]

    def __post_init__(self):
        declared = set(self.cameras)
        if len(declared) != len(self.cameras):
            raise ValueError("duplicate camera ids in graph")
        for src, dsts in self.adjacency.items():
            if src not in declared:
                raise ValueError(f"adjacency source {src!r} is not a declared camera")
            for dst in dsts:
                if dst not in declared:
                    raise ValueError(f"adjacency target {dst!r} is not a declared camera")
                if dst == src:
                    raise ValueError(f"self-loop on camera {src!r}")

    def neighbors(self, camera_id: str) -> tuple[str, ...]:
        return tuple(self.adjacency.get(camera_id, ()))

    def to_dict(self) -> dict:
        return {"cameras": list(self.cameras),
                "adjacency": {src: list(dsts) for src, dsts in self.adjacency.items()}}


def camera_graph_from_dict(data: dict) -> CameraGraph:
    cameras = tuple(str(c) for c in data.get("cameras", []))
    adjacency = {str(src): tuple(str(d) for d in dsts)
                 for src, dsts in dict(data.get("adjacency", {})).items()}
    return CameraGraph(cameras=cameras, adjacency=adjacency)


def load_camera_graph(path) -> CameraGraph:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("camera graph file must hold a JSON object")
    return camera_graph_from_dict(data)


def hop_distances(graph: CameraGraph, origin: str) -> dict[str, int]:
    """Directed BFS hop counts from origin; unreachable cameras are absent."""
    if origin not in graph.cameras:
        raise ValueError(f"unknown origin camera: {origin!r}")
    dist = {origin: 0}
    frontier = [origin]
    while frontier:
        nxt = []
        for cam in frontier:
            for other in graph.neighbors(cam):
                if other not in dist:
                    dist[other] = dist[cam] + 1
                    nxt.append(other)
        frontier = nxt
    return dist


def graph_diameter(graph: CameraGraph) -> int:
    """Largest finite hop distance between any ordered camera pair."""
    best = 0
    for cam in graph.cameras:
        dist = hop_distances(graph, cam)
        for other, d in dist.items():
            if other != cam and d > best:
                best = d
    return best


@dataclass(frozen=True)
class SearchState:
    origin: str
    iteration: int = 1
    visited: frozenset = frozenset()
    # (iteration, camera id) pairs for candidate views whose detector failed
    detector_failures: tuple = ()

    def __post_init__(self):
        if self.iteration < 1:
            raise ValueError(f"iteration must be at least 1, got {self.iteration}")


def recommend_cameras(graph: CameraGraph, state: SearchState) -> list[str]:
    """Candidate cameras for this iteration, nearest rings first.

    Cameras within hop distance <= iteration of the origin, origin
    excluded, ordered by (hop distance, declaration order). Falls back to
    every other camera once the ring is empty or the iteration has passed
    the graph diameter, so the search always ends up covering the network.
    """
    dist = hop_distances(graph, state.origin)
    ring = [cam for cam in graph.cameras
            if cam != state.origin and dist.get(cam, -1) >= 1
            and dist[cam] <= state.iteration]
    if not ring or state.iteration > graph_diameter(graph):
        return [cam for cam in graph.cameras if cam != state.origin]
    ring.sort(key=lambda cam: dist[cam])  # stable: declaration order within a ring
    return ring


def search_step(state: SearchState, frames: Mapping[str, FrameView], detector,
                embedder, target_features: AppearanceVector,
                s_min: float = SEARCH_S_MIN) -> tuple[SearchState, Optional[tuple[str, BBox]]]:
    """One search pass over the supplied candidate views.

    `frames` holds the recommended cameras for the current iteration, in
    candidate order (cameras without a frame this tick are simply absent).
    All person crops from all views form one pool; the pooled appearance
    argmax wins if it clears s_min. A detector failure skips that camera
    and is recorded on the state. On a miss the iteration advances.
    """
    pool: list[tuple[str, BBox]] = []
    vectors: list[AppearanceVector] = []
    searched = []
    failures = list(state.detector_failures)
    for cam_id, view in frames.items():
        try:
            dets = detect_persons(detector, cam_id, view.frame_index, view.pixels)
        except DetectorUnavailableError:
            failures.append((state.iteration, cam_id))
            continue
        searched.append(cam_id)
        h, w = view.pixels.shape[:2]
        for det in dets:
            if det.bbox.clipped(w, h).area <= 0:
                continue
            vectors.append(embed(view.pixels, det.bbox, embedder))
            pool.append((cam_id, det.bbox))
    next_state = replace(state, visited=state.visited | set(searched),
                         detector_failures=tuple(failures))
    best = perform_reid(vectors, target_features, s_min)
    if best is None:
        return replace(next_state, iteration=next_state.iteration + 1), None
    return next_state, pool[best]
