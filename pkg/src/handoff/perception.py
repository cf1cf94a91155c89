"""Detection and appearance-embedding backends plus Re-ID matching.

Three interchangeable detector implementations (simulator oracle, file
replay, remote HTTP) and three embedders (color histogram, simulator
oracle, remote HTTP). The oracle backends are deliberately stateless in
their randomness: every draw is keyed on (seed, camera or crop, frame),
so call order and call count can never perturb results.
"""
from __future__ import annotations

import base64
import csv
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .boxes import BBox
from .imaging import crop as crop_image
from .imaging import ppm_encode
from .simworld import Scenario, camera_dirname, ground_truth

PERSON_CLASS = 0


class BackendUnavailableError(RuntimeError):
    pass


class DetectorUnavailableError(BackendUnavailableError):
    pass


class EmbedderUnavailableError(BackendUnavailableError):
    pass


@dataclass
class FrameView:
    """One camera frame with the context detectors need."""
    camera_id: str
    frame_index: int
    pixels: np.ndarray


@dataclass(frozen=True)
class Detection:
    bbox: BBox
    class_id: int = PERSON_CLASS
    confidence: float = 1.0

    def __post_init__(self):
        if not 0 <= self.confidence <= 1:
            raise ValueError(f"confidence out of range: {self.confidence}")


@dataclass
class AppearanceVector:
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1:
            raise ValueError("appearance vector must be 1-D")
        if not np.all(np.isfinite(vals)):
            raise ValueError("appearance vector has non-finite entries")
        norm = float(np.linalg.norm(vals))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"appearance vector norm {norm} is not 1")
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


def unit(vals: np.ndarray) -> AppearanceVector:
    vals = np.asarray(vals, dtype=np.float64)
    norm = float(np.linalg.norm(vals))
    if norm == 0 or not np.isfinite(norm):
        raise ValueError("cannot normalize zero or non-finite vector")
    return AppearanceVector(vals / norm)


def similarity(a: AppearanceVector, b: AppearanceVector) -> float:
    return float(np.dot(a.values, b.values))


def perform_reid(candidates: Sequence[AppearanceVector], target: AppearanceVector,
                 s_min: float = 0.6) -> Optional[int]:
    """Index of the best-matching candidate, or None below s_min.

    Ties go to the lowest index.
    """
    best_index = None
    best_score = -np.inf
    for i, cand in enumerate(candidates):
        score = similarity(cand, target)
        if score > best_score:
            best_score = score
            best_index = i
    if best_index is None or best_score < s_min:
        return None
    return best_index


def filter_persons(dets: Sequence[Detection]) -> list[Detection]:
    return [d for d in dets if d.class_id == PERSON_CLASS]


@dataclass(frozen=True)
class OracleDetectorParams:
    jitter_sigma: float = 1.0
    dropout_prob: float = 0.05
    false_positive_rate: float = 0.02
    min_visible_fraction: float = 0.3
    seed: int = 0

    def __post_init__(self):
        for name in ("dropout_prob", "false_positive_rate", "min_visible_fraction"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must be in [0,1], got {v}")
        if self.jitter_sigma < 0:
            raise ValueError("jitter_sigma must be non-negative")


class OracleDetector:
    """Simulator ground truth perturbed by seeded noise.

    The random stream is keyed on (seed, camera, frame index), never shared
    across frames, so results are independent of evaluation order.
    """

    def __init__(self, scenario: Scenario, params: OracleDetectorParams = OracleDetectorParams()):
        self.scenario = scenario
        self.params = params

    def _rng(self, camera_id: str, frame_index: int) -> np.random.Generator:
        key = zlib.crc32(camera_id.encode("utf-8"))
        return np.random.default_rng([self.params.seed, key, frame_index])

    def detect(self, camera_id: str, frame_index: int,
               frame: Optional[np.ndarray] = None) -> list[Detection]:
        p = self.params
        rng = self._rng(camera_id, frame_index)
        cam = self.scenario.camera(camera_id)
        out = []
        for entry in ground_truth(self.scenario, camera_id, frame_index):
            if entry.visible_fraction < p.min_visible_fraction:
                continue
            if rng.uniform() < p.dropout_prob:
                continue
            dx = rng.normal(0.0, p.jitter_sigma) if p.jitter_sigma > 0 else 0.0
            dy = rng.normal(0.0, p.jitter_sigma) if p.jitter_sigma > 0 else 0.0
            conf = float(rng.uniform(0.7, 1.0))
            box = BBox(entry.bbox.x + dx, entry.bbox.y + dy, entry.bbox.w, entry.bbox.h)
            out.append(Detection(box, PERSON_CLASS, conf))
        extra = int(rng.poisson(p.false_positive_rate)) if p.false_positive_rate > 0 else 0
        w, h = cam.resolution
        for _ in range(extra):
            fw = float(rng.uniform(10, 60))
            fh = float(rng.uniform(20, 90))
            fx = float(rng.uniform(0, max(1.0, w - fw)))
            fy = float(rng.uniform(0, max(1.0, h - fh)))
            conf = float(rng.uniform(0.3, 0.6))
            out.append(Detection(BBox(fx, fy, fw, fh), PERSON_CLASS, conf))
        return out


class FileDetector:
    """Replays detections from `frame_index,class_id,x,y,w,h,confidence` files.

    A single file serves every camera; a directory is expected to hold one
    file per camera named `<camera-dir>.csv` (e.g. cam0.csv).
    """

    def __init__(self, path):
        self.path = Path(path)
        self._cache: dict[str, dict[int, list[Detection]]] = {}

    def _load(self, path: Path) -> dict[int, list[Detection]]:
        table: dict[int, list[Detection]] = {}
        with open(path, "r", newline="", encoding="utf-8") as f:
            for row in csv.reader(f):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                if len(row) != 7:
                    raise ValueError(f"bad detection line in {path}: {row}")
                idx = int(row[0])
                det = Detection(
                    BBox(float(row[2]), float(row[3]), float(row[4]), float(row[5])),
                    class_id=int(row[1]),
                    confidence=float(row[6]),
                )
                table.setdefault(idx, []).append(det)
        return table

    def _table_for(self, camera_id: str) -> dict[int, list[Detection]]:
        key = camera_id
        if key not in self._cache:
            if self.path.is_dir():
                path = self.path / f"{camera_dirname(camera_id)}.csv"
                self._cache[key] = self._load(path) if path.exists() else {}
            else:
                self._cache[key] = self._load(self.path)
        return self._cache[key]

    def detect(self, camera_id: str, frame_index: int,
               frame: Optional[np.ndarray] = None) -> list[Detection]:
        return list(self._table_for(camera_id).get(frame_index, []))


class RemoteDetector:
    """Posts frames to an external detection service."""

    def __init__(self, base_url: str, timeout: float = 10.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def detect(self, camera_id: str, frame_index: int,
               frame: Optional[np.ndarray] = None) -> list[Detection]:
        import requests

        if frame is None:
            raise ValueError("remote detector requires frame pixels")
        payload = {
            "frame_b64": base64.b64encode(ppm_encode(frame)).decode("ascii"),
            "camera_id": camera_id,
            "frame_index": frame_index,
        }
        try:
            resp = requests.post(f"{self.base_url}/detect", json=payload, timeout=self.timeout)
            resp.raise_for_status()
            doc = resp.json()
            return [
                Detection(
                    BBox(float(d["x"]), float(d["y"]), float(d["w"]), float(d["h"])),
                    class_id=int(d.get("class_id", PERSON_CLASS)),
                    confidence=float(d.get("confidence", 1.0)),
                )
                for d in doc["detections"]
            ]
        except Exception as exc:  # transport, HTTP status, JSON, schema
            raise DetectorUnavailableError(f"detector at {self.base_url}: {exc}") from exc


class HistogramEmbedder:
    """8x8x8 joint RGB histogram of the crop, L2-normalized (512 dims)."""

    def __init__(self, bins: int = 8):
        self.bins = bins

    def embed(self, frame: np.ndarray, box: BBox) -> AppearanceVector:
        region = crop_image(frame, box)
        step = 256 // self.bins
        idx = region.reshape(-1, 3) // step
        flat = (idx[:, 0] * self.bins + idx[:, 1]) * self.bins + idx[:, 2]
        hist = np.bincount(flat, minlength=self.bins ** 3).astype(np.float64)
        return unit(hist)


class OracleEmbedder:
    """Identity-revealing embedder backed by the simulator's agent colors.

    The crop's dominant agent (by exact color-match pixel count) selects a
    basis vector; crops matching no agent map to a reserved background
    dimension. Gaussian noise keyed on the crop bytes is added and the
    result renormalized, so identical crops embed identically.
    """

    def __init__(self, scenario: Scenario, dim: int = 128, noise_sigma: float = 0.05,
                 seed: int = 0):
        if len(scenario.agents) > dim - 1:
            raise ValueError(f"embedding dim {dim} too small for {len(scenario.agents)} agents")
        colors = [a.color for a in scenario.agents]
        if len(set(colors)) != len(colors):
            raise ValueError("oracle embedder requires distinct agent colors")
        self.scenario = scenario
        self.dim = dim
        self.noise_sigma = noise_sigma
        self.seed = seed

    def _identity(self, region: np.ndarray) -> int:
        best, best_count = self.dim - 1, 0
        flat = region.reshape(-1, 3)
        for i, agent in enumerate(self.scenario.agents):
            count = int(np.all(flat == np.array(agent.color, dtype=np.uint8), axis=1).sum())
            if count > best_count:
                best, best_count = i, count
        return best

    def embed(self, frame: np.ndarray, box: BBox) -> AppearanceVector:
        region = crop_image(frame, box)
        vec = np.zeros(self.dim)
        vec[self._identity(region)] = 1.0
        if self.noise_sigma > 0:
            shape_tag = f"{region.shape[0]}x{region.shape[1]}".encode("ascii")
            key = zlib.crc32(shape_tag + region.tobytes())
            rng = np.random.default_rng([self.seed, key])
            vec = vec + rng.normal(0.0, self.noise_sigma, size=self.dim)
        return unit(vec)


class RemoteEmbedder:
    """Posts crops to an external embedding service."""

    def __init__(self, base_url: str, timeout: float = 10.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def embed(self, frame: np.ndarray, box: BBox) -> AppearanceVector:
        import requests

        region = crop_image(frame, box)
        payload = {"crop_b64": base64.b64encode(ppm_encode(np.ascontiguousarray(region))).decode("ascii")}
        try:
            resp = requests.post(f"{self.base_url}/embed", json=payload, timeout=self.timeout)
            resp.raise_for_status()
            vec = np.asarray(resp.json()["vector"], dtype=np.float64)
            return unit(vec)
        except Exception as exc:
            raise EmbedderUnavailableError(f"embedder at {self.base_url}: {exc}") from exc


def detect_persons(detector, camera_id: str, frame_index: int,
                   frame: Optional[np.ndarray] = None) -> list[Detection]:
    """Run a detector and keep person-class results only."""
    return filter_persons(detector.detect(camera_id, frame_index, frame))


def embed(frame: np.ndarray, box: BBox, embedder) -> AppearanceVector:
    return embedder.embed(frame, box)
