import base64
import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from handoff.boxes import BBox, iou
from handoff.imaging import ppm_decode
from handoff.perception import (AppearanceVector, Detection, DetectorUnavailableError,
                                EmbedderUnavailableError, FileDetector, HistogramEmbedder,
                                OracleDetector, OracleDetectorParams, OracleEmbedder,
                                RemoteDetector, RemoteEmbedder, detect_persons, embed,
                                filter_persons, perform_reid, similarity, unit)
from handoff.simworld import ground_truth, render, scenario_from_dict


def make_scenario(occluders=(), agents=None):
    if agents is None:
        agents = [
            {"id": "t", "color": [200, 40, 40], "size": [6, 10],
             "waypoints": [[0, 20, 30], [2, 40, 30]]},
            {"id": "d", "color": [40, 200, 40], "size": [6, 10],
             "waypoints": [[0, 35, 15], [2, 15, 15]]},
        ]
    return scenario_from_dict({
        "world_size": [100, 60],
        "fps": 10,
        "duration": 2.0,
        "agents": agents,
        "occluders": list(occluders),
        "cameras": [{"id": "cam0", "fov": [0, 0, 50, 60], "resolution": [200, 240]}],
    })


def test_noiseless_oracle_equals_ground_truth():
    sc = make_scenario()
    det = OracleDetector(sc, OracleDetectorParams(jitter_sigma=0, dropout_prob=0,
                                                  false_positive_rate=0))
    for idx in range(sc.total_frames):
        got = det.detect("cam0", idx)
        want = [e.bbox for e in ground_truth(sc, "cam0", idx) if e.visible_fraction >= 0.3]
        assert len(got) == len(want)
        for d, w in zip(got, want):
            assert iou(d.bbox, w) > 0.999
            assert d.class_id == 0


def test_visibility_gate():
    # occluder leaves ~17% of the target visible at t=0 (covers x<=22 of 17..23)
    sc = make_scenario(occluders=[{"rect": [0, 0, 22, 60], "color": [5, 5, 5]}])
    entry = [e for e in ground_truth(sc, "cam0", 0) if e.agent_id == "t"][0]
    assert entry.visible_fraction < 0.3
    det = OracleDetector(sc, OracleDetectorParams(jitter_sigma=0, dropout_prob=0,
                                                  false_positive_rate=0))
    ids = set()
    for d in det.detect("cam0", 0):
        for e in ground_truth(sc, "cam0", 0):
            if iou(d.bbox, e.bbox) > 0.9:
                ids.add(e.agent_id)
    assert "t" not in ids


def test_oracle_detector_deterministic_and_order_free():
    sc = make_scenario()
    params = OracleDetectorParams(seed=42)
    a = OracleDetector(sc, params)
    b = OracleDetector(sc, params)
    seq_a = [a.detect("cam0", i) for i in range(10)]
    # different call order and interleaving must not matter
    seq_b = [b.detect("cam0", i) for i in reversed(range(10))][::-1]
    extra = b.detect("cam0", 3)
    assert seq_a == seq_b
    assert seq_a[3] == extra


def test_oracle_detector_seed_changes_noise():
    sc = make_scenario()
    a = OracleDetector(sc, OracleDetectorParams(seed=1))
    b = OracleDetector(sc, OracleDetectorParams(seed=2))
    assert a.detect("cam0", 0) != b.detect("cam0", 0)


def test_file_detector_replay(tmp_path):
    p = tmp_path / "dets.csv"
    p.write_text("0,0,10,20,30,40,0.9\n0,2,1,1,5,5,0.8\n1,0,12,22,30,40,0.85\n")
    det = FileDetector(p)
    d0 = det.detect("cam0", 0)
    assert len(d0) == 2
    assert d0[0].bbox == BBox(10, 20, 30, 40)
    assert d0[1].class_id == 2
    assert len(det.detect("cam0", 1)) == 1
    assert det.detect("cam0", 5) == []


def test_file_detector_directory(tmp_path):
    (tmp_path / "cam0.csv").write_text("0,0,1,1,2,2,0.5\n")
    (tmp_path / "cam1.csv").write_text("0,0,3,3,4,4,0.5\n0,0,5,5,6,6,0.5\n")
    det = FileDetector(tmp_path)
    assert len(det.detect("cam0", 0)) == 1
    assert len(det.detect("cam1", 0)) == 2
    assert det.detect("cam9", 0) == []


def test_filter_persons():
    person = Detection(BBox(0, 0, 5, 5), 0, 0.9)
    car = Detection(BBox(0, 0, 5, 5), 2, 0.9)
    assert filter_persons([]) == []
    assert filter_persons([person, car, person]) == [person, person]
    assert filter_persons([car, car]) == []


def test_histogram_uniform_red():
    frame = np.zeros((20, 20, 3), dtype=np.uint8)
    frame[..., 0] = 255
    v = HistogramEmbedder().embed(frame, BBox(2, 2, 10, 10))
    assert v.dim == 512
    assert np.count_nonzero(v.values) == 1
    assert abs(np.linalg.norm(v.values) - 1) < 1e-9


def test_histogram_scale_invariant():
    frame = np.full((40, 40, 3), 77, dtype=np.uint8)
    small = HistogramEmbedder().embed(frame, BBox(0, 0, 5, 5))
    large = HistogramEmbedder().embed(frame, BBox(0, 0, 30, 30))
    assert np.allclose(small.values, large.values)


def test_histogram_permutation_invariant():
    rng = np.random.default_rng(3)
    crop = rng.integers(0, 256, size=(12, 12, 3), dtype=np.uint8)
    v1 = HistogramEmbedder().embed(crop, BBox(0, 0, 12, 12))
    flat = crop.reshape(-1, 3).copy()
    rng.shuffle(flat, axis=0)
    v2 = HistogramEmbedder().embed(flat.reshape(12, 12, 3), BBox(0, 0, 12, 12))
    assert np.allclose(v1.values, v2.values)


def test_oracle_embedder_identity():
    sc = make_scenario()
    emb = OracleEmbedder(sc, noise_sigma=0)
    frame = render(sc, "cam0", 0)
    entry = [e for e in ground_truth(sc, "cam0", 0) if e.agent_id == "t"][0]
    v = emb.embed(frame, entry.bbox)
    want = np.zeros(128)
    want[0] = 1.0
    assert np.allclose(v.values, want)
    # background crop maps to the reserved last dimension
    bg = emb.embed(frame, BBox(150, 150, 20, 20))
    assert bg.values[127] == 1.0


def test_oracle_embedder_noise_deterministic():
    sc = make_scenario()
    emb = OracleEmbedder(sc, noise_sigma=0.05, seed=9)
    frame = render(sc, "cam0", 0)
    entry = ground_truth(sc, "cam0", 0)[0]
    v1 = emb.embed(frame, entry.bbox)
    v2 = emb.embed(frame, entry.bbox)
    assert np.array_equal(v1.values, v2.values)
    assert abs(np.linalg.norm(v1.values) - 1) < 1e-9
    # different crop -> different noise
    v3 = emb.embed(frame, BBox(entry.bbox.x, entry.bbox.y, entry.bbox.w + 2, entry.bbox.h))
    assert not np.array_equal(v1.values, v3.values)


def test_oracle_embedder_rejects_duplicate_colors():
    agents = [
        {"id": "a", "color": [1, 2, 3], "size": [5, 5], "waypoints": [[0, 10, 10], [1, 11, 10]]},
        {"id": "b", "color": [1, 2, 3], "size": [5, 5], "waypoints": [[0, 30, 30], [1, 31, 30]]},
    ]
    sc = make_scenario(agents=agents)
    with pytest.raises(ValueError, match="distinct"):
        OracleEmbedder(sc)


def test_similarity_basics():
    a = unit(np.array([1.0, 0, 0]))
    b = unit(np.array([0, 1.0, 0]))
    assert similarity(a, a) == 1.0
    assert similarity(a, b) == 0.0
    neg = AppearanceVector(-a.values)
    assert similarity(a, neg) == -1.0


def test_appearance_vector_validation():
    with pytest.raises(ValueError):
        AppearanceVector(np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        AppearanceVector(np.array([np.nan, 0.0]))
    with pytest.raises(ValueError):
        unit(np.zeros(4))


def test_perform_reid():
    target = unit(np.array([1.0, 0, 0]))

    def cand(sim):
        # unit vector at angle acos(sim) from target
        return unit(np.array([sim, np.sqrt(max(0.0, 1 - sim * sim)), 0]))

    cands = [cand(0.2), cand(0.9), cand(0.5)]
    assert perform_reid(cands, target, s_min=0.6) == 1
    assert perform_reid([cand(0.4)] * 3, target, s_min=0.6) is None
    assert perform_reid([cand(0.8), cand(0.8)], target, s_min=0.5) == 0
    assert perform_reid([], target, s_min=-1) is None


def test_perform_reid_append_lower_invariant():
    rng = np.random.default_rng(8)
    target = unit(rng.standard_normal(16))
    cands = [unit(rng.standard_normal(16)) for _ in range(5)]
    base = perform_reid(cands, target, s_min=-1)
    sims = [similarity(c, target) for c in cands]
    # craft a strictly lower-similarity candidate
    worst = unit(-target.values)
    assert perform_reid(cands + [worst], target, s_min=-1) == base
    assert min(sims) > similarity(worst, target)


class _Backend(BaseHTTPRequestHandler):
    def do_POST(self):
        size = int(self.headers["Content-Length"])
        doc = json.loads(self.rfile.read(size))
        if self.path == "/detect":
            frame = ppm_decode(base64.b64decode(doc["frame_b64"]))
            body = {"detections": [
                {"x": 1.0, "y": 2.0, "w": 3.0, "h": 4.0, "class_id": 0,
                 "confidence": 0.75},
                {"x": float(frame.shape[1]), "y": float(doc["frame_index"]),
                 "w": 2.0, "h": 2.0, "class_id": 1, "confidence": 0.5},
            ]}
        elif self.path == "/embed":
            crop = ppm_decode(base64.b64decode(doc["crop_b64"]))
            vec = [float(crop.shape[0]), float(crop.shape[1]), 1.0]
            body = {"vector": vec}
        elif self.path == "/broken":
            body = None
        else:
            self.send_response(404)
            self.end_headers()
            return
        payload = json.dumps(body).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture()
def backend_server():
    server = HTTPServer(("127.0.0.1", 0), _Backend)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()


def test_remote_detector(backend_server):
    frame = np.zeros((8, 6, 3), dtype=np.uint8)
    det = RemoteDetector(backend_server)
    got = det.detect("cam0", 5, frame)
    assert got[0].bbox == BBox(1, 2, 3, 4)
    assert got[0].confidence == 0.75
    # the round-tripped frame reached the server intact
    assert got[1].bbox.x == 6.0 and got[1].bbox.y == 5.0
    persons = detect_persons(det, "cam0", 5, frame)
    assert len(persons) == 1


def test_remote_detector_requires_frame(backend_server):
    with pytest.raises(ValueError):
        RemoteDetector(backend_server).detect("cam0", 0, None)


def test_remote_detector_unavailable():
    det = RemoteDetector("http://127.0.0.1:1")  # nothing listens there
    with pytest.raises(DetectorUnavailableError):
        det.detect("cam0", 0, np.zeros((4, 4, 3), dtype=np.uint8))


def test_remote_embedder(backend_server):
    frame = np.zeros((20, 20, 3), dtype=np.uint8)
    v = embed(frame, BBox(0, 0, 4, 5), RemoteEmbedder(backend_server))
    # server echoes crop dims (5 rows, 4 cols), normalized client-side
    want = unit(np.array([5.0, 4.0, 1.0]))
    assert np.allclose(v.values, want.values)


def test_remote_embedder_unavailable():
    with pytest.raises(EmbedderUnavailableError):
        RemoteEmbedder("http://127.0.0.1:1").embed(
            np.zeros((4, 4, 3), dtype=np.uint8), BBox(0, 0, 2, 2))
