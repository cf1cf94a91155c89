"""Command line entry points: simulate, track, eval, ablate, bench, serve.

Every command is deterministic for a fixed (scenario, seed) pair except
bench timings. Exit codes: 0 success, 1 validation error (bad arguments,
bad scenario, bad selection), 2 runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Optional

from .boxes import BBox
from .coordinator import (builtin_scenario_names, load_scenario_bundle, run_scenario,
                          render_trajectory_map, scenario_layout, serialize_results)
from .intra import IntraConfig
from .metrics import EvalReport, classify_frame, aggregate
from .perception import (BackendUnavailableError, FileDetector, HistogramEmbedder,
                         OracleDetector, OracleDetectorParams, OracleEmbedder,
                         RemoteDetector, RemoteEmbedder)
from .simworld import (export_frames, export_ground_truth, ground_truth,
                       read_ground_truth_csv, read_otb_ground_truth)

log = logging.getLogger("handoff.cli")

REPORT_FIELDS = ("precision", "recall", "f1", "mean_iou", "ope")


class CliError(ValueError):
    """User-facing validation problem; maps to exit code 1."""


def parse_selection(text: str) -> tuple[str, int, BBox]:
    """camera:frame:x,y,w,h with the box in pixels of that camera."""
    parts = text.split(":")
    if len(parts) != 3:
        raise CliError(f"selection must be camera:frame:x,y,w,h, got {text!r}")
    camera_id, frame_str, box_str = parts
    nums = box_str.split(",")
    if len(nums) != 4:
        raise CliError(f"selection box needs four numbers, got {box_str!r}")
    try:
        frame_index = int(frame_str)
        x, y, w, h = (float(n) for n in nums)
    except ValueError as exc:
        raise CliError(f"bad selection {text!r}: {exc}") from None
    if frame_index < 0 or w <= 0 or h <= 0:
        raise CliError(f"selection needs a non-negative frame and a positive box: {text!r}")
    return camera_id, frame_index, BBox(x, y, w, h)


def build_detector(spec: str, scenario, seed: int):
    kind, _, param = spec.partition(":")
    if kind == "oracle":
        return OracleDetector(scenario, OracleDetectorParams(seed=seed))
    if kind == "file":
        if not param:
            raise CliError("file detector needs a path: --detector file:PATH")
        return FileDetector(param)
    if kind == "remote":
        if not param:
            raise CliError("remote detector needs a URL: --detector remote:URL")
        return RemoteDetector(param)
    raise CliError(f"unknown detector {spec!r} (oracle, file:PATH, remote:URL)")


def build_embedder(spec: str, scenario, seed: int):
    kind, _, param = spec.partition(":")
    if kind == "oracle":
        return OracleEmbedder(scenario, seed=seed)
    if kind == "histogram":
        return HistogramEmbedder()
    if kind == "remote":
        if not param:
            raise CliError("remote embedder needs a URL: --embedder remote:URL")
        return RemoteEmbedder(param)
    raise CliError(f"unknown embedder {spec!r} (oracle, histogram, remote:URL)")


def intra_config_from(args) -> IntraConfig:
    return IntraConfig(iou_threshold=args.iou_threshold,
                       reid_s_min=args.s_min,
                       occlusion_module=args.occlusion == "on")


def pick_agent(agent_ids: list[str], requested: Optional[str]) -> str:
    if requested is not None:
        if requested not in agent_ids:
            raise CliError(f"no agent {requested!r}; choices: {', '.join(sorted(agent_ids))}")
        return requested
    if len(agent_ids) == 1:
        return agent_ids[0]
    raise CliError(f"several agents present, pick one with --agent: {', '.join(sorted(agent_ids))}")


def visible_gt_boxes(scenario, camera_id: str, agent_id: str,
                     min_visible: float = 0.3) -> list[Optional[BBox]]:
    """Per-frame target box on one camera; hidden or absent frames are None."""
    boxes: list[Optional[BBox]] = []
    for idx in range(scenario.total_frames):
        entry = next((e for e in ground_truth(scenario, camera_id, idx)
                      if e.agent_id == agent_id), None)
        boxes.append(entry.bbox if entry is not None
                     and entry.visible_fraction >= min_visible else None)
    return boxes


def entries_by_camera(results_doc: dict) -> dict[str, dict[int, BBox]]:
    out: dict[str, dict[int, BBox]] = {}
    for e in results_doc.get("entries", []):
        out.setdefault(e["camera"], {})[e["frame"]] = BBox(e["x"], e["y"], e["w"], e["h"])
    return out


def evaluate_cameras(preds: dict[str, dict[int, BBox]],
                     gts: dict[str, list[Optional[BBox]]],
                     tau: float) -> dict:
    """Per-camera reports plus a mean row over cameras that saw any frame."""
    cameras = {}
    for cam_id in sorted(gts):
        gt_seq = gts[cam_id]
        cam_preds = preds.get(cam_id, {})
        matches = [classify_frame(cam_preds.get(idx), gt_seq[idx], tau)
                   for idx in range(len(gt_seq))]
        cameras[cam_id] = aggregate(matches)
    scored = [r for r in cameras.values() if r.frames_evaluated > 0]
    mean_over = scored if scored else list(cameras.values())
    mean = {f: (sum(getattr(r, f) for r in mean_over) / len(mean_over)) if mean_over else 0.0
            for f in REPORT_FIELDS}
    mean["frames_evaluated"] = sum(r.frames_evaluated for r in cameras.values())
    return {"tau": tau,
            "cameras": {cam: r.to_dict() for cam, r in cameras.items()},
            "mean": mean}


def format_report_table(report: dict) -> str:
    header = f"{'camera':<10}" + "".join(f"{f:>11}" for f in REPORT_FIELDS) + f"{'frames':>9}"
    lines = [header]
    rows = list(report["cameras"].items()) + [("mean", report["mean"])]
    for name, row in rows:
        cells = "".join(f"{row[f]:>11.4f}" for f in REPORT_FIELDS)
        lines.append(f"{name:<10}{cells}{row['frames_evaluated']:>9}")
    return "\n".join(lines)


def write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def track_once(scenario, graph, args, *, occlusion_module: Optional[bool] = None):
    camera_id, frame_index, box = parse_selection(args.select)
    config = intra_config_from(args)
    if occlusion_module is not None:
        config = replace(config, occlusion_module=occlusion_module)
    detector = build_detector(args.detector, scenario, args.seed)
    embedder = build_embedder(args.embedder, scenario, args.seed)
    return run_scenario(scenario, graph, detector, embedder,
                        camera_id=camera_id, frame_index=frame_index, box=box,
                        intra_config=config, search_s_min=args.s_min)


def cmd_simulate(args) -> int:
    scenario, _ = load_scenario_bundle(args.scenario)
    out_dir = Path(args.out)
    n = export_frames(scenario, out_dir)
    csvs = export_ground_truth(scenario, out_dir)
    print(f"{scenario.name}: wrote {n} frames and {len(csvs)} ground-truth files to {out_dir}")
    return 0


def cmd_track(args) -> int:
    scenario, graph = load_scenario_bundle(args.scenario)
    track = track_once(scenario, graph, args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "results.json").write_text(serialize_results(track), encoding="utf-8")
    svg = render_trajectory_map(track, scenario_layout(scenario))
    (out_dir / "map.svg").write_text(svg, encoding="utf-8")
    visited = " -> ".join(track.trajectory.first_visit_order()) or "(none)"
    print(f"{track.id}: {len(track.trajectory.entries)} entries, cameras {visited}, "
          f"final phase {track.phase_name()}")
    print(f"wrote {out_dir / 'results.json'} and {out_dir / 'map.svg'}")
    return 0


def _scenario_gt_tables(scenario, agent_id: str) -> dict[str, list[Optional[BBox]]]:
    return {cam.id: visible_gt_boxes(scenario, cam.id, agent_id)
            for cam in scenario.cameras}


def cmd_eval(args) -> int:
    with open(args.results, "r", encoding="utf-8") as f:
        results_doc = json.load(f)
    preds = entries_by_camera(results_doc)
    gt_path = Path(args.gt)

    if gt_path.is_dir():
        gts: dict[str, list[Optional[BBox]]] = {}
        agents: set[str] = set()
        per_cam_rows = {}
        for csv_path in sorted(gt_path.glob("*_gt.csv")):
            cam_id = csv_path.stem[:-3]
            rows = read_ground_truth_csv(csv_path)
            per_cam_rows[cam_id] = rows
            for entries in rows.values():
                agents.update(e.agent_id for e in entries)
        if not per_cam_rows:
            raise CliError(f"no *_gt.csv files under {gt_path}")
        agent = pick_agent(sorted(agents), args.agent)
        for cam_id, rows in per_cam_rows.items():
            span = max(rows) + 1 if rows else 0
            seq: list[Optional[BBox]] = [None] * span
            for idx, entries in rows.items():
                e = next((e for e in entries if e.agent_id == agent), None)
                if e is not None and e.visible_fraction >= 0.3:
                    seq[idx] = e.bbox
            gts[cam_id] = seq
    else:
        # OTB-style single-sequence file: one x,y,w,h line per frame
        boxes = read_otb_ground_truth(gt_path)
        cams = sorted(preds) or ["cam0"]
        if len(cams) > 1:
            raise CliError("a flat ground-truth file scores a single-camera result; "
                           f"results span {', '.join(cams)}")
        gts = {cams[0]: boxes}

    report = evaluate_cameras(preds, gts, args.tau)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(out_dir / "report.json", report)
    print(format_report_table(report))
    print(f"wrote {out_dir / 'report.json'}")
    return 0


def cmd_ablate(args) -> int:
    scenario, graph = load_scenario_bundle(args.scenario)
    agent = pick_agent([a.id for a in scenario.agents], args.agent)
    gts = _scenario_gt_tables(scenario, agent)
    reports = {}
    for label, module_on in (("on", True), ("off", False)):
        track = track_once(scenario, graph, args, occlusion_module=module_on)
        doc = json.loads(serialize_results(track))
        reports[label] = evaluate_cameras(entries_by_camera(doc), gts, args.tau)
        print(f"occlusion {label}:")
        print(format_report_table(reports[label]))
    delta = {f: reports["on"]["mean"][f] - reports["off"]["mean"][f] for f in REPORT_FIELDS}
    doc = {"agent": agent, "on": reports["on"], "off": reports["off"], "delta": delta}
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(out_dir / "ablation.json", doc)
    print(f"delta (on - off): f1 {delta['f1']:+.4f}, ope {delta['ope']:+.2f}px")
    print(f"wrote {out_dir / 'ablation.json'}")
    return 0


def default_selection(scenario) -> str:
    cam = scenario.cameras[0]
    for idx in range(scenario.total_frames):
        entries = [e for e in ground_truth(scenario, cam.id, idx) if e.visible_fraction >= 0.3]
        if entries:
            b = entries[0].bbox
            return f"{cam.id}:{idx}:{b.x},{b.y},{b.w},{b.h}"
    raise CliError(f"no visible agent on {cam.id} to select")


def cmd_bench(args) -> int:
    from .coordinator import process_tick, required_cameras, select_target
    from .perception import FrameView
    from .simworld import render

    scenario, graph = load_scenario_bundle(args.scenario)
    if args.select is None:
        args.select = default_selection(scenario)
    camera_id, frame_index, box = parse_selection(args.select)
    detector = build_detector(args.detector, scenario, args.seed)
    embedder = build_embedder(args.embedder, scenario, args.seed)

    # render everything up front so timings cover perception + tracking only
    frames = {cam.id: [render(scenario, cam.id, i) for i in range(scenario.total_frames)]
              for cam in scenario.cameras}
    track = select_target(camera_id, frames[camera_id][frame_index], box, embedder,
                          intra_config=intra_config_from(args), search_s_min=args.s_min)
    latencies = []
    for idx in range(frame_index, scenario.total_frames):
        cams = required_cameras(track, graph)
        views = {c: FrameView(c, idx, frames[c][idx]) for c in cams}
        t0 = time.perf_counter()
        process_tick(track, views, detector, embedder)
        latencies.append(time.perf_counter() - t0)

    total = sum(latencies)
    n = len(latencies)
    fps = n / total if total > 0 else float("inf")
    p95 = sorted(latencies)[min(n - 1, int(0.95 * (n - 1)))] if n else 0.0
    res = scenario.cameras[0].resolution
    doc = {"frames": n, "fps": fps,
           "mean_latency_ms": (total / n) * 1e3 if n else 0.0,
           "p95_latency_ms": p95 * 1e3,
           "resolution": list(res)}
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(out_dir / "bench.json", doc)
    print(f"{n} frames at {res[0]}x{res[1]}: {fps:.1f} FPS, "
          f"mean {doc['mean_latency_ms']:.2f}ms, p95 {doc['p95_latency_ms']:.2f}ms")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    scenario, graph = load_scenario_bundle(args.scenario)
    detector = build_detector(args.detector, scenario, args.seed)
    embedder = build_embedder(args.embedder, scenario, args.seed)
    app = create_app(scenario, graph, detector=detector, embedder=embedder,
                     intra_config=intra_config_from(args), search_s_min=args.s_min)
    level = os.environ.get("HANDOFF_LOG", "warning").lower()
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level=level)
    except (OSError, SystemExit) as exc:
        code = exc.errno if isinstance(exc, OSError) else exc.code
        if code:
            print(f"server failed to start on port {args.port}: {exc}", file=sys.stderr)
            return 2
    return 0


class Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; the contract reserves 2 for
    # runtime errors, so usage problems are remapped to 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(1)


def add_run_flags(p, *, selection_required=True):
    p.add_argument("--scenario", required=True,
                   help=f"scenario file or builtin name ({', '.join(builtin_scenario_names())})")
    p.add_argument("--select", required=selection_required, default=None,
                   metavar="CAM:FRAME:X,Y,W,H", help="target selection box")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--occlusion", choices=("on", "off"), default="on")
    p.add_argument("--detector", default="oracle", help="oracle | file:PATH | remote:URL")
    p.add_argument("--embedder", default="oracle", help="oracle | histogram | remote:URL")
    p.add_argument("--iou-threshold", type=float, default=0.30)
    p.add_argument("--s-min", type=float, default=0.6,
                   help="appearance floor for reacquisition and cross-camera search")
    p.add_argument("--out", default="handoff_out")


def build_parser() -> Parser:
    parser = Parser(prog="handoff",
                    description="multi-camera person tracking over simulated feeds")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="render frames and ground truth to disk")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", default="handoff_out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("track", help="run a full offline tracking pass")
    add_run_flags(p)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="score results.json against ground truth")
    p.add_argument("--results", required=True)
    p.add_argument("--gt", required=True, help="simulate output dir or x,y,w,h file")
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--agent", default=None)
    p.add_argument("--out", default="handoff_out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="paired runs with the occlusion module on and off")
    add_run_flags(p)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--agent", default=None)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("bench", help="throughput of the perception+tracking loop")
    add_run_flags(p, selection_required=False)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve", help="host the HTTP tracking service")
    add_run_flags(p, selection_required=False)
    p.add_argument("--port", type=int, default=8008)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    level = os.environ.get("HANDOFF_LOG", "WARNING").upper()
    logging.basicConfig(level=level if hasattr(logging, level) else logging.WARNING)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    except (CliError, FileNotFoundError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BackendUnavailableError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
