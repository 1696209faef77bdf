"""Command-line surface: evaluate, gsr, latency, attributes, split, simulate.

Exit codes: 0 success, 2 configuration error, 3 sequence failures present,
4 wire-protocol peer failure.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import shlex
import sys
from pathlib import Path

from . import __version__
from .datamodel import (AUTO_ATTRIBUTES, MCVideo, SplitCondition,
                        compute_auto_attributes, generate_splits,
                        parse_annotations, segment_clips, serialize_annotations)
from .fusion import FusionConfig, FusionController
from .metrics import (GSR_WINDOWS, aggregate, fscore_optimize, gsr_curve,
                      latency_profile)
from .protocol import (BackendError, DetectorInit, GroundTruthInit, NoInitError,
                       parse_detections, run_ope, serialize_detections,
                       serialize_trace, trace_backend)
from .simgen import NoiseConfig, OracleBackend, SimConfig, gen_detections, gen_mc_sequence
from .sort import SortBackend
from .wire import ExternBackend

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SEQUENCE_FAILURES = 3
EXIT_PEER_FAILURE = 4

DATASET_ENV = "LTRACK_DATASET"


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# dataset / backend plumbing

def load_dataset(dataset_dir) -> list:
    root = Path(dataset_dir)
    if not root.is_dir():
        raise ConfigError(f"dataset directory not found: {root}")
    files = sorted(root.glob("*.txt"))
    if not files:
        raise ConfigError(f"no annotation files (*.txt) in {root}")
    videos = []
    for path in files:
        with open(path, "r", encoding="utf-8") as fh:
            videos.append(parse_annotations(fh.read()))
    return videos


def make_backend_factory(spec: str, seed: int = 0):
    """Map a backend spec string to a per-video backend factory."""
    if spec == "oracle":
        return lambda v: OracleBackend(v, seed=seed)
    if spec.startswith("trace:"):
        root = Path(spec[len("trace:"):])
        if not root.is_dir():
            raise ConfigError(f"trace directory not found: {root}")
        return lambda v: trace_backend(root / f"{v.id}.csv")
    if spec.startswith("sort:"):
        root = Path(spec[len("sort:"):])
        if not root.is_dir():
            raise ConfigError(f"detection directory not found: {root}")

        def factory(v):
            with open(root / f"{v.id}.csv", "r", encoding="utf-8") as fh:
                stream = parse_detections(fh.read(), len(v))
            return SortBackend(stream)
        return factory
    if spec.startswith("fusion:"):
        rest = spec[len("fusion:"):]
        if "+" not in rest:
            raise ConfigError("fusion spec must be fusion:<tracker>+<redetector>")
        tracker_spec, redetector_spec = rest.split("+", 1)
        f_tracker = make_backend_factory(tracker_spec, seed)
        f_redet = make_backend_factory(redetector_spec, seed)
        return lambda v: FusionController(FusionConfig(), f_tracker(v), f_redet(v))
    if spec.startswith("extern-tcp:"):
        host, _, port = spec[len("extern-tcp:"):].rpartition(":")
        if not host or not port.isdigit():
            raise ConfigError("extern-tcp spec must be extern-tcp:host:port")
        return lambda v: ExternBackend(address=(host, int(port)))
    if spec.startswith("extern:"):
        cmd = shlex.split(spec[len("extern:"):])
        if not cmd:
            raise ConfigError("empty extern command")
        return lambda v: ExternBackend(cmd=cmd)
    raise ConfigError(f"unknown backend spec: {spec!r}")


def make_init_policy(init_spec: str, video: MCVideo):
    if init_spec == "gt":
        return GroundTruthInit()
    if init_spec.startswith("detector:"):
        rest = init_spec[len("detector:"):]
        threshold = 0.5
        root = rest
        if ":" in rest:
            root, thr = rest.rsplit(":", 1)
            threshold = float(thr)
        path = Path(root) / f"{video.id}.csv"
        if not path.is_file():
            raise ConfigError(f"detection file not found: {path}")
        with open(path, "r", encoding="utf-8") as fh:
            stream = parse_detections(fh.read(), len(video))
        return DetectorInit(stream, threshold)
    raise ConfigError(f"unknown init policy: {init_spec!r}")


def evaluate_sequence(video: MCVideo, backend_factory, init_spec: str,
                      include_occluded: bool, gsr_iou: float) -> dict:
    backend = backend_factory(video)
    try:
        policy = make_init_policy(init_spec, video)
        ope = run_ope(backend, video, policy)
        result = fscore_optimize(ope.trace, video, include_occluded)
        curve = gsr_curve(ope.trace, video, iou_threshold=gsr_iou,
                          include_occluded=include_occluded)
        latency = latency_profile(ope.update_costs, video.meta.fps)
        attrs = set()
        for clip in segment_clips(video):
            frames = video.frames[clip.start:clip.end + 1]
            auto = compute_auto_attributes(frames)
            attrs.update(name for name, flag in auto.items() if flag)
        return {
            "id": video.id, "status": "ok",
            "discipline": video.meta.discipline.value,
            "weather": video.meta.weather.value,
            "frames": len(video),
            "fscore": result.f_star,
            "precision": result.precision_at_best,
            "recall": result.recall_at_best,
            "tau_star": result.tau_star,
            "gsr": dict(zip(GSR_WINDOWS, curve)),
            "latency_final": latency.final_delay,
            "attributes": sorted(attrs),
            "trace": ope.trace,
            "costs": ope.update_costs,
        }
    except NoInitError as exc:
        # no qualifying detection: the sequence scores zero recall
        return {"id": video.id, "status": "no_init", "error": str(exc),
                "discipline": video.meta.discipline.value,
                "weather": video.meta.weather.value, "frames": len(video),
                "fscore": 0.0, "precision": 0.0, "recall": 0.0,
                "tau_star": 0.0, "gsr": {w: 0.0 for w in GSR_WINDOWS},
                "latency_final": 0.0, "attributes": [], "trace": None,
                "costs": []}
    except BackendError as exc:
        kind = "peer_failure" if isinstance(backend, ExternBackend) or \
            _contains_extern(backend) else "failed"
        return {"id": video.id, "status": kind, "error": str(exc)}
    except Exception as exc:
        return {"id": video.id, "status": "failed", "error": str(exc)}
    finally:
        if hasattr(backend, "close"):
            backend.close()


def _contains_extern(backend) -> bool:
    if isinstance(backend, FusionController):
        return isinstance(backend.tracker, ExternBackend) or \
            isinstance(backend.redetector, ExternBackend)
    return False


def run_evaluation(videos, backend_factory, init_spec, include_occluded,
                   gsr_iou, jobs: int = 1) -> list:
    if jobs <= 1:
        return [evaluate_sequence(v, backend_factory, init_spec,
                                  include_occluded, gsr_iou) for v in videos]
    with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(evaluate_sequence, v, backend_factory,
                               init_spec, include_occluded, gsr_iou)
                   for v in videos]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# report writing

def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_manifest(out: Path, args: argparse.Namespace) -> None:
    manifest = {"tool": "ltrack", "version": __version__,
                "command": args.command,
                "flags": {k: v for k, v in sorted(vars(args).items())
                          if k not in ("command", "fn")}}
    _write(out / "manifest.json",
           json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")


def write_reports(out: Path, rows, include_occluded: bool, gsr_iou: float) -> None:
    ok_rows = [r for r in rows if r["status"] in ("ok", "no_init")]
    lines = ["id,status,discipline,weather,frames,fscore,precision,recall,"
             "tau_star,latency_final,attributes"]
    for r in rows:
        if r["status"] in ("ok", "no_init"):
            lines.append(f"{r['id']},{r['status']},{r['discipline']},"
                         f"{r['weather']},{r['frames']},{r['fscore']:.6f},"
                         f"{r['precision']:.6f},{r['recall']:.6f},"
                         f"{r['tau_star']:.6f},{r['latency_final']:.6f},"
                         f"{'|'.join(r['attributes'])}")
        else:
            lines.append(f"{r['id']},{r['status']},,,,,,,,,")
    _write(out / "per_sequence.csv", "\n".join(lines) + "\n")

    summary = {"flags": {"include_occluded": include_occluded,
                         "gsr_iou_threshold": gsr_iou},
               "sequences": len(rows),
               "failed": [r["id"] for r in rows
                          if r["status"] not in ("ok", "no_init")]}
    if ok_rows:
        metric_keys = ("fscore", "precision", "recall")
        summary["overall"] = aggregate(ok_rows, metric_keys)["overall"]
        summary["by_discipline"] = aggregate(ok_rows, metric_keys, "discipline")
        summary["by_weather"] = aggregate(ok_rows, metric_keys, "weather")
        by_attr = {}
        for name in AUTO_ATTRIBUTES:
            members = [r for r in ok_rows if name in r["attributes"]]
            if members:
                by_attr[name] = aggregate(members, metric_keys)["overall"]
        summary["by_attribute"] = by_attr

        for group_name in ("discipline", "weather"):
            glines = [f"{group_name},count,fscore,precision,recall"]
            for key, vals in summary[f"by_{group_name}"].items():
                glines.append(f"{key},{vals['count']},{vals['fscore']:.6f},"
                              f"{vals['precision']:.6f},{vals['recall']:.6f}")
            _write(out / f"by_{group_name}.csv", "\n".join(glines) + "\n")
        alines = ["attribute,count,fscore,precision,recall"]
        for key, vals in by_attr.items():
            alines.append(f"{key},{vals['count']},{vals['fscore']:.6f},"
                          f"{vals['precision']:.6f},{vals['recall']:.6f}")
        _write(out / "by_attribute.csv", "\n".join(alines) + "\n")
    _write(out / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")


def _status_code(rows) -> int:
    if any(r["status"] == "peer_failure" for r in rows):
        return EXIT_PEER_FAILURE
    if any(r["status"] == "failed" for r in rows):
        return EXIT_SEQUENCE_FAILURES
    return EXIT_OK


# ---------------------------------------------------------------------------
# subcommands

def cmd_evaluate(args) -> int:
    videos = load_dataset(args.dataset)
    factory = make_backend_factory(args.backend, args.seed)
    rows = run_evaluation(videos, factory, args.init, not args.exclude_occluded,
                          args.gsr_iou, args.jobs)
    out = Path(args.out)
    write_reports(out, rows, not args.exclude_occluded, args.gsr_iou)
    write_manifest(out, args)
    code = _status_code(rows)
    for r in rows:
        if r["status"] not in ("ok", "no_init"):
            print(f"FAILED {r['id']}: {r.get('error', '')}", file=sys.stderr)
    print(f"evaluated {len(videos)} sequences -> {out}")
    return code


def cmd_gsr(args) -> int:
    videos = load_dataset(args.dataset)
    factory = make_backend_factory(args.backend, args.seed)
    rows = run_evaluation(videos, factory, args.init, not args.exclude_occluded,
                          args.gsr_iou, args.jobs)
    out = Path(args.out)
    ok_rows = [r for r in rows if r["status"] == "ok"]
    lines = ["id," + ",".join(f"gsr_{w}" for w in GSR_WINDOWS)]
    for r in ok_rows:
        lines.append(r["id"] + "," + ",".join(f"{r['gsr'][w]:.6f}"
                                              for w in GSR_WINDOWS))
    _write(out / "gsr_per_sequence.csv", "\n".join(lines) + "\n")
    if ok_rows:
        curve = ["window_frames,mean_gsr"]
        for w in GSR_WINDOWS:
            mean = sum(r["gsr"][w] for r in ok_rows) / len(ok_rows)
            curve.append(f"{w},{mean:.6f}")
        _write(out / "gsr_curve.csv", "\n".join(curve) + "\n")
    write_manifest(out, args)
    return _status_code(rows)


def cmd_latency(args) -> int:
    videos = load_dataset(args.dataset)
    factory = make_backend_factory(args.backend, args.seed)
    rows = run_evaluation(videos, factory, args.init, not args.exclude_occluded,
                          args.gsr_iou, args.jobs)
    out = Path(args.out)
    for r in rows:
        if r["status"] != "ok" or not r["costs"]:
            continue
        video = next(v for v in videos if v.id == r["id"])
        profile = latency_profile(r["costs"], video.meta.fps)
        lines = ["t,delay_seconds"]
        lines += [f"{t},{d:.6f}" for t, d in enumerate(profile.delays)]
        _write(out / f"latency_{r['id']}.csv", "\n".join(lines) + "\n")
    write_manifest(out, args)
    return _status_code(rows)


def cmd_attributes(args) -> int:
    videos = load_dataset(args.dataset)
    lines = ["video_id,camera_id,start,end," + ",".join(AUTO_ATTRIBUTES)]
    for v in videos:
        for clip in segment_clips(v):
            auto = compute_auto_attributes(v.frames[clip.start:clip.end + 1])
            flags = ",".join(str(int(auto[a])) for a in AUTO_ATTRIBUTES)
            lines.append(f"{v.id},{clip.camera_id},{clip.start},{clip.end},{flags}")
    out = Path(args.out)
    _write(out / "clip_attributes.csv", "\n".join(lines) + "\n")
    write_manifest(out, args)
    return EXIT_OK


def cmd_split(args) -> int:
    videos = load_dataset(args.dataset)
    condition = SplitCondition(args.condition)
    train, test = generate_splits(videos, condition, args.train_fraction,
                                  seed=args.seed)
    out = Path(args.out)
    _write(out / "train.txt", "\n".join(train) + "\n")
    _write(out / "test.txt", "\n".join(test) + "\n")
    by_id = {v.id: v for v in videos}
    stats = {"condition": condition.value,
             "train_fraction": args.train_fraction,
             "counts": {"train": len(train), "test": len(test)},
             "frames": {"train": sum(len(by_id[i]) for i in train),
                        "test": sum(len(by_id[i]) for i in test)},
             "per_discipline": {}}
    for part, ids in (("train", train), ("test", test)):
        for vid in ids:
            d = by_id[vid].meta.discipline.value
            stats["per_discipline"].setdefault(d, {"train": 0, "test": 0})
            stats["per_discipline"][d][part] += 1
    _write(out / "stats.json", json.dumps(stats, indent=2, sort_keys=True) + "\n")
    write_manifest(out, args)
    return EXIT_OK


def cmd_simulate(args) -> int:
    out = Path(args.out)
    noise = NoiseConfig(center_sigma=args.center_sigma,
                        size_sigma=args.size_sigma,
                        false_positive_rate=args.fp_rate,
                        miss_rate=args.miss_rate,
                        score_spread=args.score_spread,
                        seed=args.seed)
    for k in range(args.videos):
        frames = args.frames
        cuts = ()
        if args.cameras > 1:
            step = frames // args.cameras
            cuts = tuple(step * i for i in range(1, args.cameras))
        occlusions = ()
        if args.occlusion_at >= 0:
            occlusions = ((args.occlusion_at, args.occlusion_len),)
        cfg = SimConfig(frames=frames, fps=args.fps, cut_points=cuts,
                        occlusions=occlusions, seed=args.seed + k,
                        video_id=f"sim{k:03d}")
        video = gen_mc_sequence(cfg)
        _write(out / "annotations" / f"{video.id}.txt",
               serialize_annotations(video))
        vid_noise = NoiseConfig(**{**noise.__dict__, "seed": args.seed + k})
        _write(out / "detections" / f"{video.id}.csv",
               serialize_detections(gen_detections(video, vid_noise)))
        oracle = OracleBackend(video, seed=args.seed + k)
        ope = run_ope(oracle, video)
        _write(out / "traces_oracle" / f"{video.id}.csv",
               serialize_trace(ope.trace))
    write_manifest(out, args)
    print(f"simulated {args.videos} videos -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing

def _add_eval_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", default=os.environ.get(DATASET_ENV),
                   help=f"dataset directory (default: ${DATASET_ENV})")
    p.add_argument("--backend", required=True,
                   help="oracle | trace:DIR | sort:DIR | "
                        "fusion:SPEC+SPEC | extern:CMD | extern-tcp:HOST:PORT")
    p.add_argument("--init", default="gt",
                   help="gt | detector:DIR[:THRESHOLD]")
    p.add_argument("--exclude-occluded", action="store_true",
                   help="score visible frames only")
    p.add_argument("--gsr-iou", type=float, default=0.5)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ltrack")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn in (("evaluate", cmd_evaluate), ("gsr", cmd_gsr),
                     ("latency", cmd_latency)):
        p = sub.add_parser(name)
        _add_eval_args(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("attributes")
    p.add_argument("--dataset", default=os.environ.get(DATASET_ENV))
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_attributes)

    p = sub.add_parser("split")
    p.add_argument("--dataset", default=os.environ.get(DATASET_ENV))
    p.add_argument("--condition", required=True,
                   choices=[c.value for c in SplitCondition])
    p.add_argument("--train-fraction", type=float, default=0.6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_split)

    p = sub.add_parser("simulate")
    p.add_argument("--videos", type=int, default=5)
    p.add_argument("--frames", type=int, default=300)
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--cameras", type=int, default=1)
    p.add_argument("--occlusion-at", type=int, default=-1)
    p.add_argument("--occlusion-len", type=int, default=15)
    p.add_argument("--center-sigma", type=float, default=0.0)
    p.add_argument("--size-sigma", type=float, default=0.0)
    p.add_argument("--fp-rate", type=float, default=0.0)
    p.add_argument("--miss-rate", type=float, default=0.0)
    p.add_argument("--score-spread", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "dataset", "set") is None:
        print("error: no dataset given (flag --dataset or env "
              f"{DATASET_ENV})", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
