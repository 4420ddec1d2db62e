"""Command line entry point: ``revolve {reconstruct,evaluate,synth,ablate}``.

Exit codes: 0 ok, 1 other library error, 2 configuration error,
3 turntable detection failed, 4 input/output error.
"""

from __future__ import annotations

import argparse
import logging
import os
import shutil
import sys
import tempfile
from contextlib import contextmanager
from dataclasses import replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import config as config_mod
from . import io
from .bench import run_ablation
from .config import RunConfig, SensorInput
from .errors import ConfigError, DetectionFailedError, InputError, RevolveError
from .mesh import export_mesh
from .pipeline import FrameResult, Reconstruction, reconstruct
from .spline import sample_equidistant
from .synth import generate_frame, true_phi

logger = logging.getLogger("revolve")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_DETECTION = 3
EXIT_IO = 4

POLYLINE_STEP = 1.0
N_EVAL_SEEDS = 10


@contextmanager
def staged_output(final, overwrite: bool = False):
    """Yield a scratch directory that replaces ``final`` only on success."""
    final = Path(final).absolute()
    if final.exists() and (not final.is_dir() or any(final.iterdir())) and not overwrite:
        raise ConfigError(f"output {final} exists and is not empty (use --overwrite)")
    final.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{final.name}.", dir=final.parent))
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    if final.exists():
        shutil.rmtree(final) if final.is_dir() else final.unlink()
    os.replace(tmp, final)


def _frame_record(res: FrameResult) -> dict:
    return {
        "frame": res.frame,
        "knots": res.best.knots.tolist(),
        "score": res.best_score,
        "mean_score": res.mean_score,
        "status": res.status,
    }


def _detection_record(rec: Reconstruction) -> list[dict]:
    out = []
    for d, m in zip(rec.detections, rec.transforms):
        out.append(
            {
                "frame": d.frame_index,
                "center": d.model.center.tolist(),
                "normal": d.model.normal.tolist(),
                "radius": d.model.radius,
                "transform": m.matrix.tolist(),
            }
        )
    return out


def write_reconstruction(out: Path, cfg: RunConfig, rec: Reconstruction) -> None:
    for sub in ("profiles", "polylines", "accumulators"):
        io.ensure_dir(out / sub)
    for res in rec.frames:
        io.write_profile_csv(out / "profiles" / io.frame_name(res.frame, ".csv"), res.best)
        io.write_profile_csv(out / "polylines" / io.frame_name(res.frame, ".csv"), sample_equidistant(res.best, POLYLINE_STEP))
        res.accumulator.save(out / "accumulators" / io.frame_name(res.frame, ".txt"))
    io.write_jsonl(out / "frames.jsonl", (_frame_record(r) for r in rec.frames))
    if rec.frames and rec.frames[0].ae_mm is not None:
        io.write_jsonl(
            out / "metrics.jsonl",
            (io.metric_record(r.frame, r.ae_mm, r.hd_mm, r.runtime_ms if cfg.record_runtime else None) for r in rec.frames),
        )
    io.write_json(out / "detection.json", _detection_record(rec))
    if rec.frames:
        export_mesh(rec.frames[-1].best, out / "mesh.obj", segments=cfg.mesh_segments)
    (out / "config.json").write_text(cfg.dumps())


def _sources(cfg: RunConfig):
    seq = io.SensorSequence([cfg.resolve(s.path) for s in cfg.sensors])
    n = len(seq) if cfg.n_frames is None else min(cfg.n_frames, len(seq))
    truth = None
    if cfg.ground_truth is not None:
        gt = io.TruthSequence(cfg.resolve(cfg.ground_truth))
        if len(gt) < n:
            raise InputError(f"ground truth has {len(gt)} frames, sensors have {n}")
        truth = gt
    return lru_cache(maxsize=None)(seq), n, truth


def _run(cfg: RunConfig, frames, n, truth, seed: int) -> Reconstruction:
    intr = [s.intrinsics for s in cfg.sensors]
    intr = None if all(i is None for i in intr) else intr
    return reconstruct(frames, n, cfg.pipeline(seed), intr, truth)


def cmd_reconstruct(cfg: RunConfig, overwrite: bool) -> int:
    cfg.validate_paths()
    frames, n, truth = _sources(cfg)
    rec = _run(cfg, frames, n, truth, cfg.seed)
    with staged_output(cfg.resolve(cfg.output), overwrite) as out:
        write_reconstruction(out, cfg, rec)
    if truth is not None:
        print(f"frames={n} mean_ae_mm={rec.mean_ae:.3f} mean_hd_mm={rec.mean_hd:.3f}")
    else:
        print(f"frames={n} final knots={rec.frames[-1].best.knots.round(3).tolist()}")
    return EXIT_OK


def cmd_evaluate(cfg: RunConfig, overwrite: bool) -> int:
    cfg.validate_paths()
    frames, n, truth = _sources(cfg)
    seeds = list(range(cfg.seed, cfg.seed + N_EVAL_SEEDS))
    recs = []
    for s in seeds:
        recs.append(_run(cfg, frames, n, truth, s))
        logger.info("seed %d: ae=%.3f hd=%.3f", s, recs[-1].mean_ae, recs[-1].mean_hd)
    ae = np.array([[f.ae_mm for f in r.frames] for r in recs])
    hd = np.array([[f.hd_mm for f in r.frames] for r in recs])
    ms = np.array([[f.runtime_ms for f in r.frames] for r in recs])
    with staged_output(cfg.resolve(cfg.output), overwrite) as out:
        for s, r in zip(seeds, recs):
            d = io.ensure_dir(out / f"seed_{s}")
            write_reconstruction(d, replace(cfg, seed=s), r)
        io.write_jsonl(
            out / "metrics.jsonl",
            (
                io.metric_record(t, ae[:, t].mean(), hd[:, t].mean(), ms[:, t].mean() if cfg.record_runtime else None)
                for t in range(n)
            ),
        )
        summary = {
            "seeds": seeds,
            "ae_mm": float(ae.mean()),
            "hd_mm": float(hd.mean()),
            "seed_ae_mm": ae.mean(axis=1).tolist(),
            "seed_hd_mm": hd.mean(axis=1).tolist(),
        }
        io.write_json(out / "summary.json", summary)
    print(f"seeds={seeds[0]}..{seeds[-1]} mean_ae_mm={summary['ae_mm']:.3f} mean_hd_mm={summary['hd_mm']:.3f}")
    return EXIT_OK


def cmd_synth(cfg: RunConfig, overwrite: bool) -> int:
    spec = cfg.scene_spec()
    with staged_output(cfg.resolve(cfg.output), overwrite) as out:
        sensor_dirs = [io.ensure_dir(out / f"sensor{i}") for i in range(len(spec.sensors))]
        truth_dir = io.ensure_dir(out / "truth")
        for t in range(spec.n_frames):
            fr = generate_frame(spec, t, cfg.seed)
            for d, cloud in zip(sensor_dirs, fr.clouds):
                io.write_ply(d / io.frame_name(t, ".ply"), cloud)
            io.write_profile_csv(truth_dir / io.frame_name(t, ".csv"), fr.profile)
        io.write_json(out / "scene.json", spec.to_dict())
        run = RunConfig(
            mode="reconstruct",
            sensors=tuple(
                SensorInput(f"sensor{i}", true_phi(s, spec.radius), s.intrinsics) for i, s in enumerate(spec.sensors)
            ),
            ground_truth="truth",
            output="reconstruction",
            seed=cfg.seed,
            radius=spec.radius,
            cell=cfg.cell,
            h_max=cfg.h_max,
            enhanced=cfg.enhanced,
            filter=cfg.filter,
            plane=cfg.plane,
        )
        (out / "config.json").write_text(run.dumps())
    print(f"wrote {spec.n_frames} frames x {len(spec.sensors)} sensors to {cfg.resolve(cfg.output)}")
    return EXIT_OK


def cmd_ablate(cfg: RunConfig, overwrite: bool) -> int:
    spec = cfg.scene_spec()
    ab = cfg.ablation
    seeds = range(cfg.seed, cfg.seed + ab.seeds)
    report = run_ablation(ab.protocol, spec, seeds, ab.values, replace(cfg.pipeline(), radius=spec.radius))
    with staged_output(cfg.resolve(cfg.output), overwrite) as out:
        (out / "ablation.txt").write_text(report.to_table())
        io.write_json(out / "ablation.json", {"protocol": ab.protocol, "seeds": list(seeds), "rows": report.to_records()})
    print(report.to_table(), end="")
    return EXIT_OK


COMMANDS = {"reconstruct": cmd_reconstruct, "evaluate": cmd_evaluate, "synth": cmd_synth, "ablate": cmd_ablate}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="revolve", description="Profile reconstruction of revolving objects from depth streams.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required: bool):
        sp.add_argument("config", nargs=None if config_required else "?", help="JSON run configuration")
        sp.add_argument("-o", "--output", help="output directory (overrides config)")
        sp.add_argument("--frames", type=int, dest="n_frames", help="number of frames to use")
        sp.add_argument("--cell", type=float, help="accumulator cell size in mm")
        sp.add_argument("--radius", type=float, help="turntable radius in mm")
        sp.add_argument("--particles", type=int, help="particle count")
        sp.add_argument("--enhanced", dest="enhanced", action="store_true", default=None)
        sp.add_argument("--no-enhanced", dest="enhanced", action="store_false")
        sp.add_argument("--record-runtime", action="store_true", default=None,
                        help="write measured runtimes (outputs are then no longer byte-reproducible)")
        sp.add_argument("--overwrite", action="store_true", help="replace a non-empty output directory")

    sp = sub.add_parser("reconstruct", help="run the pipeline on recorded PLY sequences")
    common(sp, True)
    sp.add_argument("--seed", type=int)
    sp = sub.add_parser("evaluate", help="10-seed evaluation against ground truth")
    common(sp, True)
    sp.add_argument("--seed", type=int, required=True, help="first of the 10 seeds")
    sp = sub.add_parser("synth", help="write a synthetic scene to disk")
    common(sp, False)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--scene", choices=config_mod.SCENE_PRESETS)
    sp = sub.add_parser("ablate", help="run an ablation protocol on a synthetic scene")
    common(sp, False)
    sp.add_argument("--seed", type=int, help="first seed")
    sp.add_argument("--scene", choices=config_mod.SCENE_PRESETS)
    sp.add_argument("--protocol", choices=config_mod.PROTOCOLS)
    sp.add_argument("--seeds", type=int, help="number of seeds")
    return p


def resolve_config(args) -> RunConfig:
    if args.config:
        cfg = config_mod.load(args.config)
    else:
        cfg = RunConfig(mode=args.command)
    cfg = replace(cfg, mode=args.command)
    over = {
        "output": args.output,
        "n_frames": args.n_frames,
        "cell": args.cell,
        "radius": args.radius,
        "enhanced": args.enhanced,
        "record_runtime": args.record_runtime,
        "seed": args.seed,
        "scene": getattr(args, "scene", None),
    }
    if args.output is not None:
        # Command-line paths are relative to the working directory.
        over["output"] = str(Path(args.output).absolute())
    if args.particles is not None:
        over["filter"] = replace(cfg.filter, n_particles=args.particles)
    if getattr(args, "protocol", None) or getattr(args, "seeds", None):
        ab = cfg.ablation
        over["ablation"] = replace(ab, protocol=args.protocol or ab.protocol, seeds=args.seeds or ab.seeds)
    try:
        return cfg.with_overrides(**over)
    except (ValueError, TypeError) as e:
        raise ConfigError(str(e)) from e


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg, args.overwrite)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DetectionFailedError as e:
        print(f"turntable detection failed: {e}", file=sys.stderr)
        return EXIT_DETECTION
    except (InputError, OSError) as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO
    except RevolveError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
