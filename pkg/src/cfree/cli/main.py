"""``cfree`` command line: grow, verify, plot and bench."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .. import __version__
from .._parallel import worker_count
from ..collision import fraction_in_collision
from ..geometry import HPolytope
from ..iris import ACCEPTED, CANDIDATE_GENERATORS, IrisOptions, derive_seed, iris_grow
from ..mvie import ellipsoid_volume_proxy, inscribed_ellipsoid
from ..sampling import SamplerConfig, hit_and_run_batch
from .files import FileFormatError, RegionFile, builtin_scenes, load_scene, region_from_report
from .plot import RESOLUTION, render_svg

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_SEED = 0, 1, 2, 3
ORACLE_SAMPLES = 100_000

log = logging.getLogger("cfree")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_iris_flags(p: argparse.ArgumentParser) -> None:
    d = IrisOptions()
    g = p.add_argument_group("region growing")
    g.add_argument("--epsilon", type=float, default=d.epsilon, help="admissible collision fraction")
    g.add_argument("--delta", type=float, default=d.delta, help="admissible uncertainty")
    g.add_argument("--tau", type=float, default=d.tau)
    g.add_argument("--stepback", type=float, default=d.stepback)
    g.add_argument("--particles", type=int, default=d.particles)
    g.add_argument("--bisections", type=int, default=d.bisections)
    g.add_argument("--max-faces", type=int, default=d.max_faces_per_iter)
    g.add_argument("--max-inner", type=int, default=d.max_inner_iterations)
    g.add_argument("--max-outer", type=int, default=d.max_outer_iterations)
    g.add_argument("--term-threshold", type=float, default=d.termination_threshold)
    g.add_argument("--r-start", type=float, default=d.r_start)
    g.add_argument("--generator", choices=sorted(CANDIDATE_GENERATORS), default=d.candidate_generator)
    g.add_argument("--mixing-steps", type=int, default=None, help="hit-and-run steps per sample (default 50*dim)")
    g.add_argument("--chains", type=int, default=d.sampler.chains)
    g.add_argument("--rng-seed", type=int, default=0)


def _options(args) -> IrisOptions:
    return IrisOptions(
        epsilon=args.epsilon, delta=args.delta, tau=args.tau, stepback=args.stepback,
        particles=args.particles, bisections=args.bisections, max_faces_per_iter=args.max_faces,
        max_inner_iterations=args.max_inner, max_outer_iterations=args.max_outer,
        termination_threshold=args.term_threshold, r_start=args.r_start,
        candidate_generator=args.generator,
        sampler=SamplerConfig(mixing_steps=args.mixing_steps, chains=args.chains),
        rng_seed=args.rng_seed,
    )


def _check_seeds(scene) -> tuple[int, str] | None:
    outside = scene.seeds_outside()
    if outside:
        return EXIT_USAGE, f"seed {outside[0]} is not strictly inside the domain"
    colliding = scene.colliding_seeds()
    if colliding:
        return EXIT_SEED, f"seed {colliding[0]} is in collision"
    return None


def cmd_grow(args) -> int:
    try:
        scene = load_scene(args.scene)
        opts = _options(args)
    except (FileFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not scene.seeds:
        print("error: scene has no seeds", file=sys.stderr)
        return EXIT_USAGE
    bad = _check_seeds(scene)
    if bad:
        print(f"error: {bad[1]}", file=sys.stderr)
        return bad[0]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    status = EXIT_OK
    for idx, seed in enumerate(scene.seeds):
        try:
            report = iris_grow(scene.domain, seed, scene.world, opts, workers=args.workers)
        except Exception as exc:  # surfaced as a runtime failure
            print(f"error: seed {idx}: {exc}", file=sys.stderr)
            return EXIT_FAIL
        region = region_from_report(report, scene, idx, opts.to_dict(), opts.rng_seed, __version__)
        path = out / f"region_{idx:03d}.json"
        region.save(path)
        print(f"seed {idx}: {report.termination_reason} ({report.stop_condition}), "
              f"{report.polytope.num_faces} faces, {report.outer_iterations} outer iterations -> {path}")
        if report.termination_reason != ACCEPTED:
            status = EXIT_FAIL
    return status


def verify_region(region: RegionFile, scene, samples: int, rng_seed: int = 0, workers=None) -> dict:
    P = region.polytope
    frac = fraction_in_collision(scene.world, P, samples, SamplerConfig(chains=1000, rng_seed=rng_seed), workers)
    e = region.ellipsoid_obj()
    volume = ellipsoid_volume_proxy(e) if e is not None else inscribed_ellipsoid(P).log_volume_proxy
    return {"estimate": frac.estimate, "half_width": frac.half_width, "samples": frac.n,
            "volume_proxy": volume, "faces": P.num_faces}


def cmd_verify(args) -> int:
    try:
        region = RegionFile.load(args.region)
        scene = load_scene(args.scene)
    except FileFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if region.dim != scene.dim or len(region.A[0]) != scene.dim:
        print(f"error: region is {region.dim}-d but scene is {scene.dim}-d", file=sys.stderr)
        return EXIT_USAGE
    epsilon = args.epsilon if args.epsilon is not None else region.options.get("epsilon", IrisOptions().epsilon)
    try:
        rec = verify_region(region, scene, args.samples, args.rng_seed, args.workers)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    rec["epsilon"] = epsilon
    rec["passed"] = rec["estimate"] - rec["half_width"] <= epsilon
    if args.json:
        print(json.dumps(rec, sort_keys=True))
    else:
        print(f"collision fraction {rec['estimate']:.6f} +/- {rec['half_width']:.6f} (n={rec['samples']}, "
              f"epsilon={epsilon})")
        print(f"volume proxy {rec['volume_proxy']:.6f}, faces {rec['faces']}")
        print("PASS" if rec["passed"] else "FAIL")
    return EXIT_OK if rec["passed"] else EXIT_FAIL


def cmd_plot(args) -> int:
    try:
        scene = load_scene(args.scene)
        regions = [RegionFile.load(p) for p in args.regions]
    except FileFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if scene.dim != 2 or any(r.dim != 2 for r in regions):
        print("error: only 2D configuration spaces can be plotted", file=sys.stderr)
        return EXIT_USAGE
    layers = [(r.polytope, r.ellipsoid_obj(), np.array(r.seed)) for r in regions]
    samples = None
    if args.samples and regions:
        e = layers[0][1]
        cfg = SamplerConfig(rng_seed=args.rng_seed, start=e.c if e is not None else None)
        samples = hit_and_run_batch(layers[0][0], args.samples, cfg, workers=args.workers)
    svg = render_svg(scene.world, scene.domain, layers, args.resolution, samples, args.workers)
    Path(args.out).write_text(svg)
    print(f"wrote {args.out}")
    return EXIT_OK


def _bench_trial(job: dict) -> dict:
    scene = load_scene(job["scene_path"])
    opts = IrisOptions.from_dict(job["options"])
    seed = scene.seeds[job["seed_index"]]
    t0 = time.perf_counter()
    report = iris_grow(scene.domain, seed, scene.world, opts, workers=1)
    runtime = time.perf_counter() - t0
    frac = fraction_in_collision(scene.world, report.polytope, job["samples"],
                                 SamplerConfig(chains=1000, rng_seed=derive_seed(opts.rng_seed, 0xC0FFEE)), workers=1)
    e = report.final_ellipsoid
    return {
        "scene": scene.name, "seed_index": job["seed_index"], "trial": job["trial"],
        "rng_seed": opts.rng_seed, "termination_reason": report.termination_reason,
        "runtime": runtime, "faces": report.polytope.num_faces,
        "volume_proxy": ellipsoid_volume_proxy(e) if e is not None else None,
        "collision_fraction": frac.estimate, "violation": frac.estimate > opts.epsilon,
    }


def run_bench(scene_paths, opts: IrisOptions, trials: int, samples: int = ORACLE_SAMPLES,
              workers: int | None = None) -> tuple[list[dict], list[dict]]:
    """Run every (scene, seed, trial) and return (per-trial records, per-seed summary rows)."""
    jobs = []
    for si, path in enumerate(scene_paths):
        scene = load_scene(path)
        for idx in range(len(scene.seeds)):
            for t in range(trials):
                o = IrisOptions.from_dict({**opts.to_dict(), "rng_seed": derive_seed(opts.rng_seed, si, idx, t)})
                jobs.append({"scene_path": str(path), "seed_index": idx, "trial": t,
                             "options": o.to_dict(), "samples": samples})
    n = worker_count(workers)
    if n > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            records = list(pool.map(_bench_trial, jobs))
    else:
        records = [_bench_trial(j) for j in jobs]
    rows = []
    keys = sorted({(r["scene"], r["seed_index"]) for r in records})
    for scene_name, idx in keys:
        rs = [r for r in records if r["scene"] == scene_name and r["seed_index"] == idx]
        vol = [r["volume_proxy"] for r in rs if r["volume_proxy"] is not None]
        rows.append({
            "scene": scene_name, "seed_index": idx, "trials": len(rs),
            "accepted": sum(r["termination_reason"] == ACCEPTED for r in rs),
            "runtime_mean": float(np.mean([r["runtime"] for r in rs])),
            "runtime_std": float(np.std([r["runtime"] for r in rs])),
            "faces_mean": float(np.mean([r["faces"] for r in rs])),
            "faces_std": float(np.std([r["faces"] for r in rs])),
            "volume_mean": float(np.mean(vol)) if vol else None,
            "volume_std": float(np.std(vol)) if vol else None,
            "fraction_mean": float(np.mean([r["collision_fraction"] for r in rs])),
            "violations": sum(r["violation"] for r in rs),
            "violation_rate": sum(r["violation"] for r in rs) / len(rs),
        })
    return records, rows


def _format_table(rows: list[dict]) -> str:
    head = f"{'scene':<14}{'seed':>5}{'trials':>7}{'accept':>7}{'time[s]':>14}{'faces':>13}{'log-vol':>17}{'frac':>10}{'viol.rate':>10}"
    lines = [head, "-" * len(head)]
    for r in rows:
        vol = "n/a" if r["volume_mean"] is None else f"{r['volume_mean']:.3f}±{r['volume_std']:.3f}"
        lines.append(f"{r['scene']:<14}{r['seed_index']:>5}{r['trials']:>7}{r['accepted']:>7}"
                     f"{r['runtime_mean']:>8.3f}±{r['runtime_std']:<5.3f}{r['faces_mean']:>7.1f}±{r['faces_std']:<5.1f}"
                     f"{vol:>17}{r['fraction_mean']:>10.5f}{r['violation_rate']:>10.3f}")
    return "\n".join(lines)


def cmd_bench(args) -> int:
    d = Path(args.scene_dir)
    paths = sorted(d.glob("*.json")) if d.is_dir() else []
    if not paths:
        print(f"error: no scene files in {args.scene_dir}", file=sys.stderr)
        return EXIT_USAGE
    try:
        opts = _options(args)
        for p in paths:
            load_scene(p)
    except (FileFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    records, rows = run_bench(paths, opts, args.trials, args.samples, args.workers)
    print(_format_table(rows))
    if args.json:
        Path(args.json).write_text(json.dumps({"options": opts.to_dict(), "rows": rows, "trials": records},
                                              indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cfree", description="Grow and audit probabilistically collision-free regions.")
    parser.add_argument("--version", action="version", version=f"cfree {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("grow", help="grow one region per scene seed")
    p.add_argument("scene", help=f"scene JSON path or built-in name ({', '.join(builtin_scenes())})")
    _add_iris_flags(p)
    p.add_argument("--out", default="regions", help="output directory")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_grow)

    p = sub.add_parser("verify", help="estimate a region's collision fraction")
    p.add_argument("region")
    p.add_argument("scene")
    p.add_argument("--samples", type=int, default=ORACLE_SAMPLES)
    p.add_argument("--epsilon", type=float, default=None, help="override the epsilon recorded in the region")
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="print a JSON record")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("plot", help="render 2D regions to SVG")
    p.add_argument("regions", nargs="*")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True, help="output SVG path")
    p.add_argument("--resolution", type=int, default=RESOLUTION)
    p.add_argument("--samples", type=int, default=0, help="overlay hit-and-run samples of the first region")
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("bench", help="repeated trials with oracle verification")
    p.add_argument("scene_dir")
    _add_iris_flags(p)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--samples", type=int, default=ORACLE_SAMPLES, help="oracle samples per trial")
    p.add_argument("--json", default=None, help="write machine-readable results here")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    return args.func(args)
