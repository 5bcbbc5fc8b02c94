"""Command-line front door: runs the library operations and writes reports.

Every run that produces files also writes a manifest (full configuration,
code version, seed) alongside them, so any reported number can be reproduced
from a single command line.  Exit codes: 0 success, 2 validation error,
1 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from math import pi, sqrt
from pathlib import Path

import numpy as np

from . import __version__
from . import chaos, correlations, kacrice, lattice, nodal, surface, wave


def _parse_surface(spec: str, nodes_per_edge: int = 48) -> surface.Surface:
    """Surface spec mini-language: sphere:R | hemisphere:R | cap:R:ANGLE."""
    parts = spec.split(":")
    kind = parts[0]
    if kind in ("sphere", "hemisphere"):
        if len(parts) != 2:
            raise ValueError(f"bad surface spec {spec!r}")
        return surface.builtin(kind, float(parts[1]), nodes_per_edge=nodes_per_edge)
    if kind == "cap":
        if len(parts) != 3:
            raise ValueError(f"bad surface spec {spec!r}")
        return surface.builtin("cap", float(parts[1]), angle=float(parts[2]),
                               nodes_per_edge=nodes_per_edge)
    raise ValueError(f"unknown surface kind {kind!r}")


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, default=float)
    sys.stdout.write("\n")


def _write_manifest(outdir: Path, config: dict) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = {"version": __version__, "config": config}
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def _cmd_lattice(args) -> int:
    m = args.m
    if not lattice.representable(m):
        _emit({"m": m, "N": 0, "representable": False})
        return 0
    freqs = lattice.enumerate_frequencies(m, cache_dir=args.cache_dir)
    moments = lattice.spectral_moments(freqs, max_degree=4)
    _emit({
        "m": m, "N": freqs.n, "representable": True,
        "admissible": lattice.admissible(m),
        "half": len(freqs.half),
        "psi": float(moments["psi"]), "phi": float(moments["phi"]),
        "moments": {"".join(map(str, k)): v for k, v in moments["moments"].items()
                    if sum(k) <= 4 and v != 0.0},
    })
    return 0


def _cmd_corr(args) -> int:
    freqs = lattice.enumerate_frequencies(args.m, cache_dir=args.cache_dir)
    if freqs.n == 0:
        raise ValueError(f"m={args.m} is not a sum of three squares")
    rep = correlations.report(freqs, full=not args.fast)
    _emit(rep.to_dict())
    return 0


_SCAN_COLUMNS = ["m", "N", "c4", "x4", "d4", "c6", "s2", "s4", "s6",
                 "n2s2", "n2s4", "n2s6"]


def _cmd_scan(args) -> int:
    reports = correlations.scan_well_separated(args.m_from, args.m_to,
                                               budget=args.budget,
                                               cache_dir=args.cache_dir)
    outdir = Path(args.out)
    _write_manifest(outdir, {"command": "scan", "from": args.m_from,
                             "to": args.m_to, "budget": args.budget})
    path = outdir / "scan.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_SCAN_COLUMNS)
        for r in reports:
            d = r.to_dict()
            d["N"] = r.n
            writer.writerow(["" if d.get(c) is None else d.get(c) for c in _SCAN_COLUMNS])
    best = reports[0] if reports else None
    _emit({"rows": len(reports), "csv": str(path),
           "best_m": best.m if best else None,
           "best_rank_key": best.rank_key if best else None})
    return 0


def _cmd_surface(args) -> int:
    surf = _parse_surface_args(args)
    a = surface.area(surf)
    i2 = surface.interaction_integral(surf, 2)
    i4 = surface.interaction_integral(surf, 4)
    static, report = surface.is_static(surf, tol=args.tol)
    _emit({
        "label": surf.label, "A": a, "I2": i2, "I4": i4,
        "H_uniform": report["values"]["uniform"],
        "A2_over_9": report["target"],
        "static": static,
    })
    return 0


def _parse_surface_args(args) -> surface.Surface:
    angle = getattr(args, "angle", None)
    if args.kind == "cap" and angle is None:
        raise ValueError("cap needs --angle")
    return surface.builtin(args.kind, args.radius, angle=angle,
                           nodes_per_edge=args.nodes)


def _cmd_simulate(args) -> int:
    freqs = lattice.enumerate_frequencies(args.m, cache_dir=args.cache_dir)
    surf = _parse_surface(args.surface)
    resolution = None
    if args.resolution_multiplier != 1.0:
        resolution = int(np.ceil(args.resolution_multiplier
                                 * nodal.minimum_resolution(args.m)))
    stats = nodal.monte_carlo(freqs, surf, samples=args.samples,
                              resolution=resolution, seed=args.seed,
                              with_area=args.with_area, workers=args.threads)
    outdir = Path(args.out)
    _write_manifest(outdir, {
        "command": "simulate", "m": args.m, "surface": args.surface,
        "samples": args.samples, "seed": args.seed,
        "resolution_multiplier": args.resolution_multiplier,
        "with_area": args.with_area,
    })
    with open(outdir / "lengths.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "length"] + (["area"] if args.with_area else []))
        for i, val in enumerate(stats.lengths):
            row = [i, repr(float(val))]
            if args.with_area:
                row.append(repr(float(stats.areas[i])))
            writer.writerow(row)
    predicted = pi * sqrt(args.m / 3.0) * surface.area(surf)
    summary = {
        "m": args.m, "samples": args.samples, "mean": stats.mean,
        "variance": stats.variance, "predicted_mean": predicted,
        "ratio_mean": stats.mean / predicted,
    }
    if args.with_area:
        summary["length_area_correlation"] = stats.length_area_correlation()
    (outdir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    _emit(summary)
    return 0


def _cmd_chaos(args) -> int:
    freqs = lattice.enumerate_frequencies(args.m, cache_dir=args.cache_dir)
    surf = _parse_surface(args.surface)
    outdir = Path(args.out)
    _write_manifest(outdir, {"command": "chaos", "m": args.m,
                             "surface": args.surface, "samples": args.samples,
                             "seed": args.seed})
    rows = []
    for i in range(args.samples):
        wv = wave.sample(freqs, nodal.sample_seed(args.seed, i))
        l0 = chaos.chaos_projection(wv, surf, 0)
        l2 = chaos.chaos_projection(wv, surf, 1)
        l4 = chaos.chaos_projection(wv, surf, 2)
        length = nodal.nodal_curve_length(wv, surf)
        rows.append([i, length, l0, l2, l4])
    with open(outdir / "chaos.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "length", "l0", "l2", "l4"])
        writer.writerows(rows)
    arr = np.array([r[1:] for r in rows])
    _emit({
        "m": args.m, "samples": args.samples,
        "var_length": float(np.var(arr[:, 0], ddof=1)),
        "var_l2": float(np.var(arr[:, 2], ddof=1)),
        "var_l4": float(np.var(arr[:, 3], ddof=1)),
        "csv": str(outdir / "chaos.csv"),
    })
    return 0


def _cmd_limit_sample(args) -> int:
    surf = _parse_surface(args.surface)
    vals = chaos.sample_limit(surf, args.n, args.seed)
    outdir = Path(args.out)
    _write_manifest(outdir, {"command": "limit-sample", "surface": args.surface,
                             "n": args.n, "seed": args.seed})
    with open(outdir / "limit.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "value"])
        for i, v in enumerate(vals):
            writer.writerow([i, repr(float(v))])
    _emit({"n": args.n, "mean": float(vals.mean()), "var": float(vals.var()),
           "csv": str(outdir / "limit.csv")})
    return 0


def _cmd_kacrice(args) -> int:
    freqs = lattice.enumerate_frequencies(args.m, cache_dir=args.cache_dir)
    surf = _parse_surface(args.surface)
    if args.op == "2pt":
        i, j = args.node_pair
        val = kacrice.two_point_exact(freqs, surf, surf.points[i], surf.points[j],
                                      surf.normals[i], surf.normals[j],
                                      mc_budget=args.budget, seed=args.seed)
        _emit({"exact": val.exact, "stderr": val.stderr, "taylor": val.taylor,
               "r": val.r})
        return 0
    if args.op == "second-moment":
        val = kacrice.second_moment(freqs, surf, nodes_per_edge=args.nodes,
                                    mc_budget=args.budget, seed=args.seed)
        mean = pi * sqrt(args.m / 3.0) * surface.area(surf)
        _emit({"second_moment": val, "mean_squared": mean ** 2,
               "variance": val - mean ** 2})
        return 0
    if args.op.startswith("moment:"):
        kind = args.op.split(":", 1)[1]
        out = kacrice.moment_integral(freqs, surf, kind, nodes_per_edge=args.nodes)
        _emit(out)
        return 0
    raise ValueError(f"unknown op {args.op!r}")


def _cmd_report(args) -> int:
    rows = []
    for d in args.rundirs:
        d = Path(d)
        manifest = d / "manifest.json"
        if not manifest.exists():
            print(f"warning: {d} has no manifest, skipping", file=sys.stderr)
            continue
        cfg = json.loads(manifest.read_text()).get("config", {})
        if cfg.get("command") != "simulate":
            print(f"warning: {d} is not a simulate run, skipping", file=sys.stderr)
            continue
        lengths = []
        with open(d / "lengths.csv", newline="") as fh:
            for rec in csv.DictReader(fh):
                lengths.append(float(rec["length"]))
        lengths = np.array(lengths)
        m = cfg["m"]
        surf = _parse_surface(cfg["surface"])
        freqs = lattice.enumerate_frequencies(m, cache_dir=args.cache_dir)
        predicted_mean = pi * sqrt(m / 3.0) * surface.area(surf)
        static, _ = surface.is_static(surf, tol=1e-4)
        regime = "static" if static else "generic"
        predicted_var = chaos.predict_variance(freqs, surf, regime)
        mean = float(lengths.mean())
        var = float(lengths.var(ddof=1))
        rows.append({
            "m": m, "surface": cfg["surface"], "samples": len(lengths),
            "mean": mean, "predicted_mean": predicted_mean,
            "ratio_mean": mean / predicted_mean,
            "variance": var, "regime": regime, "predicted_var": predicted_var,
            "ratio_var": var / predicted_var,
        })
    rows.sort(key=lambda r: (r["m"], r["surface"]))
    writer = csv.writer(sys.stdout)
    header = ["m", "surface", "samples", "mean", "predicted_mean", "ratio_mean",
              "variance", "predicted_var", "ratio_var", "regime"]
    writer.writerow(header)
    for r in rows:
        writer.writerow([r[h] for h in header])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arwaves",
        description="simulation lab for nodal intersections of random waves on the 3-torus",
    )
    parser.add_argument("--cache-dir", default=None,
                        help="cache directory (default: $ARWAVES_CACHE_DIR)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lattice", help="frequency set summary for one m")
    p.add_argument("m", type=int)
    p.set_defaults(func=_cmd_lattice)

    p = sub.add_parser("corr", help="correlation report for one m")
    p.add_argument("m", type=int)
    p.add_argument("--fast", action="store_true", help="skip S_4, S_6, |C(6)|")
    p.set_defaults(func=_cmd_corr)

    p = sub.add_parser("scan", help="rank admissible m by separation sums")
    p.add_argument("--from", dest="m_from", type=int, required=True)
    p.add_argument("--to", dest="m_to", type=int, required=True)
    p.add_argument("--budget", type=int, default=16)
    p.add_argument("--out", default="runs/scan")
    p.set_defaults(func=_cmd_scan)

    p = sub.add_parser("surface", help="geometric functionals of a built-in surface")
    p.add_argument("--kind", required=True, choices=["sphere", "hemisphere", "cap"])
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--angle", type=float, default=None)
    p.add_argument("--nodes", type=int, default=48)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("report", nargs="?", default="report")
    p.set_defaults(func=_cmd_surface)

    p = sub.add_parser("simulate", help="Monte Carlo nodal intersection lengths")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--surface", required=True, help="sphere:R | hemisphere:R | cap:R:ANGLE")
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resolution-multiplier", type=float, default=1.0)
    p.add_argument("--with-area", action="store_true")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default="runs/simulate")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("chaos", help="per-sample chaos components and length")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--surface", required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="runs/chaos")
    p.set_defaults(func=_cmd_chaos)

    p = sub.add_parser("limit-sample", help="samples of the static-surface limit law")
    p.add_argument("--surface", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="runs/limit")
    p.set_defaults(func=_cmd_limit_sample)

    p = sub.add_parser("kacrice", help="two-point function operations")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--surface", required=True)
    p.add_argument("--op", required=True,
                   help="2pt | second-moment | moment:{r2,r4,trX,trYY}")
    p.add_argument("--nodes", type=int, default=10)
    p.add_argument("--budget", type=int, default=4096)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--node-pair", type=int, nargs=2, default=(0, 50))
    p.set_defaults(func=_cmd_kacrice)

    p = sub.add_parser("report", help="consolidated comparison table for runs")
    p.add_argument("rundirs", nargs="*")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
