"""Command-line interface: ``alphait <subcommand> [options]``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import pipeline as pl
from .geostat import cokrige, empirical_cross_variogram, fit_default_lmc
from .io import fmt, load_field, read_matrix, write_field, write_table
from .mle import estimate_alpha
from .simulate import ScenarioConfig, inject_zeros, preset_names, simulate_field
from .transforms import coordinates, inverse_coordinates


def _common(p: argparse.ArgumentParser, inputs: bool = True):
    p.add_argument("--config", help="flat key = value experiment file")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out-dir")
    p.add_argument("--alpha", help="alpha value, or 'ml' to estimate it")
    p.add_argument("--alpha-grid", help="e.g. '0,0.2,ml' or '0:1:0.1'")
    p.add_argument("--zero-substitute", action="store_true", default=None,
                   help="use alpha=0.01 wherever alpha=0 meets zero parts")
    if inputs:
        p.add_argument("--input", help="CSV with columns x, y, part1..partD")


def _config(args, mode: str) -> pl.ExperimentConfig:
    over = {
        "mode": mode, "seed": args.seed, "workers": args.workers, "out_dir": args.out_dir,
        "alpha": args.alpha, "alpha_grid": args.alpha_grid, "zero_substitute": args.zero_substitute,
    }
    for key in ("replicates", "train_size", "test_size", "scenario", "input", "grid_size", "metric_alphas"):
        val = getattr(args, key, None)
        if val is not None:
            over[key] = val
    if args.config:
        return pl.ExperimentConfig.from_file(args.config, **over)
    return pl.ExperimentConfig.from_mapping(over)


def _out(config: pl.ExperimentConfig, name: str) -> Path:
    d = Path(config.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d / name


def _field(config: pl.ExperimentConfig):
    if not config.input:
        raise pl.ConfigError("an --input field CSV is required")
    return load_field(config.input)


def _alpha(config, fld) -> float:
    if config.alpha == "ml":
        return estimate_alpha(fld.parts).alpha_hat
    return pl._resolve_alpha(config.alpha, not fld.strictly_positive, config.zero_substitute)


def cmd_transform(args):
    cfg = _config(args, "estimate")
    fld = _field(cfg)
    a = _alpha(cfg, fld)
    Z = coordinates(fld.parts, a)
    path = _out(cfg, "coordinates.csv")
    write_table(path, ["x", "y", *[f"z{i + 1}" for i in range(Z.shape[1])]],
                np.column_stack([fld.locations, Z]))
    print(f"alpha = {fmt(a)}; wrote {path}")


def cmd_inverse(args):
    cfg = _config(args, "estimate")
    if cfg.alpha == "ml":
        raise pl.ConfigError("inverse needs a numeric --alpha")
    header, M = read_matrix(args.coords, min_cols=3)
    a = float(cfg.alpha)
    res = inverse_coordinates(M[:, 2:], a)
    X = np.atleast_2d(res.composition)
    r = np.atleast_1d(res.residual)
    path = _out(cfg, "compositions.csv")
    names = [f"part{i + 1}" for i in range(X.shape[1])]
    write_table(path, ["x", "y", *names, "residual", "out_of_codomain"],
                [[*m[:2], *x, v, int(v > pl.FLAG_RESIDUAL)] for m, x, v in zip(M, X, r)])
    print(f"{int((r > pl.FLAG_RESIDUAL).sum())} of {len(r)} points outside the codomain; wrote {path}")


def cmd_estimate(args):
    cfg = _config(args, "estimate")
    fld = _field(cfg)
    est = estimate_alpha(fld.parts)
    path = _out(cfg, "alpha_profile.csv")
    write_table(path, ["alpha", "loglik"], est.profile)
    print(f"alpha_hat = {fmt(est.alpha_hat)}")
    print(f"loglik = {fmt(est.loglik_at_hat)}")
    for pat, n in est.pattern_counts.items():
        note = " (skipped: too few members)" if pat in est.skipped_patterns else ""
        print(f"pattern {pat}: {n}{note}")
    if est.n_excluded:
        print(f"excluded (single positive part): {est.n_excluded}")
    print(f"census (zeros: count) = {fld.zero_census()}")


def _variogram(cfg, fld):
    a = _alpha(cfg, fld)
    Z = coordinates(fld.parts, a)
    return a, Z, empirical_cross_variogram(fld.locations, Z, bins=cfg.n_bins)


def cmd_variogram(args):
    cfg = _config(args, "estimate")
    fld = _field(cfg)
    a, Z, ev = _variogram(cfg, fld)
    p = Z.shape[1]
    iu = np.triu_indices(p)
    header = ["lag", "pairs", "sparse"] + [f"gamma_{i + 1}{j + 1}" for i, j in zip(*iu)]
    rows = [[h, int(c), int(s), *g[iu]] for h, c, s, g in zip(ev.lags, ev.counts, ev.sparse, ev.gamma)]
    path = _out(cfg, "variogram.csv")
    write_table(path, header, rows)
    print(f"alpha = {fmt(a)}; wrote {path}")


def cmd_fit(args):
    cfg = _config(args, "estimate")
    fld = _field(cfg)
    a, _, ev = _variogram(cfg, fld)
    model = fit_default_lmc(ev)
    lines = [f"alpha = {fmt(a)}", f"wss = {fmt(model.wss)}"]
    for fn, B in model.structures:
        lines.append(f"{fn}: " + "; ".join(",".join(fmt(v) for v in row) for row in B))
    path = _out(cfg, "model.txt")
    path.write_text("\n".join(lines) + "\n")
    print("\n".join(lines))


def cmd_krige(args):
    cfg = _config(args, "krige-map")
    fld = _field(cfg)
    _, T = read_matrix(args.targets, min_cols=2)
    a = _alpha(cfg, fld)
    Z = coordinates(fld.parts, a)
    model = fit_default_lmc(empirical_cross_variogram(fld.locations, Z, bins=cfg.n_bins))
    kr = cokrige(model, fld.locations, Z, T[:, :2])
    inv = inverse_coordinates(kr.predictions, a)
    X, r = np.atleast_2d(inv.composition), np.atleast_1d(inv.residual)
    p = Z.shape[1]
    header = ["x", "y", *fld.part_names, *[f"var_z{i + 1}" for i in range(p)], "residual", "out_of_codomain"]
    rows = [[*t[:2], *x, *v, res, int(res > pl.FLAG_RESIDUAL)] for t, x, v, res in zip(T, X, kr.variances, r)]
    path = _out(cfg, "kriged.csv")
    write_table(path, header, rows)
    print(f"alpha = {fmt(a)}; wrote {path}")


def cmd_simulate(args):
    cfg = _config(args, "simulation-study")
    sc = ScenarioConfig.preset(cfg.scenario, n_points=args.n_points, seed=cfg.seed)
    fld, _ = simulate_field(sc)
    if args.zeros:
        fld = inject_zeros(fld, args.zeros, [float(v) for v in args.zero_mix.split(",")], seed=cfg.seed)
    path = _out(cfg, "field.csv")
    write_field(path, fld)
    print(f"wrote {fld.n} compositions to {path}; census {fld.zero_census()}")


def _write_results(cfg, table, name):
    path = _out(cfg, name)
    table.to_csv(path)
    pl.write_manifest(_out(cfg, "manifest.txt"), cfg, {"results": str(path), "failed_cells": table.n_failed()})
    for lab, v in table.mean("delta_alpha_over_sigma").items():
        h, tv = table.mean("delta_H")[lab], table.mean("delta_TV")[lab]
        print(f"alpha {lab:>5}: delta_H {h:.5f}  delta_TV {tv:.5f}  delta_alpha/sigma {v:.5f}")
    print(f"wrote {path}")


def cmd_study(args):
    cfg = _config(args, "simulation-study")
    _write_results(cfg, pl.run_simulation_study(cfg), "study.csv")


def cmd_cv(args):
    cfg = _config(args, "cross-validation")
    fld = _field(cfg)
    table = pl.run_cross_validation(cfg, fld)
    ah = table.column("alpha_hat", table.labels()[0])
    print(f"alpha_hat mean {np.nanmean(ah):.5f} sd {np.nanstd(ah, ddof=1) if ah.size > 1 else float('nan'):.5f}")
    _write_results(cfg, table, "cv.csv")


def cmd_krige_map(args):
    cfg = _config(args, "krige-map")
    fld = _field(cfg)
    km = pl.krige_map(cfg, fld)
    path = _out(cfg, "map.csv")
    km.to_csv(path)
    pl.write_manifest(_out(cfg, "manifest.txt"), cfg, {"alpha_used": km.alpha, "flagged": int(km.flagged.sum())})
    print(f"alpha = {fmt(km.alpha)}; {int(km.flagged.sum())} of {len(km.residual)} cells flagged; wrote {path}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="alphait", description="Geostatistics of compositions in alpha-IT coordinates.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, inputs=True):
        p = sub.add_parser(name, help=help_)
        _common(p, inputs)
        p.set_defaults(func=fn)
        return p

    add("transform", cmd_transform, "alpha-IT coordinates of a field")
    p = add("inverse", cmd_inverse, "back-transform coordinates to compositions", inputs=False)
    p.add_argument("coords", help="CSV with x, y, z1..z(D-1)")
    add("estimate-alpha", cmd_estimate, "maximum-likelihood alpha with zero patterns")
    add("variogram", cmd_variogram, "empirical cross-variogram of the coordinates")
    add("fit", cmd_fit, "fit the default nugget + exponential LMC")
    p = add("krige", cmd_krige, "cokrige a field at target locations")
    p.add_argument("targets", help="CSV with x, y")
    p = add("simulate", cmd_simulate, "simulate a scenario field", inputs=False)
    p.add_argument("--scenario", choices=preset_names(), default="center-0.2")
    p.add_argument("--n-points", type=int, default=2000)
    p.add_argument("--zeros", type=float, default=0.0, help="fraction of compositions given zero parts")
    p.add_argument("--zero-mix", default="1", help="relative shares of 1, 2, ... zeros")
    p = add("study", cmd_study, "simulation study over an alpha grid", inputs=False)
    p.add_argument("--scenario", choices=preset_names())
    p.add_argument("--replicates", type=int)
    p.add_argument("--train-size", type=int)
    p.add_argument("--test-size", type=int)
    p.add_argument("--metric-alphas")
    p = add("cv", cmd_cv, "Monte Carlo cross-validation on a field")
    p.add_argument("--replicates", type=int)
    p.add_argument("--train-size", type=int)
    p.add_argument("--test-size", type=int)
    p = add("krige-map", cmd_krige_map, "kriged compositions on a regular grid")
    p.add_argument("--grid-size", type=int)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
