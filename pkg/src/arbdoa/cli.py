"""Command-line interface.

    arbdoa estimate --scenario FILE [--geometry CSV] [--p P] [--gamma-db G] --out DIR
    arbdoa analyze-manifold [--radii 0:10:0.5] [--gamma-db G ...] [--geometry CSV] [--out DIR]
    arbdoa sweep --scenario FILE.sweep [--trials N] [--seed S] [--jobs J] [--p P] --out DIR
    arbdoa demo [fig2|fig3|fig4] [--out DIR]

Exit codes: 0 success, 1 estimation error, 2 configuration or I/O error.
Errors are reported as one JSON object on stderr.
"""

import argparse
import csv
import json
import os
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import manifold, rooting, simulate
from .numkit import ConditioningError, ShapeError
from .pipeline import EstimationError, run_scenario, synthesize
from .scenario import ConfigError, bundled, load_geometry, load_scenario, load_sweep

EXIT_OK, EXIT_ESTIMATION, EXIT_CONFIG = 0, 1, 2
CURVE_GRID = 3600


class UsageError(ConfigError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fail(code, exc, **extra):
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    path = getattr(exc, "path", None) or getattr(exc, "filename", None)
    if path:
        payload["path"] = str(path)
    payload.update(extra)
    print(json.dumps(payload), file=sys.stderr)
    return code


def _out_dir(path):
    if path is None:
        raise ConfigError("--out DIR is required")
    p = Path(path)
    try:
        p.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory: {exc.strerror}", p) from None
    if not os.access(p, os.W_OK):
        raise ConfigError("output directory is not writable", p)
    return p


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fmt(x):
    return repr(float(x))


def write_estimate_outputs(out, scn, res):
    """Result JSON plus the four figure CSVs; timings go to ``run.log.json``."""
    theta = simulate.angle_grid(CURVE_GRID)
    deg = np.rad2deg(theta)
    h = res.h
    N = (h.size - 1) // 2
    b = np.exp(1j * np.outer(theta, np.arange(-N, N + 1))) @ h
    p = rooting.eval_nonneg(h, theta)
    _write_csv(out / "dual_poly.csv", ("theta_deg", "abs_b"), ((_fmt(t), _fmt(v)) for t, v in zip(deg, np.abs(b))))
    _write_csv(out / "nonneg_poly.csv", ("theta_deg", "p"), ((_fmt(t), _fmt(v)) for t, v in zip(deg, p)))

    z = rooting.roots(rooting.nonneg_poly(h))
    z = z[np.lexsort((z.imag, z.real))]
    dist = np.abs(np.abs(z) - 1)
    _write_csv(
        out / "roots.csv",
        ("re", "im", "abs", "angle_deg", "dist_unit_circle", "selected"),
        (
            (_fmt(v.real), _fmt(v.imag), _fmt(abs(v)), _fmt(np.rad2deg(np.angle(v))), _fmt(d), int(d <= scn.unit_tol))
            for v, d in zip(z, dist)
        ),
    )

    y = synthesize(scn)
    cbf = simulate.cbf_spectrum(y, scn.geometry, CURVE_GRID)
    rows = [("cbf", _fmt(t), _fmt(v)) for t, v in zip(deg, cbf)]
    rows += [("estimate", _fmt(t), _fmt(abs(a))) for t, a in zip(res.doa.angles_deg, res.doa.amplitudes)]
    rows += [("truth", _fmt(np.rad2deg(t)), _fmt(abs(s))) for t, s in scn.sources]
    _write_csv(out / "cbf_compare.csv", ("series", "theta_deg", "magnitude"), rows)

    result = res.to_dict(include_timing=False)
    result["true_angles_deg"] = [float(np.rad2deg(t)) for t, _ in scn.sources]
    (out / "result.json").write_text(json.dumps(result, indent=2) + "\n")
    (out / "run.log.json").write_text(json.dumps({"timing": res.timing}, indent=2) + "\n")
    return result


def _solver_override(scn, args):
    if args.p is not None:
        scn.P = args.p
    if args.gamma_db is not None:
        scn.gamma_db = args.gamma_db
    return scn


def cmd_estimate(args):
    if not args.scenario:
        raise ConfigError("--scenario PATH is required")
    geom = load_geometry(args.geometry) if args.geometry else None
    scn = _solver_override(load_scenario(args.scenario, geom), args)
    out = _out_dir(args.out)
    res = run_scenario(scn)
    result = write_estimate_outputs(out, scn, res)
    print(json.dumps({"result": result["result"], "angles_deg": result["angles_deg"],
                      "amplitude_magnitude": result["amplitude_magnitude"], "out": str(out)}))
    return EXIT_OK


def _parse_radii(text):
    try:
        if ":" in text:
            lo, hi, step = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ValueError
            return np.round(np.arange(lo, hi + step / 2, step), 10).tolist()
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--radii must be 'lo:hi:step' or a comma list, got {text!r}") from None


def cmd_analyze_manifold(args):
    if args.geometry:
        radii = [load_geometry(args.geometry).max_radius]
    else:
        radii = _parse_radii(args.radii)
    if not radii:
        raise ConfigError("radius list is empty")
    if any(r < 0 for r in radii):
        raise ConfigError("radii must be nonnegative")
    gammas = args.gamma_db or [-80.0, -120.0, -160.0]
    for g in gammas:
        if not -200 <= g <= -40:
            raise ConfigError(f"gamma_db must lie in [-200, -40], got {g}")
    rows = manifold.bandwidth_profile(radii, gammas)
    fits = []
    for g in gammas:
        sub = [r for r in rows if r[1] == g]
        if len(sub) >= 2:
            slope, icpt = manifold.fit_line(sub)
            fits.append({"gamma_db": g, "slope": slope, "intercept": icpt})
    table = [("radius_over_lambda", "gamma_db", "min_p")] + [(_fmt(r), _fmt(g), str(p)) for r, g, p in rows]
    if args.out:
        out = _out_dir(args.out)
        _write_csv(out / "bandwidth_profile.csv", table[0], table[1:])
        _write_csv(out / "line_fit.csv", ("gamma_db", "slope", "intercept"),
                   [(_fmt(f["gamma_db"]), _fmt(f["slope"]), _fmt(f["intercept"])) for f in fits])
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerows(table)
    print(json.dumps({"line_fit": fits}), file=sys.stdout if args.out else sys.stderr)
    return EXIT_OK


class SweepFileError(ConfigError):
    pass


def _resume_rows(path, cfg):
    """Completed rows of an earlier partial run, keyed by cell."""
    if not path.exists():
        return {}
    cells = {simulate.cell_key(c) for c in cfg.cells()}
    done = {}
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if header is None:
            return {}
        if tuple(header) != simulate.SWEEP_COLUMNS:
            raise SweepFileError("existing output has an unexpected header; refusing to resume", path)
        for lineno, rec in enumerate(rd, start=2):
            if not rec:
                continue
            try:
                row = simulate.parse_row(rec)
            except ValueError as exc:
                raise SweepFileError(f"line {lineno}: corrupt row {rec!r} ({exc})", path) from None
            key = simulate.cell_key((row["radius_over_lambda"], row["P"], row["L"], row["delta_min_deg"]))
            if key not in cells or row["trials"] != cfg.trials:
                raise SweepFileError(f"line {lineno}: row {rec!r} does not belong to this sweep", path)
            done[key] = row
    return done


def cmd_sweep(args):
    if not args.scenario:
        raise ConfigError("--scenario PATH (a sweep file) is required")
    cfg = load_sweep(args.scenario)
    changes = {}
    if args.trials is not None:
        if args.trials < 1:
            raise ConfigError(f"--trials must be >= 1, got {args.trials}")
        changes["trials"] = args.trials
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.p is not None:
        changes["P"] = (args.p,)
    if args.gamma_db is not None:
        changes["gamma_db"] = args.gamma_db
    try:
        cfg = replace(cfg, **changes)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    out = _out_dir(args.out)
    stem = Path(args.scenario).stem
    csv_path = out / f"{stem}.csv"
    timing_path = out / f"{stem}.timing.csv"
    done = _resume_rows(csv_path, cfg)

    # append new rows as they arrive, then rewrite in canonical cell order
    if not done:
        _write_csv(csv_path, simulate.SWEEP_COLUMNS, [])
    timing = {}
    with open(csv_path, "a", newline="") as fh, open(timing_path, "a", newline="") as tf:
        w = csv.writer(fh, lineterminator="\n")
        tw = csv.writer(tf, lineterminator="\n")
        for row in simulate.success_sweep(cfg, jobs=args.jobs, skip=done.keys()):
            key = simulate.cell_key((row["radius_over_lambda"], row["P"], row["L"], row["delta_min_deg"]))
            done[key] = row
            timing[key] = row
            w.writerow(simulate.format_row(row))
            tw.writerow(simulate.format_row(row, simulate.TIMING_COLUMNS))
            fh.flush()
            tf.flush()
            print(json.dumps({k: row[k] for k in ("radius_over_lambda", "P", "L", "delta_min_deg", "success_prob")}),
                  file=sys.stderr)
    ordered = [done[simulate.cell_key(c)] for c in cfg.cells()]
    simulate.write_sweep_csv(ordered, csv_path)
    _rewrite_timing(timing_path, cfg)
    print(json.dumps({"cells": len(ordered), "out": str(csv_path)}))
    return EXIT_OK


def _rewrite_timing(path, cfg):
    rows = {}
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if len(rec) == len(simulate.TIMING_COLUMNS) and rec[0] != simulate.TIMING_COLUMNS[0]:
                rows[tuple(rec[:4])] = rec
    order = [rows[k] for k in (simulate.cell_key(c) for c in cfg.cells()) if k in rows]
    _write_csv(path, simulate.TIMING_COLUMNS, order)


def cmd_demo(args):
    scn = load_scenario(bundled(f"{args.name}.scenario"))
    scn = _solver_override(scn, args)
    res = run_scenario(scn)
    if args.out:
        write_estimate_outputs(_out_dir(args.out), scn, res)
    y = synthesize(scn)
    theta = simulate.angle_grid(CURVE_GRID)
    cbf = simulate.cbf_spectrum(y, scn.geometry, CURVE_GRID)
    cbf_peaks = np.rad2deg(theta[simulate.local_maxima(cbf)])
    print(f"scenario     {args.name}  (M={scn.geometry.n_sensors}, P={res.basis.P})")
    print(f"true DOAs    {np.round(np.rad2deg(scn.angles), 4).tolist()}")
    print(f"estimated    {np.round(res.doa.angles_deg, 6).tolist()}")
    print(f"magnitudes   {np.round(np.abs(res.doa.amplitudes), 6).tolist()}")
    print(f"CBF peaks    {np.round(cbf_peaks, 1).tolist()}  (above half maximum)")
    print(f"objective    {res.solution.objective:.9f}  gap {res.solution.duality_gap:.1e}  "
          f"iterations {res.solution.iterations}")
    return EXIT_OK


def build_parser():
    p = _Parser(prog="arbdoa", description="Gridless single-snapshot DOA estimation for arbitrary planar arrays.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, scenario=True):
        if scenario:
            sp.add_argument("--scenario", metavar="PATH")
        sp.add_argument("--out", metavar="DIR")
        sp.add_argument("--p", type=int, metavar="INT", help="number of Fourier coefficients (odd)")
        sp.add_argument("--gamma-db", type=float, metavar="FLOAT")

    e = sub.add_parser("estimate", help="run the estimator on one scenario")
    common(e)
    e.add_argument("--geometry", metavar="PATH", help="CSV of sensor positions in wavelengths")

    a = sub.add_parser("analyze-manifold", help="minimum P versus aperture")
    a.add_argument("--radii", default="0:10:0.5", help="'lo:hi:step' or comma list (wavelengths)")
    a.add_argument("--gamma-db", type=float, action="append", metavar="FLOAT")
    a.add_argument("--geometry", metavar="PATH")
    a.add_argument("--out", metavar="DIR")

    s = sub.add_parser("sweep", help="Monte-Carlo success-probability sweep")
    common(s)
    s.add_argument("--seed", type=int)
    s.add_argument("--trials", type=int)
    s.add_argument("--jobs", type=int, default=1)

    d = sub.add_parser("demo", help="run a bundled figure scenario")
    d.add_argument("name", nargs="?", default="fig2", choices=("fig2", "fig3", "fig4"))
    common(d, scenario=False)
    return p


COMMANDS = {
    "estimate": cmd_estimate,
    "analyze-manifold": cmd_analyze_manifold,
    "sweep": cmd_sweep,
    "demo": cmd_demo,
}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise ConfigError("a command is required: " + ", ".join(COMMANDS))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", manifold.ManifoldSizeWarning)
            return COMMANDS[args.command](args)
    except SweepFileError as exc:
        return _fail(EXIT_CONFIG, exc)
    except (ConfigError, OSError, ShapeError) as exc:
        return _fail(EXIT_CONFIG, exc)
    except (EstimationError, rooting.RootingError, rooting.DegeneratePolynomialError, ConditioningError) as exc:
        extra = {}
        if isinstance(exc, EstimationError):
            extra["solver_status"] = exc.solution.status.value
        return _fail(EXIT_ESTIMATION, exc, **extra)
    except ValueError as exc:
        return _fail(EXIT_CONFIG, exc)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
