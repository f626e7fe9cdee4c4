"""Command line entry point: sample, fit, eval, angles, metrics, kde.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 fit stopped before reaching the loss threshold.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    DistSpec,
    MetricReport,
    SampleFileError,
    draw_sample,
    histogram_truth,
    kde_bandwidth_search,
    kde_estimate,
    kl_divergence,
    mse,
    read_sample,
)
from .circuit import angles_at
from .cmaes import NonFiniteLossError
from .derivative import EXACT, Shots, evaluate_grid
from .evolution import STEPPERS, EvolutionConfig, evolve
from .training import FitResult, OptimizerConfig, empirical_cdf, fit, rescale

log = logging.getLogger("adiabatic_pdf")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NOT_CONVERGED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


@dataclass
class RunConfig:
    """Every tunable of a run. Loaded from the ``[run]`` section of an INI file."""

    dtau: float = 0.002
    total_time: float = 50.0
    degree: int = 25
    ntrain: int = 100
    stepper: str = "exact"
    j_thresh: float = 1e-5
    max_iters: int = 10_000
    sigma0: float = 0.3
    popsize: int = 0  # 0: 4 + floor(3 ln p)
    seed: int = 0
    shots: int = 200_000
    repeats: int = 20
    grid: str = "500"
    kernel: str = "exponential"
    n_candidates: int = 1000
    folds: int = 5

    def validate(self) -> "RunConfig":
        try:
            cfg = EvolutionConfig(self.dtau, self.stepper)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        checks = [
            (self.total_time > 0, "total_time must be positive"),
            (self.degree >= 1, "degree must be at least 1"),
            (self.degree <= cfg.n_steps, f"degree {self.degree} exceeds the {cfg.n_steps} evolution steps"),
            (2 <= self.ntrain <= cfg.n_steps, f"ntrain must lie in [2, {cfg.n_steps}]"),
            (self.j_thresh >= 0, "j_thresh must be nonnegative"),
            (self.max_iters >= 1, "max_iters must be positive"),
            (self.sigma0 > 0, "sigma0 must be positive"),
            (self.popsize >= 0, "popsize must be nonnegative"),
            (self.shots >= 1, "shots must be positive"),
            (self.repeats >= 1, "repeats must be positive"),
            (self.n_candidates >= 1, "n_candidates must be positive"),
            (self.folds >= 2, "folds must be at least 2"),
        ]
        for ok, msg in checks:
            if not ok:
                raise UsageError(msg)
        parse_grid(self.grid)
        return self

    @classmethod
    def from_file(cls, path) -> dict:
        parser = configparser.ConfigParser()
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise UsageError(f"{path}: {exc.strerror or exc}") from None
        except configparser.Error as exc:
            raise UsageError(f"{path}: {exc}") from None
        if parser.sections() != ["run"]:
            raise UsageError(f"{path}: expected a single [run] section")
        types = {f.name: f.type for f in fields(cls)}
        out = {}
        for key, raw in parser["run"].items():
            if key not in types:
                raise UsageError(f"{path}: unknown key {key!r}")
            conv = {"float": float, "int": int, "str": str}[types[key]]
            try:
                out[key] = conv(raw)
            except ValueError:
                raise UsageError(f"{path}: bad value for {key}: {raw!r}") from None
        return out


def parse_grid(spec: str) -> np.ndarray:
    """``N`` equispaced points on [0, 1], ``a:b:N``, or ``bins:K`` bin centres."""
    spec = str(spec).strip()
    try:
        if spec.startswith("bins:"):
            k = int(spec[5:])
            if k < 1:
                raise ValueError
            return (np.arange(k) + 0.5) / k
        if ":" in spec:
            a, b, n = spec.split(":")
            a, b, n = float(a), float(b), int(n)
        else:
            a, b, n = 0.0, 1.0, int(spec)
    except ValueError:
        raise UsageError(f"bad grid spec {spec!r}") from None
    if n < 1:
        raise UsageError("grid needs at least one point")
    if not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0):
        raise UsageError(f"grid {spec!r} leaves [0, 1]")
    return np.linspace(a, b, n)


def fmt(v) -> str:
    return repr(float(v))


def _write_rows(path, header, rows, comments=()):
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            for c in comments:
                fh.write(f"# {c}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from None


def _read_csv(path):
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as fh:
            lines = [ln for ln in fh if not ln.startswith("#")]
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from None
    rows = list(csv.DictReader(lines))
    if not rows:
        raise DataError(f"{path}: no rows")
    return rows


def _column(rows, name, path, allow_empty=False):
    out = []
    for i, r in enumerate(rows, 2):
        v = r.get(name)
        if v is None:
            raise DataError(f"{path}: missing column {name!r}")
        if v == "" and allow_empty:
            out.append(np.nan)
            continue
        try:
            out.append(float(v))
        except ValueError:
            raise DataError(f"{path}:{i}: bad {name} value {v!r}") from None
    return np.array(out)


def _load_sample(path) -> np.ndarray:
    try:
        return read_sample(path)
    except SampleFileError as exc:
        raise DataError(str(exc)) from None


def _load_fit(path) -> FitResult:
    try:
        return FitResult.load(path)
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


def _mode_from(args, cfg: RunConfig):
    if args.mode == "exact":
        return EXACT
    return Shots(cfg.shots, cfg.repeats, cfg.seed)


# commands -------------------------------------------------------------------


def cmd_sample(args, cfg: RunConfig) -> int:
    if args.n < 1:
        raise UsageError("-n must be at least 1")
    try:
        spec = DistSpec.parse(args.dist)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        x = draw_sample(spec, args.n, cfg.seed)
    except SampleFileError as exc:
        raise DataError(str(exc)) from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.out)
    try:
        with out.open("w", encoding="utf-8") as fh:
            fh.write(f"# dist={spec.describe()} n={args.n} seed={cfg.seed}\n")
            fh.writelines(fmt(v) + "\n" for v in x)
    except OSError as exc:
        raise DataError(f"{out}: {exc.strerror or exc}") from None
    log.info("wrote %d values to %s", args.n, out)
    return EXIT_OK


def cmd_fit(args, cfg: RunConfig) -> int:
    x = _load_sample(args.sample)
    try:
        normalized, tr = rescale(x)
    except ValueError as exc:
        raise DataError(f"{args.sample}: {exc}") from None
    ecfg = EvolutionConfig(cfg.dtau, cfg.stepper)
    ts = empirical_cdf(normalized, cfg.ntrain, cfg.dtau, transform=tr)
    opt = OptimizerConfig(cfg.popsize or None, cfg.sigma0, cfg.max_iters, cfg.j_thresh, cfg.seed)
    try:
        res = fit(ts, cfg.degree, ecfg, opt, total_time=cfg.total_time)
    except NonFiniteLossError as exc:
        raise DataError(str(exc)) from None
    try:
        res.save(args.out)
    except OSError as exc:
        raise DataError(f"{args.out}: {exc.strerror or exc}") from None
    if args.trajectory_out:
        evolve(res.params, ecfg).to_csv(args.trajectory_out)
    log.info("J_final=%s after %d generations (%s)", fmt(res.j_final), res.iterations, res.stop_reason)
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_eval(args, cfg: RunConfig) -> int:
    res = _load_fit(args.fit)
    grid = parse_grid(cfg.grid)
    mode = _mode_from(args, cfg)
    vals, stds = evaluate_grid(res.params, grid, args.what, mode)
    tr = res.transform
    if args.what == "pdf":
        vals = vals / tr.width
        stds = stds / tr.width
    xs = tr.inverse(grid)
    rows = [
        [fmt(x), fmt(t), fmt(v), "" if mode == EXACT else fmt(s)]
        for x, t, v, s in zip(xs, grid, vals, stds)
    ]
    _write_rows(args.out, ["x", "t", "value", "std"], rows)
    return EXIT_OK


def cmd_angles(args, cfg: RunConfig) -> int:
    res = _load_fit(args.fit)
    rows = []
    for t in parse_grid(cfg.grid):
        a = angles_at(res.params, t)
        rows.append([fmt(t), fmt(a.phi), fmt(a.theta), fmt(a.psi)])
    _write_rows(args.out, ["t", "phi", "theta", "psi"], rows)
    return EXIT_OK


def _eval_grid(path):
    rows = _read_csv(path)
    x = _column(rows, "x", path)
    t = _column(rows, "t", path)
    v = _column(rows, "value", path)
    if x.size > 1 and not (np.all(np.diff(t) > 0) and np.all(np.diff(x) > 0)):
        raise DataError(f"{path}: grid is not strictly increasing")
    return x, t, v


def _width(x, t, path) -> float:
    if x.size < 2:
        raise DataError(f"{path}: need at least two grid points to recover the transform")
    return float((x[-1] - x[0]) / (t[-1] - t[0]))


def cmd_metrics(args, cfg: RunConfig) -> int:
    if not (args.cdf or args.pdf):
        raise UsageError("give --cdf and/or --pdf")
    if not (args.truth or args.truth_cdf or args.truth_pdf):
        raise UsageError("give --truth or --truth-cdf/--truth-pdf")
    spec = None
    if args.truth:
        try:
            spec = DistSpec.parse(args.truth)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    report = MetricReport()
    grids = {}
    for what, path, truth_path in (("cdf", args.cdf, args.truth_cdf), ("pdf", args.pdf, args.truth_pdf)):
        if not path:
            continue
        x, t, v = _eval_grid(path)
        grids[what] = x
        w = _width(x, t, path)
        if truth_path:
            tx, _, tv = _eval_grid(truth_path)
            if tx.size != x.size or not np.allclose(tx, x, rtol=1e-12, atol=0.0):
                raise DataError(f"grid mismatch between {path} and {truth_path}")
        elif spec is not None and spec.kind == "file":
            sample = _load_sample(spec.path)
            centres, dens, cum = histogram_truth(sample, n_bins=x.size)
            if not np.allclose(centres, x, rtol=1e-9, atol=1e-12 * w):
                raise DataError(f"{path}: grid does not match the {x.size} histogram bin centres")
            tv = cum if what == "cdf" else dens
        elif spec is not None:
            tv = spec.cdf(x) if what == "cdf" else spec.pdf(x)
        else:
            raise UsageError(f"no truth given for the {what} file")
        if what == "cdf":
            report.mse_cdf = mse(v, tv)
        else:
            # densities are compared per unit of the normalised variable
            report.mse_pdf = mse(v * w, tv * w)
            report.kl_pdf = kl_divergence(v, tv)
        report.grid[what] = {"n": int(x.size), "x_first": float(x[0]), "x_last": float(x[-1])}
    if len(grids) == 2 and (grids["cdf"].size != grids["pdf"].size
                            or not np.allclose(grids["cdf"], grids["pdf"], rtol=1e-12, atol=0.0)):
        raise DataError("cdf and pdf files use different grids")
    report.mode = args.label
    out = Path(args.out)
    try:
        out.write_text(report.to_json(), encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{out}: {exc.strerror or exc}") from None
    return EXIT_OK


def cmd_kde(args, cfg: RunConfig) -> int:
    x = _load_sample(args.sample)
    try:
        normalized, tr = rescale(x)
    except ValueError as exc:
        raise DataError(f"{args.sample}: {exc}") from None
    h = kde_bandwidth_search(normalized, cfg.kernel, n_candidates=cfg.n_candidates,
                             folds=cfg.folds, seed=cfg.seed)
    grid = parse_grid(cfg.grid)
    dens = kde_estimate(normalized, cfg.kernel, h, grid) / tr.width
    rows = [[fmt(xv), fmt(d)] for xv, d in zip(tr.inverse(grid), dens)]
    comments = [f"kernel={cfg.kernel} bandwidth={fmt(h * tr.width)} bandwidth_normalized={fmt(h)} seed={cfg.seed}"]
    _write_rows(args.out, ["x", "density"], rows, comments)
    log.info("kde bandwidth %s (normalised units)", fmt(h))
    return EXIT_OK


# argument parsing -----------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


OVERRIDES = {
    "--dtau": ("dtau", float),
    "--total-time": ("total_time", float),
    "--degree": ("degree", int),
    "--ntrain": ("ntrain", int),
    "--stepper": ("stepper", str),
    "--j-thresh": ("j_thresh", float),
    "--max-iters": ("max_iters", int),
    "--sigma0": ("sigma0", float),
    "--popsize": ("popsize", int),
    "--seed": ("seed", int),
    "--shots": ("shots", int),
    "--repeats": ("repeats", int),
    "--grid": ("grid", str),
    "--kernel": ("kernel", str),
    "--candidates": ("n_candidates", int),
    "--folds": ("folds", int),
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="INI file with a [run] section")
    for flag, (dest, typ) in OVERRIDES.items():
        kw = {"dest": dest, "type": typ, "default": None}
        if flag == "--stepper":
            kw["choices"] = STEPPERS
        if flag == "--kernel":
            kw["choices"] = ("tophat", "exponential")
        common.add_argument(flag, **kw)
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="adiabatic-pdf", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sample", parents=[common], help="draw a sample file")
    s.add_argument("--dist", required=True, help="gamma:A,B | mixture:W1,W2/M1,M2/S1,S2 | file:PATH")
    s.add_argument("-n", type=int, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample)

    f = sub.add_parser("fit", parents=[common], help="fit the schedule to a sample's CDF")
    f.add_argument("sample")
    f.add_argument("--out", required=True)
    f.add_argument("--trajectory-out", help="also write the fitted trajectory as CSV")
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("eval", parents=[common], help="evaluate a fitted CDF or PDF on a grid")
    e.add_argument("fit")
    e.add_argument("--what", choices=("cdf", "pdf"), required=True)
    e.add_argument("--mode", choices=("exact", "shots"), default="exact")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_eval)

    a = sub.add_parser("angles", parents=[common], help="export circuit angles on a grid")
    a.add_argument("fit")
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_angles)

    m = sub.add_parser("metrics", parents=[common], help="compare eval output with the truth")
    m.add_argument("--cdf")
    m.add_argument("--pdf")
    m.add_argument("--truth", help="distribution spec; file:PATH compares against a histogram")
    m.add_argument("--truth-cdf")
    m.add_argument("--truth-pdf")
    m.add_argument("--label", default="exact", help="mode recorded in the report")
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_metrics)

    k = sub.add_parser("kde", parents=[common], help="kernel density baseline")
    k.add_argument("sample")
    k.add_argument("--out", required=True)
    k.set_defaults(func=cmd_kde)
    return p


def resolve_config(args) -> RunConfig:
    values = RunConfig.from_file(args.config) if args.config else {}
    for dest, _ in OVERRIDES.values():
        v = getattr(args, dest, None)
        if v is not None:
            values[dest] = v
    return RunConfig(**values).validate()


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = resolve_config(args)
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"adiabatic-pdf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"adiabatic-pdf: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
