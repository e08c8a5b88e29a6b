"""Command-line front end.

Subcommands: ``estimate`` (fit on a CSV of observations), ``simulate``
(replicated bias/variance/MSE grid and optional estimation-band plot),
``rate-study`` (log-log error slope against sample size) and
``spectrum`` (operator eigenvalues, exact or estimated).

Exit codes: 0 success, 2 malformed input, 3 parameter violation,
4 numerical invariant failure.  Every numeric output comes straight
from the corresponding library call, and runs with a ``--seed`` are
byte-reproducible.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .dgp import DgpSpec, joint_density, true_regression
from .errors import (
    InputDataError,
    NumericalInvariantError,
    ParameterError,
)
from .kernel_iv import (
    DEFAULT_EVAL_POINTS,
    KernelIvConfig,
    estimate_bivariate,
    estimate_multivariate,
)
from .kernels import BoundaryPolicy
from .montecarlo import McConfig, default_cells, rate_study, run_monte_carlo
from .operator import (
    Dataset,
    build_grid,
    discretize_from_density,
    discretize_operator,
    fit_decay_exponent,
)
from .series_iv import SeriesIvConfig, series_estimate


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def _parse_float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _parse_cells(text: str) -> tuple[tuple[float, float], ...]:
    cells = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            a, h = chunk.split(":")
            cells.append((float(a), float(h)))
        except ValueError as exc:
            raise ParameterError(f"bad cell {chunk!r}, expected RIDGE:SMOOTHING") from exc
    if not cells:
        raise ParameterError("no cells given")
    return tuple(cells)


def read_dataset(path: str) -> Dataset:
    """Parse a delimited file with header columns x, w, y and optional z1..zq."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise InputDataError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputDataError(f"{path}: empty file") from None
        names = [c.strip().lower() for c in header]
        required = ("x", "w", "y")
        for col in required:
            if col not in names:
                raise InputDataError(f"{path}: missing required column {col!r}")
        zcols = sorted(
            (c for c in names if c.startswith("z") and c[1:].isdigit()),
            key=lambda c: int(c[1:]),
        )
        known = set(required) | set(zcols)
        ignored = [c for c in names if c not in known]
        if ignored:
            print(f"warning: ignoring columns {ignored}", file=sys.stderr)
        idx = {c: names.index(c) for c in known}

        cols: dict[str, list[float]] = {c: [] for c in known}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < len(names):
                raise InputDataError(f"{path}: line {lineno}: expected {len(names)} fields")
            for c in known:
                cell = row[idx[c]].strip()
                try:
                    val = float(cell)
                except ValueError:
                    raise InputDataError(
                        f"{path}: line {lineno}: could not parse {cell!r} in column {c}"
                    ) from None
                if c != "y" and not 0.0 <= val <= 1.0:
                    raise InputDataError(
                        f"{path}: line {lineno}: column {c} value {cell} outside [0, 1]"
                    )
                cols[c].append(val)
    if not cols["x"]:
        raise InputDataError(f"{path}: no data rows")
    z = None
    if zcols:
        z = np.column_stack([cols[c] for c in zcols])
    return Dataset(x=np.array(cols["x"]), w=np.array(cols["w"]), y=np.array(cols["y"]), z=z)


def _merge(args: argparse.Namespace, key: str, default):
    """Flag > config-file entry > built-in default."""
    val = getattr(args, key, None)
    if val is not None:
        return val
    config = getattr(args, "_config", {})
    if key in config:
        return config[key]
    return default


def _write_text(path: str | None, text: str):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _estimate_csv(points, values) -> str:
    lines = ["x,estimate"]
    lines += [f"{_fmt(p)},{_fmt(v)}" for p, v in zip(points, values)]
    return "\n".join(lines) + "\n"


def cmd_estimate(args) -> int:
    d = read_dataset(args.input)
    estimator = _merge(args, "estimator", "kernel")
    eval_points = (
        np.asarray(_parse_float_list(args.eval_points))
        if args.eval_points
        else DEFAULT_EVAL_POINTS
    )
    if estimator == "kernel":
        cfg = KernelIvConfig(
            bandwidth=_merge(args, "h", 0.2),
            ridge=_merge(args, "a", 0.05),
            grid_size=int(_merge(args, "grid_size", 65)),
            boundary=BoundaryPolicy(_merge(args, "boundary", "matched")),
            bandwidth_z=getattr(args, "hz", None),
            eval_points=eval_points,
        )
        if d.z is not None:
            if args.z0 is None:
                raise ParameterError("--z0 is required for data with z columns")
            est = estimate_multivariate(d, cfg, np.asarray(_parse_float_list(args.z0)))
        else:
            est = estimate_bivariate(d, cfg)
        diagnostics = est.diagnostics
    elif estimator == "series":
        scfg = SeriesIvConfig(
            ridge=_merge(args, "a", 0.05),
            n_terms=None if args.m is None else int(args.m),
            band=None if args.N is None else int(args.N),
            eval_points=eval_points,
        )
        _, est = series_estimate(d, scfg)
        diagnostics = est.diagnostics
    else:
        raise ParameterError(f"unknown estimator {estimator!r}")

    if args.out and args.out.endswith(".json"):
        payload = {
            "points": [float(p) for p in est.points],
            "values": [float(v) for v in est.values],
            "diagnostics": diagnostics,
        }
        _write_text(args.out, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    else:
        _write_text(args.out, _estimate_csv(est.points, est.values))
    print(f"estimated {est.points.size} points with the {estimator} estimator", file=sys.stderr)
    return 0


def _band_plot(path: str, report, cell_index: int):
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "npiv"
    import matplotlib.pyplot as plt

    x = report.eval_points
    truth = report.truth
    mean = report.means[cell_index]
    delta = report.bands[cell_index]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(x, truth, "-", color="black", label="target")
    ax.plot(x, mean, "--", color="tab:blue", label="mean estimate")
    ax.plot(x, truth - delta, ":", color="tab:red", label=f"{report.band_level:.0%} band")
    ax.plot(x, truth + delta, ":", color="tab:red")
    a, s = report.cells[cell_index]
    ax.set_xlabel("x")
    ax.set_ylabel("g(x)")
    ax.set_title(f"ridge={a:g}, smoothing={s:g}, {report.reps} replications")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)

    table = path[:-4] + ".csv" if path.endswith(".svg") else path + ".csv"
    lines = ["x,truth,mean,lower,upper"]
    for k in range(x.size):
        lines.append(
            ",".join(
                _fmt(v)
                for v in (x[k], truth[k], mean[k], truth[k] - delta[k], truth[k] + delta[k])
            )
        )
    with open(table, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _report_csv(report) -> str:
    lines = ["a,h,bias2,var,mse"]
    for a, s, b2, v, m in report.rows():
        lines.append(",".join(_fmt(x) for x in (a, s, b2, v, m)))
    return "\n".join(lines) + "\n"


def cmd_simulate(args) -> int:
    cells = _parse_cells(args.cells) if args.cells else default_cells()
    cfg = McConfig(
        n=int(_merge(args, "n", 200)),
        reps=int(_merge(args, "reps", 1000)),
        cells=cells,
        estimator=_merge(args, "estimator", "kernel"),
        base_seed=int(_merge(args, "seed", 0)),
        boundary=BoundaryPolicy(_merge(args, "boundary", "plain")),
        grid_size=int(_merge(args, "grid_size", 65)),
        workers=int(_merge(args, "workers", 1)),
    )
    report = run_monte_carlo(cfg, DgpSpec())
    _write_text(args.out, _report_csv(report))
    if args.json:
        _write_text(args.json, json.dumps(report.to_json_dict(), sort_keys=True, indent=2) + "\n")
    if args.band:
        _band_plot(args.band, report, 0)
    if report.failures:
        print(f"warning: {len(report.failures)} replication failures", file=sys.stderr)
    return 0


def cmd_rate_study(args) -> int:
    sizes = _parse_float_list(args.sizes) if args.sizes else [100, 200, 400, 800]
    result = rate_study(
        sizes,
        reps=int(_merge(args, "reps", 300)),
        spec=DgpSpec(),
        anchor_ridge=float(_merge(args, "anchor_a", 0.10)),
        anchor_bandwidth=float(_merge(args, "anchor_h", 0.20)),
        base_seed=int(_merge(args, "seed", 0)),
        boundary=BoundaryPolicy(_merge(args, "boundary", "plain")),
        grid_size=int(_merge(args, "grid_size", 65)),
        workers=int(_merge(args, "workers", 1)),
    )
    lines = ["n,ridge,bandwidth,mise"]
    for n, a, h, m in zip(result.sizes, result.ridges, result.bandwidths, result.mise):
        lines.append(",".join(_fmt(v) for v in (n, a, h, m)))
    lines.append(f"target exponent,{_fmt(result.target_exponent)}")
    lines.append(f"fitted slope,{_fmt(result.slope)}")
    lines.append(f"slope stderr,{_fmt(result.stderr)}")
    _write_text(args.out, "\n".join(lines) + "\n")
    if args.json:
        _write_text(args.json, json.dumps(result.to_json_dict(), sort_keys=True, indent=2) + "\n")
    return 0


def cmd_spectrum(args) -> int:
    grid_size = int(_merge(args, "grid_size", 129))
    ridge = float(_merge(args, "a", 0.05))
    grid = build_grid(grid_size)
    if args.dgp:
        spec = DgpSpec()
        op = discretize_from_density(lambda x, w: joint_density(spec, x, w), grid, ridge)
    else:
        if not args.input:
            raise ParameterError("spectrum needs --dgp or --input FILE")
        d = read_dataset(args.input)
        cfg = KernelIvConfig(
            bandwidth=float(_merge(args, "h", 0.2)),
            ridge=ridge,
            boundary=BoundaryPolicy(_merge(args, "boundary", "plain")),
        )
        op = discretize_operator(d, cfg.kernel(), grid, ridge)
    lam, _ = op.spectrum()
    top = int(args.top)
    exponent, _ = fit_decay_exponent(lam, j_max=top)
    lines = ["j,eigenvalue"]
    lines += [f"{j + 1},{_fmt(lam[j])}" for j in range(min(top, lam.size))]
    lines.append(f"decay exponent (j<={top}),{_fmt(exponent)}")
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="npiv",
        description="Instrumental-variables regression without functional forms: "
        "ridge-regularized operator inversion, orthogonal series, and a "
        "simulation harness.",
    )
    parser.add_argument("--config", help="JSON file with default parameter values")
    sub = parser.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("estimate", help="fit on a CSV of observations")
    pe.add_argument("--input", required=True, help="CSV with columns x,w,y[,z1..]")
    pe.add_argument("--estimator", choices=["kernel", "series"])
    pe.add_argument("--h", type=float, help="bandwidth (kernel estimator)")
    pe.add_argument("--a", type=float, help="ridge parameter")
    pe.add_argument("--m", type=int, help="series length (series estimator)")
    pe.add_argument("--N", type=int, help="band half-width (series estimator)")
    pe.add_argument("--grid-size", dest="grid_size", type=int)
    pe.add_argument("--boundary", choices=["plain", "matched"])
    pe.add_argument("--hz", type=float, help="bandwidth for z (multivariate)")
    pe.add_argument("--z0", help="comma-separated z point for multivariate fits")
    pe.add_argument("--eval-points", dest="eval_points", help="comma-separated points")
    pe.add_argument("--out", help="output path (.csv or .json)")
    pe.set_defaults(func=cmd_estimate)

    ps = sub.add_parser("simulate", help="replicated bias/variance/MSE grid")
    ps.add_argument("--n", type=int)
    ps.add_argument("--reps", type=int)
    ps.add_argument("--seed", type=int)
    ps.add_argument("--cells", help="RIDGE:SMOOTHING[,RIDGE:SMOOTHING...]")
    ps.add_argument("--estimator", choices=["kernel", "series"])
    ps.add_argument("--boundary", choices=["plain", "matched"])
    ps.add_argument("--grid-size", dest="grid_size", type=int)
    ps.add_argument("--workers", type=int)
    ps.add_argument("--out", help="summary table CSV path (default stdout)")
    ps.add_argument("--json", help="full per-point report path")
    ps.add_argument("--band", help="SVG path for the estimation-band plot (first cell)")
    ps.set_defaults(func=cmd_simulate)

    pr = sub.add_parser("rate-study", help="log-log error slope against n")
    pr.add_argument("--sizes", help="comma-separated sample sizes")
    pr.add_argument("--reps", type=int)
    pr.add_argument("--seed", type=int)
    pr.add_argument("--anchor-a", dest="anchor_a", type=float)
    pr.add_argument("--anchor-h", dest="anchor_h", type=float)
    pr.add_argument("--boundary", choices=["plain", "matched"])
    pr.add_argument("--grid-size", dest="grid_size", type=int)
    pr.add_argument("--workers", type=int)
    pr.add_argument("--out", help="report path (default stdout)")
    pr.add_argument("--json", help="JSON report path")
    pr.set_defaults(func=cmd_rate_study)

    pp = sub.add_parser("spectrum", help="operator eigenvalue table")
    pp.add_argument("--dgp", action="store_true", help="use the built-in design density")
    pp.add_argument("--input", help="CSV with columns x,w,y")
    pp.add_argument("--h", type=float, help="bandwidth for the estimated operator")
    pp.add_argument("--a", type=float, help="ridge used in the factorization")
    pp.add_argument("--boundary", choices=["plain", "matched"])
    pp.add_argument("--grid-size", dest="grid_size", type=int)
    pp.add_argument("--top", type=int, default=20, help="eigenvalues to report and fit")
    pp.add_argument("--out", help="output CSV path (default stdout)")
    pp.set_defaults(func=cmd_spectrum)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = {}
    if args.config:
        try:
            with open(args.config) as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read config {args.config}: {exc}", file=sys.stderr)
            return 2
        if not isinstance(config, dict):
            print(f"error: config {args.config} must hold a JSON object", file=sys.stderr)
            return 2
    args._config = config
    try:
        return args.func(args)
    except InputDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericalInvariantError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
