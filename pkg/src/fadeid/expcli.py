"""Experiment runner: one-shot estimation, sweep studies and plot-data export.

Subcommands:

    estimate   one estimation run, summary printed to stdout
    sweep      full (noise x N x L1 x seed) sweep from a YAML spec,
               results.csv + manifest.yaml + per-figure CSVs written out
    selftest   fast invariant checks, one PASS/FAIL line each

Configuration is a YAML file with nested sections mirroring
:class:`ExperimentSpec`; every default is documented in ``--help``.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict, replace, field
from itertools import product
from pathlib import Path

import yaml

from . import __version__
from .estimator import EstimatorConfig, estimate_two_param, newton_estimate
from .synthdata import TrueModel, synthesize

MODES = ("two-param", "three-param")


@dataclass
class ExperimentSpec:
    truth: TrueModel = field(default_factory=TrueModel)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    mode: str = "three-param"
    noise_levels: list[float] = field(default_factory=lambda: [0.0])
    n_list: list[int] = field(default_factory=lambda: [3])
    L1_list: list[float] = field(default_factory=lambda: [9.0])
    seeds: list[int] = field(default_factory=lambda: [0])
    output_dir: str = "results"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        for name in ("noise_levels", "n_list", "L1_list", "seeds"):
            if not getattr(self, name):
                raise ValueError(f"sweep list '{name}' must be non-empty")

    @property
    def grid_points(self) -> int:
        """Synthesis grid size on [0, L]; default spacing is 1/1500."""
        if self.estimator.M is not None:
            return self.estimator.M
        return int(round(self.truth.L * 1500)) + 1


@dataclass
class ResultRow:
    cell_index: int
    noise_level: float
    n_funcs: int
    L1: float
    seed: int
    est_nu: float = math.nan
    est_d: float = math.nan
    est_alpha: float = math.nan
    err_nu: float = math.nan
    err_d: float = math.nan
    err_alpha: float = math.nan
    err_combined: float = math.nan
    iterations: int = 0
    converged: bool = False
    error: str = ""


CSV_FIELDS = list(ResultRow.__dataclass_fields__)
_FLOAT_FIELDS = {
    "noise_level", "L1", "est_nu", "est_d", "est_alpha",
    "err_nu", "err_d", "err_alpha", "err_combined",
}


def spec_from_dict(data: dict) -> ExperimentSpec:
    data = dict(data)
    truth = TrueModel(**data.pop("truth", {}))
    est_raw = dict(data.pop("estimator", {}))
    if "dx" in est_raw:
        # spacing is a convenience alias for the grid-point count on [0, L]
        est_raw["M"] = int(round(truth.L / est_raw.pop("dx"))) + 1
    estimator = EstimatorConfig(**est_raw)
    return ExperimentSpec(truth=truth, estimator=estimator, **data)


def load_spec(path) -> ExperimentSpec:
    with open(path) as fh:
        return spec_from_dict(yaml.safe_load(fh) or {})


def _run_cell(args) -> ResultRow:
    spec, idx, noise, n, L1, seed = args
    row = ResultRow(idx, noise, n, L1, seed)
    truth = spec.truth
    try:
        ms = synthesize(truth, spec.grid_points, noise_level=noise, seed=seed)
        cfg = replace(spec.estimator, N=n, L1=L1, M=spec.grid_points)
        if spec.mode == "two-param":
            nu, d, _ = estimate_two_param(ms, cfg, truth.alpha)
            row.est_nu, row.est_d, row.est_alpha = nu, d, truth.alpha
            row.converged = True
        else:
            res = newton_estimate(ms, cfg)
            row.est_nu, row.est_d, row.est_alpha = res.nu, res.d, res.alpha
            row.iterations = len(res.iterations)
            row.converged = res.converged
        row.err_nu = abs(row.est_nu - truth.nu) / abs(truth.nu)
        row.err_d = abs(row.est_d - truth.d) / abs(truth.d)
        row.err_alpha = abs(row.est_alpha - truth.alpha) / abs(truth.alpha)
        errs = [row.err_nu, row.err_d]
        if spec.mode == "three-param":
            errs.append(row.err_alpha)
        # RMS combination (this reproduces the customary single-number column)
        row.err_combined = math.sqrt(sum(e * e for e in errs) / len(errs))
    except Exception as exc:  # recorded per-cell, the sweep continues
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def run(spec: ExperimentSpec, workers: int | None = None, quiet: bool = False) -> list[ResultRow]:
    """Run every (noise, N, L1, seed) cell; failures are recorded, not raised."""
    cells = [
        (spec, idx, noise, n, L1, seed)
        for idx, (noise, n, L1, seed) in enumerate(
            product(spec.noise_levels, spec.n_list, spec.L1_list, spec.seeds)
        )
    ]
    if workers is None:
        workers = 1 if len(cells) < 4 else 8
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_cell, cells, chunksize=1))
    else:
        rows = [_run_cell(c) for c in cells]
    rows.sort(key=lambda r: r.cell_index)
    if not quiet:
        for r in rows:
            status = r.error or ("ok" if r.converged else "not converged")
            print(
                f"cell {r.cell_index:4d} noise={r.noise_level:g} N={r.n_funcs} "
                f"L1={r.L1:g} seed={r.seed}: {status}"
            )
    return rows


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def write_rows(rows: list[ResultRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_FIELDS)
        for r in rows:
            w.writerow([_fmt(getattr(r, f)) for f in CSV_FIELDS])


def read_rows(path) -> list[ResultRow]:
    out = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            kwargs = {}
            for f, v in rec.items():
                if f in _FLOAT_FIELDS:
                    kwargs[f] = float(v)
                elif f in ("cell_index", "n_funcs", "seed", "iterations"):
                    kwargs[f] = int(v)
                elif f == "converged":
                    kwargs[f] = v == "True"
                else:
                    kwargs[f] = v
            out.append(ResultRow(**kwargs))
    return out


def write_manifest(spec: ExperimentSpec, path) -> None:
    data = {
        "fadeid_version": __version__,
        "truth": asdict(spec.truth),
        "estimator": asdict(spec.estimator),
        "mode": spec.mode,
        "noise_levels": list(spec.noise_levels),
        "n_list": list(spec.n_list),
        "L1_list": list(spec.L1_list),
        "seeds": list(spec.seeds),
        "output_dir": str(spec.output_dir),
        "grid_points": spec.grid_points,
    }
    with open(path, "w") as fh:
        yaml.safe_dump(data, fh, sort_keys=False)


def emit_plotdata(rows: list[ResultRow], outdir) -> list[Path]:
    """Tidy (x, series, value) CSVs, one per figure family.

    Failed cells are skipped.  Files are always written, with headers only
    when there is no data.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    ok = [r for r in rows if not r.error]

    files = {
        "fig_interval_length.csv": [
            (r.L1, series, getattr(r, series))
            for r in ok
            for series in ("err_nu", "err_d", "err_alpha")
        ],
        "fig_noise_levels.csv": [
            (r.noise_level, series, getattr(r, series))
            for r in ok
            for series in ("err_nu", "err_d", "err_alpha")
        ],
        "fig_modfun_count_err_d.csv": [
            (r.n_funcs, f"noise={r.noise_level:g}", r.err_d) for r in ok
        ],
        "fig_modfun_count_err_nu.csv": [
            (r.n_funcs, f"noise={r.noise_level:g}", r.err_nu) for r in ok
        ],
    }
    written = []
    for name, records in files.items():
        path = outdir / name
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "series", "value"])
            for x, series, value in records:
                w.writerow([_fmt(x), series, _fmt(value)])
        written.append(path)
    return written


def _cmd_estimate(args) -> int:
    if args.config:
        spec = load_spec(args.config)
    else:
        spec = ExperimentSpec()
    overrides = {}
    if args.n is not None:
        overrides["n_list"] = [args.n]
    if args.L1 is not None:
        overrides["L1_list"] = [args.L1]
    if args.noise is not None:
        overrides["noise_levels"] = [args.noise]
    if args.seed is not None:
        overrides["seeds"] = [args.seed]
    if args.mode is not None:
        overrides["mode"] = args.mode
    if overrides:
        spec = replace(spec, **overrides)
    row = _run_cell(
        (spec, 0, spec.noise_levels[0], spec.n_list[0], spec.L1_list[0], spec.seeds[0])
    )
    if row.error:
        print(f"estimation failed: {row.error}", file=sys.stderr)
        return 1
    if not args.quiet:
        t = spec.truth
        print(f"mode          {spec.mode}")
        print(f"noise level   {row.noise_level:g}   seed {row.seed}")
        print(f"N={row.n_funcs}  b={spec.estimator.b}  L1={row.L1:g}  "
              f"grid points {spec.grid_points}")
        print(f"nu     {row.est_nu:+.8f}   (true {t.nu:g}, rel err {row.err_nu:.3e})")
        print(f"d      {row.est_d:+.8f}   (true {t.d:g}, rel err {row.err_d:.3e})")
        print(f"alpha  {row.est_alpha:+.8f}   (true {t.alpha:g}, rel err {row.err_alpha:.3e})")
        print(f"combined rel err {row.err_combined:.3e}   "
              f"iterations {row.iterations}   converged {row.converged}")
    return 0 if row.converged else 1


def _cmd_sweep(args) -> int:
    spec = load_spec(args.config)
    if args.out:
        spec = replace(spec, output_dir=args.out)
    if args.seed:
        spec = replace(spec, seeds=[s + args.seed for s in spec.seeds])
    outdir = Path(spec.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = run(spec, workers=args.workers, quiet=args.quiet)
    write_rows(rows, outdir / "results.csv")
    write_manifest(spec, outdir / "manifest.yaml")
    emit_plotdata(rows, outdir)
    failures = [r for r in rows if r.error]
    if not args.quiet:
        print(f"{len(rows)} cells, {len(failures)} failed -> {outdir}")
    return 1 if failures else 0


def _cmd_selftest(args) -> int:
    from .selftest import run_selftest

    return 0 if run_selftest(quiet=args.quiet) else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fadeid",
        description="Parameter and differentiation-order estimation for a "
        "space fractional advection-dispersion model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_est = sub.add_parser(
        "estimate",
        help="one estimation run",
        description="Run one estimation cell and print a result summary. "
        "Defaults: truth nu=0.2 d=1 alpha=1.8 L=9 T=1, three-param mode, "
        "N=3, b=3, L1=9, alpha0=1.4, noise 0, seed 0, grid spacing 1/1500.",
    )
    p_est.add_argument("--config", help="YAML experiment spec (optional)")
    p_est.add_argument("--noise", type=float, help="noise level fraction (default 0)")
    p_est.add_argument("--seed", type=int, help="noise seed (default 0)")
    p_est.add_argument("--n", type=int, help="number of modulating functions (default 3)")
    p_est.add_argument("--L1", type=float, help="integration interval length (default 9)")
    p_est.add_argument("--mode", choices=MODES, help="estimation mode (default three-param)")
    p_est.add_argument("--quiet", action="store_true", help="suppress the summary")
    p_est.set_defaults(func=_cmd_estimate)

    p_sw = sub.add_parser(
        "sweep",
        help="full sweep from a YAML spec",
        description="Run every (noise, N, L1, seed) cell of the spec and write "
        "results.csv, manifest.yaml and per-figure plot CSVs to the output "
        "directory. Exit code is nonzero if any cell failed.",
    )
    p_sw.add_argument("--config", required=True, help="YAML experiment spec")
    p_sw.add_argument("--out", help="output directory (overrides spec)")
    p_sw.add_argument("--seed", type=int, default=0, help="offset added to every spec seed")
    p_sw.add_argument("--workers", type=int, default=None,
                      help="parallel worker cap (default: 8, or serial for tiny sweeps)")
    p_sw.add_argument("--quiet", action="store_true", help="suppress per-cell progress")
    p_sw.set_defaults(func=_cmd_sweep)

    p_st = sub.add_parser(
        "selftest",
        help="fast invariant checks",
        description="Run the built-in invariant checks (integration-by-parts "
        "identity, integer-order consistency, gradient oracles, boundary "
        "conditions) and print one PASS/FAIL line each.",
    )
    p_st.add_argument("--quiet", action="store_true", help="only report failures")
    p_st.set_defaults(func=_cmd_selftest)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
