"""Command-line front end.

Subcommands: analyze, fit, cv, and experiment {margin, hinge,
copt-table, fit-curve, bench}. Heavy outputs (CSV, PNG figures, model
files) go under --out; stdout carries a summary JSON only. A manifest
listing every produced file is written last. Exit codes: 0 ok, 2 data
error, 3 no suitable kernel, 4 solver failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import copt as copt_mod
from . import experiments as ex
from . import plots
from .cv import CvConfig, grid_search_cv
from .dataio import load_dataset, standardize
from .errors import DataError, NoSuitableKernelError, SolverError
from .select import (KernelGrid, default_kernel_grid, fit_pipeline, kernel_grid_from_json_dict,
                     select_input_space)
from .stats import pairwise_sands
from .svm import SolverConfig, model_to_json_dict


def _utc_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).replace(microsecond=0).isoformat()


class ManifestWriter:
    """Collects output paths; written last so the manifest only lists files that exist."""

    def __init__(self, command: str, config: dict, seed: int, out_dir: Path):
        self.doc = {"command": command, "config": config, "master_seed": seed,
                    "tool_version": __version__, "started_utc": _utc_now(),
                    "finished_utc": None, "outputs": []}
        self.out_dir = out_dir

    def add(self, path) -> str:
        self.doc["outputs"].append(str(path))
        return str(path)

    def write(self) -> str:
        self.doc["finished_utc"] = _utc_now()
        path = self.out_dir / "manifest.json"
        path.write_text(_dumps(self.doc) + "\n", encoding="utf-8")
        return str(path)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def _emit(obj) -> None:
    print(_dumps(obj))


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args):
    label = args.label_col
    if label is not None and label.lstrip("-").isdigit():
        label = int(label)
    d = load_dataset(args.data, args.format, label if label is not None else "label")
    if args.standardize:
        d = standardize(d)
    return d


def _parse_grid_values(text: str) -> list[float]:
    """Either 'a,b,c' or 'min:max:count' (log-spaced)."""
    if ":" in text:
        lo, hi, count = text.split(":")
        return [float(v) for v in np.geomspace(float(lo), float(hi), int(count))]
    return [float(v) for v in text.split(",")]


def _kernel_grid(args, psi: int) -> KernelGrid:
    if getattr(args, "grid", None):
        doc = json.loads(Path(args.grid).read_text(encoding="utf-8"))
        grid = kernel_grid_from_json_dict(doc)
        return KernelGrid(grid.entries, scan_dim=args.scan_dim or grid.scan_dim,
                          seed=args.seed)
    return default_kernel_grid(psi, scan_dim=args.scan_dim or 512, seed=args.seed)


def cmd_analyze(args) -> int:
    d = _load(args)
    reports = pairwise_sands(d, None, args.alpha, args.mode, sigma_floor=1e-9)
    sel = select_input_space(d, args.alpha, args.mode)
    doc = {
        "dataset": {"path": args.data, "n": d.n, "psi": d.psi, "r": d.r},
        "standardization": d.meta.get("standardization"),
        "pairwise": [{"pair": list(p), **r.to_json_dict()} for p, r in sorted(reports.items())],
        "min_pair": list(sel.input_min_pair),
        "min_sands": sel.input_sands.to_json_dict(),
        "verdict": sel.input_sands.verdict.value,
        "copt": sel.chosen.copt.to_json_dict() if sel.chosen else None,
    }
    if args.out:
        out = _out_dir(args)
        manifest = ManifestWriter("analyze", _config_echo(args), args.seed, out)
        path = out / "analyze.json"
        path.write_text(_dumps(doc) + "\n", encoding="utf-8")
        manifest.add(path)
        manifest.write()
    _emit(doc)
    return 0


def cmd_fit(args) -> int:
    d = _load(args)
    out = _out_dir(args)
    manifest = ManifestWriter("fit", _config_echo(args), args.seed, out)
    grid = _kernel_grid(args, d.psi)
    cfg = SolverConfig(seed=args.seed)
    ovo, report = fit_pipeline(d, grid, args.alpha, cfg, args.mode, train_dim=args.train_dim)
    model_files = []
    for (i, j), model in sorted(ovo.models.items()):
        path = out / f"model_{i}_{j}.json"
        path.write_text(_dumps(model_to_json_dict(model)) + "\n", encoding="utf-8")
        manifest.add(path)
        model_files.append(str(path))
    report_path = out / "selection_report.json"
    report_path.write_text(_dumps(report.to_json_dict()) + "\n", encoding="utf-8")
    manifest.add(report_path)
    manifest_path = manifest.write()
    _emit({"mode": report.mode,
           "chosen": report.chosen.to_json_dict() if report.chosen else None,
           "models": model_files, "selection_report": str(report_path),
           "manifest": manifest_path})
    return 0


def cmd_cv(args) -> int:
    d = _load(args)
    out = _out_dir(args)
    manifest = ManifestWriter("cv", _config_echo(args), args.seed, out)
    grid = _kernel_grid(args, d.psi)
    cfg = CvConfig(kernel_grid=grid, folds=args.folds,
                   c_grid=tuple(_parse_grid_values(args.c_grid)),
                   score=args.score, seed=args.seed)
    result = grid_search_cv(d, cfg, SolverConfig(seed=args.seed))
    path = out / "cv_result.json"
    path.write_text(_dumps(result.to_json_dict()) + "\n", encoding="utf-8")
    manifest.add(path)
    manifest_path = manifest.write()
    _emit({"best": {"spec": result.best_spec.to_json_dict(), "c": result.best_c},
           "score": result.score, "fit_count": result.fit_count,
           "cv_result": str(path), "manifest": manifest_path})
    return 0


def _solver_cfg(args) -> SolverConfig:
    return SolverConfig(max_epochs=args.max_epochs, tolerance=args.tolerance, seed=args.seed)


def cmd_experiment_margin(args) -> int:
    out = _out_dir(args)
    manifest = ManifestWriter("experiment margin", _config_echo(args), args.seed, out)
    c_grid = _parse_grid_values(args.c_grid)
    cases = [
        ("case1 n=(2000,2000) s=(0.12,0.12)", 0.12, 0.12, 2000, 2000),
        ("case2 n=(1000,2000) s=(0.09,0.132484)", 0.09, 0.132484, 1000, 2000),
        ("case3 n=(1000,2500) s=(0.16,0.099600)", 0.16, 0.099600, 1000, 2500),
    ]
    results = []
    for k, (label, s1, s2, n1, n2) in enumerate(cases):
        spec = ex.GaussianPairSpec((0.0, 0.0), (1.0, 0.0), s1, s2, n1, n2,
                                   seed=ex.derive_seed(args.seed, 100 + k))
        res = ex.sweep(spec, c_grid, "margin_width", args.runs, _solver_cfg(args), jobs=args.jobs)
        csv_path = out / f"margin_case{k + 1}.csv"
        ex.write_sweep_csv(res, csv_path)
        manifest.add(csv_path)
        results.append((label, res))
    fig_path = manifest.add(plots.plot_margin_cases(results, out / "margin.png"))
    manifest_path = manifest.write()
    _emit({"cases": [label for label, _ in results], "runs": args.runs,
           "figure": fig_path, "manifest": manifest_path})
    return 0


def cmd_experiment_hinge(args) -> int:
    out = _out_dir(args)
    manifest = ManifestWriter("experiment hinge", _config_echo(args), args.seed, out)
    c_grid = _parse_grid_values(args.c_grid)
    spec = ex.GaussianPairSpec((0.0, 0.0), (1.0, 0.0), args.sigma, args.sigma,
                               args.n, args.n, seed=ex.derive_seed(args.seed, 0))
    curves = {}
    for quantity in ("train_hinge", "test_hinge"):
        res = ex.sweep(spec, c_grid, quantity, args.runs, _solver_cfg(args), jobs=args.jobs)
        csv_path = out / f"hinge_{quantity}.csv"
        ex.write_sweep_csv(res, csv_path)
        manifest.add(csv_path)
        curves[quantity] = res
    test = curves["test_hinge"]
    argmin_c = float(test.c_values[int(np.nanargmin(test.mean_curve))])
    fig_path = manifest.add(plots.plot_hinge_curves(curves["train_hinge"], test,
                                                    out / "hinge.png", args.sigma))
    manifest_path = manifest.write()
    _emit({"sigma": args.sigma, "runs": args.runs, "empirical_c_opt": argmin_c,
           "figure": fig_path, "manifest": manifest_path})
    return 0


def cmd_experiment_copt_table(args) -> int:
    out = _out_dir(args)
    manifest = ManifestWriter("experiment copt-table", _config_echo(args), args.seed, out)
    sigma_grid = [float(v) for v in args.sigma_grid.split(",")]
    rows = ex.empirical_copt_table(sigma_grid, d=1.0, runs=args.runs,
                                   c_grid=_parse_grid_values(args.c_grid),
                                   solver_cfg=_solver_cfg(args), n_per_class=args.n,
                                   master_seed=args.seed, jobs=args.jobs,
                                   tie_rtol=args.tie_rtol)
    csv_path = out / "copt_table.csv"
    ex.write_copt_table_csv(rows, csv_path)
    manifest.add(csv_path)
    fig_path = manifest.add(plots.plot_copt_table(rows, out / "copt_table.png"))
    closed = copt_mod.c_opt_table([sod for sod, _ in rows])
    manifest_path = manifest.write()
    _emit({"rows": [{"sigma_over_d": sod, "empirical_c_opt": c,
                     "closed_form_c_opt": closed[k][2]} for k, (sod, c) in enumerate(rows)],
           "csv": str(csv_path), "figure": fig_path, "manifest": manifest_path})
    return 0


def cmd_experiment_fit_curve(args) -> int:
    out = _out_dir(args)
    manifest = ManifestWriter("experiment fit-curve", _config_echo(args), args.seed, out)
    points = []
    with open(args.input, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        for line in fh:
            vals = line.strip().split(",")
            if len(vals) >= 2:
                points.append((float(vals[0]), float(vals[1])))
    points.sort()
    rising = [p for p in points if p[0] <= 1.0 / 6.0]
    falling = [p for p in points if p[0] > 1.0 / 6.0]
    doc = {"published": {"rising": list(copt_mod.INCREASING_FIT),
                         "falling": list(copt_mod.DECREASING_FIT)},
           "fitted": {}}
    for branch, pts in (("rising", rising), ("falling", falling)):
        if len(pts) < 4:
            doc["fitted"][branch] = {"error": f"only {len(pts)} points"}
            continue
        a, b, c, rmse = ex.fit_exponential(pts)
        doc["fitted"][branch] = {"a": a, "b": b, "c": c, "rmse": rmse}
        fig = plots.plot_fit_curve(pts, (a, b, c), out / f"fit_curve_{branch}.png",
                                   label=f"{branch} branch")
        manifest.add(fig)
    path = out / "fit_curve.json"
    path.write_text(_dumps(doc) + "\n", encoding="utf-8")
    manifest.add(path)
    manifest_path = manifest.write()
    _emit({**doc, "json": str(path), "manifest": manifest_path})
    return 0


BENCH_DATASETS = ("iris", "banknote", "haberman", "pima", "balance", "hayes-roth")


def cmd_experiment_bench(args) -> int:
    out = _out_dir(args)
    manifest = ManifestWriter("experiment bench", _config_echo(args), args.seed, out)
    names = args.datasets.split(",") if args.datasets else list(BENCH_DATASETS)
    datasets, missing = [], []
    for name in names:
        path = Path(args.data_dir) / f"{name}.csv"
        if not path.exists():
            missing.append(name)
            print(f"skipping {name}: {path} not found "
                  f"(run scripts/fetch_datasets.py on a networked machine)", file=sys.stderr)
            continue
        datasets.append((name, load_dataset(path, "csv", "label")))
    rows = ex.benchmark_compare(datasets, cv_folds=args.folds,
                                cv_c_grid=_parse_grid_values(args.c_grid),
                                solver_cfg=_solver_cfg(args), seed=args.seed,
                                train_dim=args.train_dim, scan_dim=args.scan_dim or 512,
                                alpha=args.alpha, mode=args.mode)
    csv_path = out / "bench.csv"
    ex.write_benchmark_csv(rows, csv_path)
    manifest.add(csv_path)
    fig_path = None
    if any(not r.get("error") for r in rows):
        fig_path = manifest.add(plots.plot_benchmark(rows, out / "bench.png"))
    manifest_path = manifest.write()
    _emit({"rows": [{k: row.get(k) for k in ("dataset", "f1_cv_f1", "f1_cv_hinge",
                                             "f1_sandsrb", "t_cv_f1", "t_cv_hinge",
                                             "t_sandsrb", "sands_min_db", "error")}
                    for row in rows],
           "missing": missing, "csv": str(csv_path), "figure": fig_path,
           "manifest": manifest_path})
    return 0


def _config_echo(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "func" and v is not None}


def _add_data_args(p):
    p.add_argument("data", help="dataset file")
    p.add_argument("--format", choices=("csv", "libsvm"), default="csv")
    p.add_argument("--label-col", default=None, help="label column name or index (csv)")
    p.add_argument("--standardize", action=argparse.BooleanOptionalAction, default=True)


def _add_common(p, out_required=False):
    p.add_argument("--alpha", type=float, default=6.0)
    p.add_argument("--mode", choices=("directional", "pooled"), default="directional")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", default=None, required=out_required, help="output directory")


def _add_solver(p):
    p.add_argument("--max-epochs", type=int, default=1000)
    p.add_argument("--tolerance", type=float, default=1e-4)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sandsvm",
                                     description="S&S-ratio based SVM model selection toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="pairwise S&S reports and separability verdict")
    _add_data_args(p)
    _add_common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("fit", help="run the S&S selection pipeline and train models")
    _add_data_args(p)
    _add_common(p, out_required=True)
    p.add_argument("--grid", default=None, help="kernel grid JSON file")
    p.add_argument("--scan-dim", type=int, default=None)
    p.add_argument("--train-dim", type=int, default=2048)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("cv", help="grid-search cross-validation baseline")
    _add_data_args(p)
    _add_common(p, out_required=True)
    p.add_argument("--grid", default=None, help="kernel grid JSON file")
    p.add_argument("--scan-dim", type=int, default=None)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--c-grid", default="0.01:1000:13")
    p.add_argument("--score", choices=("f1", "hinge"), default="f1")
    p.set_defaults(func=cmd_cv)

    pe = sub.add_parser("experiment", help="Monte Carlo reproductions and benchmarks")
    esub = pe.add_subparsers(dest="subcommand", required=True)

    p = esub.add_parser("margin", help="margin width vs C for three equal-spread cases")
    _add_common(p, out_required=True)
    _add_solver(p)
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--c-grid", default="0.1:1000:25")
    p.set_defaults(func=cmd_experiment_margin)

    p = esub.add_parser("hinge", help="train/test hinge vs C for one sigma")
    _add_common(p, out_required=True)
    _add_solver(p)
    p.add_argument("--sigma", type=float, default=0.16)
    p.add_argument("--n", type=int, default=1000, help="points per class")
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--c-grid", default="0.1:1000:25")
    p.set_defaults(func=cmd_experiment_hinge)

    p = esub.add_parser("copt-table", help="empirical optimal C per sigma/d")
    _add_common(p, out_required=True)
    _add_solver(p)
    p.add_argument("--sigma-grid", default="0.06,0.08,0.10,0.12,0.14,0.16,0.18,0.20,0.24,0.28")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--c-grid", default="0.1:1000:25")
    p.add_argument("--tie-rtol", type=float, default=0.0,
                   help="treat means within this relative width of the minimum as tied "
                        "(picks the smallest C among ties)")
    p.set_defaults(func=cmd_experiment_copt_table)

    p = esub.add_parser("fit-curve", help="refit the exponential curves from a copt table CSV")
    _add_common(p, out_required=True)
    p.add_argument("--input", required=True, help="CSV from experiment copt-table")
    p.set_defaults(func=cmd_experiment_fit_curve)

    p = esub.add_parser("bench", help="S&S-RB vs grid-search CV on dataset files")
    _add_common(p, out_required=True)
    _add_solver(p)
    p.add_argument("--data-dir", default="data")
    p.add_argument("--datasets", default=None, help="comma list; default the curated subset")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--c-grid", default="0.01:1000:13")
    p.add_argument("--scan-dim", type=int, default=None)
    p.add_argument("--train-dim", type=int, default=2048)
    p.set_defaults(func=cmd_experiment_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NoSuitableKernelError as exc:
        print(f"no suitable kernel: {exc}", file=sys.stderr)
        return 3
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
