"""Replicated metamodel studies on the benchmark models.

For every design size ``n`` and replication ``r`` a fresh LHS design is
drawn from ``stream(seed, n, r)``; the requested surrogates are fitted,
scored by Q^2 on one test set shared by the whole run, and their Sobol'
indices are computed (analytic for PCE, GP realizations for GP).

Outputs in ``out_dir``:

* ``replications.csv``: one row per (method, n, r);
* ``summary.csv``: per (method, n, quantity) quantiles and RMSE against the
  benchmark references;
* ``timing.json``: wall times (kept out of the CSVs so those stay
  byte-identical between runs).
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import benchmarks
from .errors import ArgumentError, DegenerateModelError, ExperimentError, MetasensError
from .rng import stream

log = logging.getLogger(__name__)

METHODS = ("pce", "gp")
QUANTILES = (0.0, 0.25, 0.5, 0.75, 1.0)
FAILURE_LIMIT = 0.5


def q2(predictions, truths) -> float:
    """Nash-Sutcliffe coefficient 1 - sum (G - G_hat)^2 / sum (G - mean G)^2."""
    pred = np.asarray(predictions, dtype=float).ravel()
    truth = np.asarray(truths, dtype=float).ravel()
    if pred.shape != truth.shape:
        raise ArgumentError("predictions and truths differ in length")
    if truth.size < 2:
        raise ArgumentError("Q2 needs at least two test points")
    denom = float(np.sum((truth - truth.mean()) ** 2))
    if denom == 0.0:
        raise DegenerateModelError("test responses are constant; Q2 is undefined")
    return 1.0 - float(np.sum((truth - pred) ** 2)) / denom


@dataclass
class PceOptions:
    p_min: int = 1
    p_max: int = 10
    oversampling: float = 2.0


@dataclass
class GpOptions:
    trend: object = "constant"           # constant | linear | ishigami | list of exponent rows
    family: str = "matern"
    mode: str = "tensorized"
    nu: float = 2.5
    estimator: str = "max_likelihood"
    n_starts: int = 10
    N: int = 10_000
    m: int = 100
    sobol: bool = True


@dataclass
class ExperimentConfig:
    benchmark: str
    sizes: list
    method: str = "both"
    replications: int = 100
    n_test: int = 10_000
    seed: int = 0
    out_dir: str = "results"
    threads: int = 1
    pce: PceOptions = field(default_factory=PceOptions)
    gp: GpOptions = field(default_factory=GpOptions)

    def __post_init__(self):
        if self.method not in ("pce", "gp", "both"):
            raise ArgumentError(f"unknown method {self.method!r}")
        if self.replications < 1:
            raise ArgumentError("replications must be >= 1")
        if self.n_test < 2:
            raise ArgumentError("n_test must be >= 2")
        self.sizes = [int(n) for n in self.sizes]
        if not self.sizes or min(self.sizes) < 2:
            raise ArgumentError("design sizes must be integers >= 2")
        if isinstance(self.pce, dict):
            self.pce = PceOptions(**self.pce)
        if isinstance(self.gp, dict):
            self.gp = GpOptions(**self.gp)

    @property
    def methods(self):
        return METHODS if self.method == "both" else (self.method,)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        if "out" in data:
            data["out_dir"] = data.pop("out")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ArgumentError(f"invalid experiment config: {exc}") from None

    @classmethod
    def from_yaml(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            data = yaml.safe_load(fh)
        if not isinstance(data, dict):
            raise ArgumentError("experiment config must be a mapping")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)


def _trend(spec, d):
    from .gp import TrendSpec, ishigami_trend

    if spec == "constant":
        return TrendSpec.constant(d)
    if spec == "linear":
        return TrendSpec.linear(d)
    if spec == "ishigami":
        return ishigami_trend()
    if isinstance(spec, (list, tuple)):
        return TrendSpec(spec)
    raise ArgumentError(f"unknown trend {spec!r}")


@dataclass
class _Task:
    method: str
    n: int
    r: int


def _run_pce(config, case, design, y, test_x, test_y):
    from .pce import adaptive_fit

    o = config.pce
    model = adaptive_fit(design, y, p_min=o.p_min, p_max=o.p_max, oversampling=o.oversampling)
    S = model.sobol_indices("first_order").vector("first")
    return {
        "q2": q2(model.predict(test_x), test_y),
        "S": S,
        "std": np.full(case.d, math.nan),
        "fit": f"p={model.degree}",
        "loo": model.normalized_loo_error,
    }


def _run_gp(config, case, design, y, test_x, test_y, seed):
    from .gp import Kernel, fit
    from .sobol import gp_sobol

    o = config.gp
    kernel = Kernel(o.family, None, 1.0, o.mode, o.nu)
    model = fit(
        design.points, y, _trend(o.trend, case.d), kernel, o.estimator,
        n_starts=o.n_starts, seed=seed,
    )
    S = np.full(case.d, math.nan)
    std = np.full(case.d, math.nan)
    if o.sobol:
        rep = gp_sobol(model, case.input_model, None, o.N, o.m, seed)
        S, std = rep.vector("first"), np.array([e.std for e in rep.entries])
    e = model.loo_residuals()
    return {
        "q2": q2(model.mean(test_x), test_y),
        "S": S,
        "std": std,
        "fit": "theta=" + ";".join(repr(float(t)) for t in model.theta),
        "loo": float(np.mean(e * e) / np.var(y)),
    }


def _run_one(config, case, task, test_x, test_y):
    seed = (config.seed, task.n, task.r)
    t0 = time.perf_counter()
    row = {"method": task.method, "n": task.n, "replication": task.r, "status": "ok", "error": ""}
    try:
        design = case.input_model.sample(task.n, "lhs", seed)
        y = case.evaluator(design.points)
        if task.method == "pce":
            res = _run_pce(config, case, design, y, test_x, test_y)
        else:
            res = _run_gp(config, case, design, y, test_x, test_y, seed)
        row.update(res)
    except MetasensError as exc:
        row.update(status="failed", error=exc.category, q2=math.nan, fit="", loo=math.nan,
                   S=np.full(case.d, math.nan), std=np.full(case.d, math.nan))
        log.warning("%s n=%d r=%d failed: %s", task.method, task.n, task.r, exc)
    return row, time.perf_counter() - t0


def _fmt(v):
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else repr(float(v))


def replication_columns(names):
    return (
        ["method", "n", "replication", "status", "error", "q2", "loo_error", "fit"]
        + [f"S_{n}" for n in names]
        + [f"std_{n}" for n in names]
    )


def _replication_record(row, names):
    rec = {
        "method": row["method"], "n": row["n"], "replication": row["replication"],
        "status": row["status"], "error": row["error"], "q2": _fmt(row["q2"]),
        "loo_error": _fmt(row["loo"]), "fit": row["fit"],
    }
    for nm, s, sd in zip(names, row["S"], row["std"]):
        rec[f"S_{nm}"] = _fmt(s)
        rec[f"std_{nm}"] = _fmt(sd)
    return rec


SUMMARY_COLUMNS = ("method", "n", "quantity", "count", "min", "q25", "median", "q75", "max", "reference", "rmse")


def summarize(records, names, references) -> list:
    """Summary rows from replication records (as written to replications.csv)."""
    out = []
    keys = []
    for rec in records:
        k = (rec["method"], int(rec["n"]))
        if k not in keys:
            keys.append(k)
    for method, n in keys:
        group = [r for r in records if r["method"] == method and int(r["n"]) == n and r["status"] == "ok"]
        for qty in ["q2"] + [f"S_{nm}" for nm in names]:
            vals = np.array([float(r[qty]) for r in group if r[qty] != ""])
            ref = math.nan
            if qty.startswith("S_"):
                ref = references.get(qty[2:], math.nan)
            row = {"method": method, "n": n, "quantity": qty, "count": int(vals.size)}
            qs = np.quantile(vals, QUANTILES) if vals.size else [math.nan] * len(QUANTILES)
            for col, v in zip(("min", "q25", "median", "q75", "max"), qs):
                row[col] = _fmt(v)
            row["reference"] = _fmt(ref)
            rmse = math.sqrt(float(np.mean((vals - ref) ** 2))) if vals.size and not math.isnan(ref) else math.nan
            row["rmse"] = _fmt(rmse)
            out.append(row)
    return out


def _write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


@dataclass
class ExperimentResult:
    records: list
    summary: list
    out_dir: Path
    wall_times: dict


def run_experiment(config: ExperimentConfig, threads: int | None = None) -> ExperimentResult:
    case = benchmarks.get(config.benchmark)
    names = case.input_model.names
    test = case.input_model.sample(config.n_test, "mc", (config.seed, "test"))
    test_x = test.points
    test_y = case.evaluator(test_x)
    tasks = [_Task(m, n, r) for m in config.methods for n in config.sizes for r in range(config.replications)]
    threads = threads or config.threads
    with warnings.catch_warnings():
        # boundary optima are recorded through the fit diagnostics instead
        warnings.simplefilter("ignore", UserWarning)
        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                results = list(pool.map(lambda t: _run_one(config, case, t, test_x, test_y), tasks))
        else:
            results = [_run_one(config, case, t, test_x, test_y) for t in tasks]

    records = [_replication_record(row, names) for row, _ in results]
    refs = {nm: v for nm, (v, _) in case.references.items()}
    summary = summarize(records, names, refs)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "replications.csv", replication_columns(names), records)
    _write_csv(out / "summary.csv", SUMMARY_COLUMNS, summary)
    wall = {f"{t.method}/{t.n}/{t.r}": dt for t, (_, dt) in zip(tasks, results)}
    (out / "timing.json").write_text(json.dumps(wall, indent=1) + "\n")

    for method in config.methods:
        for n in config.sizes:
            rows = [r for r in records if r["method"] == method and r["n"] == n]
            failed = sum(r["status"] != "ok" for r in rows)
            if failed > FAILURE_LIMIT * len(rows):
                raise ExperimentError(f"{method} at n={n}: {failed} of {len(rows)} replications failed")
    return ExperimentResult(records, summary, out, wall)


def read_replications(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
