"""epsilon sweeps of the solver, lifespan fits and report files.

Records are written one JSON file per eps as soon as they finish, so an
interrupted sweep picks up where it stopped.  Every file that ends up in a
report is produced from sorted, wall-clock-free data and is byte-stable.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .errors import InsufficientData, InvalidParams, OutsideTheorem
from .exponents import ProblemClass, Tag, classify_regime, exponent_table, theorem_exponent, \
    theta_exponent
from .wavesolver import ModelParams, Status, integrate

SLOPE_SLACK = 0.15
MONOTONE_SLACK = 0.02
MIN_RECORDS = 4
MIN_DECADES = 0.7


@dataclass(frozen=True)
class SweepConfig:
    mp_template: ModelParams
    eps_values: tuple
    T_cap: float
    grid_levels: int = 2
    output_dir: str = "sweep_out"
    seed: int = 0
    dr: float | None = None
    cfl: float = 0.9
    blow_threshold: float = 1e6

    def __post_init__(self):
        eps = np.asarray(self.eps_values, dtype=float)
        if eps.size == 0 or np.any(eps <= 0):
            raise InvalidParams("eps_values must be positive and nonempty")
        if np.any(np.diff(eps) >= 0):
            raise InvalidParams("eps_values must be strictly decreasing")
        if self.grid_levels < 2:
            raise InvalidParams("grid_levels must be at least 2")
        if not self.T_cap > 0:
            raise InvalidParams("T_cap must be positive")


@dataclass(frozen=True)
class LifespanRecord:
    eps: float
    T_est: float
    T_refined: float
    status: str
    wall_time: float = 0.0


class FitModel(enum.Enum):
    POWER_LAW = "PowerLaw"
    DOUBLE_EXP = "DoubleExp"


@dataclass(frozen=True)
class ScalingFit:
    model: FitModel
    slope: float
    intercept: float
    r_squared: float
    theory_exponent: float
    consistent: bool | None
    n_records: int
    eps_min: float
    eps_max: float
    comparison: str = "bound-consistency"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["model"] = self.model.value
        return d


def _record_path(out: Path, eps: float) -> Path:
    return out / "records" / f"eps_{eps!r}.json"


def _run_one(args) -> LifespanRecord:
    mp, T_cap, dr, cfl, thr, levels = args
    rep = integrate(mp, T_cap, dr=dr, cfl=cfl, blow_threshold=thr, levels=levels)
    return LifespanRecord(mp.eps, rep.T_est, rep.T_refined, rep.status.value,
                          rep.diagnostics.get("wall_time", 0.0))


def _write_json(path: Path, obj) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    try:
        with open(tmp, "w") as fh:
            json.dump(_jsonable(obj), fh, sort_keys=True, indent=2)
            fh.write("\n")
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _load_record(path: Path) -> LifespanRecord:
    with open(path) as fh:
        d = json.load(fh)
    return LifespanRecord(float(d["eps"]), _unjson(d["T_est"]), _unjson(d["T_refined"]),
                          d["status"], float(d.get("wall_time", 0.0)))


def run_sweep(cfg: SweepConfig, threads: int = 1, progress=None) -> list[LifespanRecord]:
    """One record per eps (in cfg order); finished records on disk are reused."""
    out = Path(cfg.output_dir)
    (out / "records").mkdir(parents=True, exist_ok=True)
    done, todo = {}, []
    for eps in cfg.eps_values:
        path = _record_path(out, float(eps))
        if path.exists():
            done[float(eps)] = _load_record(path)
        else:
            todo.append(float(eps))
    jobs = [(replace(cfg.mp_template, eps=e), cfg.T_cap, cfg.dr, cfg.cfl, cfg.blow_threshold,
             cfg.grid_levels) for e in todo]

    def store(rec):
        # wall time stays in memory only, so record files are reproducible byte for byte
        _write_json(_record_path(out, rec.eps),
                    {k: v for k, v in asdict(rec).items() if k != "wall_time"})
        done[rec.eps] = rec
        if progress:
            progress(rec)

    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for rec in pool.map(_run_one, jobs):
                store(rec)
    else:
        for job in jobs:
            store(_run_one(job))
    return [done[float(e)] for e in cfg.eps_values]


def _lstsq(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    fit = slope * x + intercept
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum((y - fit) ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def usable_records(records) -> list[LifespanRecord]:
    return sorted((r for r in records
                   if r.status == Status.BLOWUP.value and math.isfinite(r.T_refined)
                   and r.T_refined > 0), key=lambda r: r.eps)


def fit_lifespan(records, pc: ProblemClass, min_decades: float = MIN_DECADES) -> ScalingFit:
    """Least-squares lifespan fit in the coordinates of the applicable bound.

    Subcritical: log T against log(1/eps), consistent iff the slope stays below
    theta (1 + 15%).  Critical: log log T against log(1/eps), consistent iff
    that model beats the power law in r^2.  Without a proven bound the fit is
    still reported but never called consistent.
    """
    recs = usable_records(records)
    if len(recs) < MIN_RECORDS:
        raise InsufficientData(f"need {MIN_RECORDS} blowup records, have {len(recs)}")
    eps = np.array([r.eps for r in recs])
    T = np.array([r.T_refined for r in recs])
    if math.log10(eps.max() / eps.min()) < min_decades - 1e-12:
        raise InsufficientData(f"eps spans less than {min_decades} decades")
    x = np.log(1.0 / eps)
    regime = classify_regime(pc)
    slope, intercept, r2 = _lstsq(x, np.log(T))
    common = dict(n_records=len(recs), eps_min=float(eps.min()), eps_max=float(eps.max()))
    if regime.tag is Tag.CRITICAL:
        if np.all(T > 1.0):
            ds, di, dr2 = _lstsq(x, np.log(np.log(T)))
            return ScalingFit(FitModel.DOUBLE_EXP, ds, di, dr2, theorem_exponent(pc),
                              bool(dr2 > r2), **common)
        return ScalingFit(FitModel.DOUBLE_EXP, math.nan, math.nan, math.nan,
                          theorem_exponent(pc), None, **common)
    if regime.tag is Tag.OUTSIDE:
        return ScalingFit(FitModel.POWER_LAW, slope, intercept, r2, math.nan, None, **common)
    theta = theta_exponent(pc)
    return ScalingFit(FitModel.POWER_LAW, slope, intercept, r2, theta,
                      bool(slope <= theta * (1.0 + SLOPE_SLACK)), **common)


def fit_double_exp(eps, T) -> tuple[float, float, float]:
    """(slope, intercept, r^2) of log log T against log(1/eps)."""
    eps, T = np.asarray(eps, dtype=float), np.asarray(T, dtype=float)
    return _lstsq(np.log(1.0 / eps), np.log(np.log(T)))


def monotone_violations(records, slack: float = MONOTONE_SLACK) -> list[tuple[float, float]]:
    """Pairs (eps_small, eps_large) where T_refined(eps_small) < (1 - slack) T_refined(eps_large)."""
    recs = usable_records(records)
    bad = []
    for i, a in enumerate(recs):
        for b in recs[i + 1:]:
            if a.T_refined < (1.0 - slack) * b.T_refined:
                bad.append((a.eps, b.eps))
    return bad


def _jsonable(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else ("inf" if obj > 0 else "-inf" if obj < 0 else "nan")
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    return obj


def _unjson(v):
    return float(v) if isinstance(v, str) else (math.nan if v is None else float(v))


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, round-trip floats, non-finite values as strings."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def _fmt(x: float) -> str:
    return repr(float(x))


def emit_report(records, fit: ScalingFit | None, pc: ProblemClass, output_dir,
                fit_error: str | None = None) -> dict:
    """Write sweep.csv, fit.json and plotdata/ under output_dir; return the fit payload."""
    out = Path(output_dir)
    plot = out / "plotdata"
    try:
        plot.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {plot}: {exc}") from exc
    rows = sorted(records, key=lambda r: -r.eps)
    path = out / "sweep.csv"
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["eps", "T_est", "T_refined", "status"])
            for r in rows:
                w.writerow([_fmt(r.eps), _fmt(r.T_est), _fmt(r.T_refined), r.status])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc

    table = exponent_table(pc)
    try:
        table["theorem_exponent"] = theorem_exponent(pc)
    except OutsideTheorem:
        table["theorem_exponent"] = None
    payload = {"problem": {"N": pc.N, "mu": pc.mu, "p": pc.p}, "theory": table}
    if fit is None:
        payload.update({"model": None, "slope": None, "intercept": None, "r_squared": None,
                        "theory_exponent": table["theta"], "consistent": None,
                        "note": fit_error or "insufficient data"})
    else:
        payload.update(fit.to_dict())
    payload["monotone_violations"] = [list(v) for v in monotone_violations(records)]
    _write_json(out / "fit.json", payload)

    used = usable_records(records)
    _write_columns(plot / "lifespan.dat", "# eps T_refined",
                   [(r.eps, r.T_refined) for r in used])
    _write_columns(plot / "lifespan_log.dat", "# log(1/eps) log(T_refined)",
                   [(math.log(1.0 / r.eps), math.log(r.T_refined)) for r in used])
    return payload


def _write_columns(path: Path, header: str, rows) -> None:
    try:
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for a, b in rows:
                fh.write(f"{_fmt(a)} {_fmt(b)}\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_sweep_csv(path) -> list[LifespanRecord]:
    try:
        with open(path, newline="") as fh:
            return [LifespanRecord(float(r["eps"]), float(r["T_est"]), float(r["T_refined"]),
                                   r["status"]) for r in csv.DictReader(fh)]
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
