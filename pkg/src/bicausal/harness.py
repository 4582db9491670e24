"""Sweep execution, per-simulation parameter presets, correlation matrices,
timing capture and CSV/manifest persistence."""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import spearmanr

from . import crossmap, info, regress, simulate
from .core import (
    STATUS_DEGENERATE,
    STATUS_SKIPPED_SYNCHRONY,
    EmbeddingSpec,
    IndexEstimate,
    SeriesPair,
    embed,
)
from .errors import BicausalError, ValidationError
from .perturb import ULAM_SYNC_WINDOWS, PerturbationSpec, apply_perturbation

SIMULATIONS = ("lp", "ulam", "henon_uni", "henon_bi_i", "henon_bi_ni")
INDEX_NAMES = ("egc", "nlgc", "pi", "te_hist", "ete_hist", "te_ksg", "ctir",
               "si1", "si2", "ccm")

CSV_HEADER = ["simulation", "lambda_xy", "lambda_yx", "run", "index",
              "direction", "value", "elapsed_seconds", "status"]

PRESETS_VERSION = "reference-parameters-v1"


# ---------------------------------------------------------------------------
# per-simulation index parameter presets


def _nearest(table: dict, T: int):
    key = min(table, key=lambda t: (abs(math.log(T / t)), t))
    return table[key]


def index_presets(simulation: str, T: int) -> dict:
    """Reference parameter set for every index on one simulated system.

    Values follow the published benchmark configuration; T values between
    the listed sizes fall back to the nearest listed size (log scale).
    """
    if simulation not in SIMULATIONS:
        raise ValidationError(f"unknown simulation {simulation!r}")
    lp = simulation == "lp"
    ulam = simulation == "ulam"
    henon_bi = simulation.startswith("henon_bi")

    m_common = 1 if ulam else 2
    if lp:
        egc = regress.EgcParams(L=20, delta=0.8)
    elif ulam:
        egc = regress.EgcParams(L=100, delta=_nearest({10**3: 0.5, 10**5: 0.2}, T))
    elif henon_bi:
        egc = regress.EgcParams(L=100, delta=0.6)
    else:
        egc = regress.EgcParams(L=100, delta=_nearest({10**3: 0.5, 10**4: 0.3, 10**5: 0.2}, T))

    if lp or henon_bi:
        nlgc_P = 10
    elif ulam:
        nlgc_P = 50
    else:
        nlgc_P = _nearest({10**3: 50, 10**4: 50, 10**5: 100}, T)

    return {
        "m": m_common,
        "tau": 1,
        "h": 1,
        "egc": egc,
        "nlgc": regress.NlgcParams(P=nlgc_P, var=0.05),
        "pi": regress.PiParams(R=10 if lp else 1, include_self=True),
        "pi_m": 1 if lp else m_common,
        "te_hist": info.HistParams(N=8),
        "ete_hist": info.EteParams(n_shuffle=10),
        "te_ksg": info.KsgParams(k=4),
        "ctir": info.CtirParams(tau_max=20 if lp else 5, k=4),
        "si1": crossmap.SiParams(R=10 if lp else 20),
        "si2": crossmap.SiParams(R=30 if lp else (100 if henon_bi else 20)),
        "ccm": crossmap.CcmParams(n_t=40, delta_rho=0.05),
    }


# ---------------------------------------------------------------------------
# sweep configuration and records


def _coupling_range(simulation: str) -> float:
    return 0.4 if simulation.startswith("henon_bi") else 1.0


def normalize_point(simulation: str, coupling) -> tuple[float, float]:
    """Map a user grid entry to the (lambda_xy, lambda_yx) pair. Accepts an
    already-normalized pair for any simulation (idempotent)."""
    hi = _coupling_range(simulation)
    if isinstance(coupling, (tuple, list)):
        lxy, lyx = (float(coupling[0]), float(coupling[1]))
        if not simulation.startswith("henon_bi"):
            dead_axis = lxy if simulation == "lp" else lyx
            if dead_axis != 0.0:
                raise ValidationError(
                    f"{simulation} sweeps one coupling; the other must be 0")
    elif simulation.startswith("henon_bi"):
        lam = float(coupling)
        lxy, lyx = lam, lam
    else:
        lam = float(coupling)
        lxy, lyx = (0.0, lam) if simulation == "lp" else (lam, 0.0)
    for v in (lxy, lyx):
        if not 0.0 <= v <= hi:
            raise ValidationError(f"coupling {v} outside [0, {hi}] for {simulation}")
    return (lxy, lyx)


def desk_grid(simulation: str, step: float = 0.05) -> list:
    hi = _coupling_range(simulation)
    vals = [round(step * i, 10) for i in range(int(round(hi / step)) + 1)]
    if simulation.startswith("henon_bi"):
        return [(a, b) for a in vals for b in vals]
    return vals


def paper_grid(simulation: str) -> list:
    return desk_grid(simulation, step=0.01)


DEFAULT_T = {"lp": 10**4, "ulam": 10**3, "henon_uni": 10**3,
             "henon_bi_i": 10**4, "henon_bi_ni": 10**4}


@dataclass(frozen=True)
class SweepConfig:
    simulation: str
    couplings: tuple = None
    T: int = None
    runs: int = 3
    indices: tuple = INDEX_NAMES
    base_seed: int = 0
    perturbation: PerturbationSpec | None = None
    workers: int = 1
    skip_synchrony: bool = False

    def __post_init__(self):
        if self.simulation not in SIMULATIONS:
            raise ValidationError(f"unknown simulation {self.simulation!r}")
        if self.T is None:
            object.__setattr__(self, "T", DEFAULT_T[self.simulation])
        couplings = self.couplings if self.couplings is not None else desk_grid(self.simulation)
        points = tuple(normalize_point(self.simulation, c) for c in couplings)
        object.__setattr__(self, "couplings", points)
        if self.runs < 1:
            raise ValidationError("runs must be >= 1")
        unknown = set(self.indices) - set(INDEX_NAMES)
        if unknown:
            raise ValidationError(f"unknown indices: {sorted(unknown)}")
        object.__setattr__(self, "indices", tuple(self.indices))
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")


@dataclass(frozen=True)
class Record:
    simulation: str
    lambda_xy: float
    lambda_yx: float
    run: int
    index: str
    direction: str
    value: float
    elapsed_seconds: float
    status: str


@dataclass
class SweepResult:
    simulation: str
    T: int
    runs: int
    records: list

    def grid_points(self) -> list:
        return sorted({(r.lambda_xy, r.lambda_yx) for r in self.records})

    def index_names(self) -> list:
        present = {r.index for r in self.records}
        return [n for n in INDEX_NAMES if n in present]

    def values(self, index: str, direction: str) -> dict:
        return {(r.lambda_xy, r.lambda_yx, r.run): r.value
                for r in self.records if r.index == index and r.direction == direction}

    def directed_by_point(self, index: str) -> dict:
        """Grid point -> list of D = value_xy - value_yx, one per run."""
        xy = self.values(index, "xy")
        yx = self.values(index, "yx")
        out = {}
        for (lxy, lyx, run), v_xy in sorted(xy.items()):
            v_yx = yx.get((lxy, lyx, run), float("nan"))
            out.setdefault((lxy, lyx), []).append(v_xy - v_yx)
        return out

    def directed_series(self, index: str) -> tuple[list, np.ndarray]:
        """Keys (point, run) sorted, with the matching D values."""
        xy = self.values(index, "xy")
        yx = self.values(index, "yx")
        keys = sorted(xy)
        vals = np.array([xy[k] - yx.get(k, float("nan")) for k in keys])
        return keys, vals


# ---------------------------------------------------------------------------
# execution


def simulate_pair(simulation: str, point: tuple[float, float], T: int,
                  seed: int) -> SeriesPair:
    if simulation == "lp":
        return simulate.sim_lp(simulate.LpParams(lam=point[1], T=T, seed=seed))
    if simulation == "ulam":
        return simulate.sim_ulam(simulate.UlamParams(lam=point[0], T=T, seed=seed))
    if simulation == "henon_uni":
        return simulate.sim_henon_uni(simulate.HenonUniParams(lam=point[0], T=T, seed=seed))
    if simulation == "henon_bi_i":
        return simulate.sim_henon_bi(simulate.HenonBiParams(
            lam_xy=point[0], lam_yx=point[1], T=T, seed=seed))
    if simulation == "henon_bi_ni":
        return simulate.sim_henon_bi(simulate.HenonBiParams(
            lam_xy=point[0], lam_yx=point[1], T=T, seed=seed, b_y=0.1))
    raise ValidationError(f"unknown simulation {simulation!r}")


def _degenerate_estimate(name: str) -> IndexEstimate:
    return IndexEstimate(name, float("nan"), float("nan"), 0.0, 0.0, {},
                         STATUS_DEGENERATE)


def compute_indices(pair: SeriesPair, simulation: str, T: int,
                    indices=INDEX_NAMES) -> list[IndexEstimate]:
    """All requested indices on one pair, using the simulation's presets.

    Estimator failures (too little data after missingness, degenerate fits,
    saturated estimators) become degenerate estimates, never exceptions.
    """
    presets = index_presets(simulation, T)
    dms: dict[int, object] = {}

    def dm_for(m: int):
        if m not in dms:
            dms[m] = embed(pair, EmbeddingSpec(m=m, tau=presets["tau"], h=presets["h"]))
        return dms[m]

    out = []

    def guarded(name, fn):
        try:
            est = fn()
        except BicausalError:
            est = _degenerate_estimate(name)
        out.append(est)

    wanted = list(indices)
    si_fused = ("si1" in wanted and "si2" in wanted
                and presets["si1"].R == presets["si2"].R)
    for name in wanted:
        if name == "egc":
            guarded(name, lambda: regress.egc(dm_for(presets["m"]), presets["egc"]))
        elif name == "nlgc":
            guarded(name, lambda: regress.nlgc(dm_for(presets["m"]), presets["nlgc"]))
        elif name == "pi":
            guarded(name, lambda: regress.pi(dm_for(presets["pi_m"]), presets["pi"]))
        elif name == "te_hist":
            guarded(name, lambda: info.te_hist(dm_for(1), presets["te_hist"]))
        elif name == "ete_hist":
            guarded(name, lambda: info.ete_hist(dm_for(1), presets["te_hist"],
                                                presets["ete_hist"]))
        elif name == "te_ksg":
            guarded(name, lambda: info.te_ksg(dm_for(1), presets["te_ksg"]))
        elif name == "ctir":
            guarded(name, lambda: info.ctir(pair, presets["ctir"]))
        elif name == "si1" and si_fused:
            try:
                out.extend(crossmap.si_pair(dm_for(presets["m"]), presets["si1"]))
            except BicausalError:
                out.extend([_degenerate_estimate("si1"), _degenerate_estimate("si2")])
        elif name == "si2" and si_fused:
            pass  # emitted together with si1
        elif name == "si1":
            guarded(name, lambda: crossmap.si_pair(dm_for(presets["m"]), presets["si1"])[0])
        elif name == "si2":
            guarded(name, lambda: crossmap.si_pair(dm_for(presets["m"]), presets["si2"])[1])
        elif name == "ccm":
            guarded(name, lambda: crossmap.ccm(dm_for(presets["m"]), presets["ccm"]))
    return out


def _point_in_windows(point, windows) -> bool:
    return any(lo <= lam <= hi for lam in point for lo, hi in windows)


def _run_unit(cfg: SweepConfig, point_index: int, run: int) -> list[Record]:
    point = cfg.couplings[point_index]
    seed = cfg.base_seed + run

    if cfg.skip_synchrony and cfg.simulation == "ulam" and \
            _point_in_windows(point, ULAM_SYNC_WINDOWS):
        return [Record(cfg.simulation, point[0], point[1], run, name, direction,
                       float("nan"), 0.0, STATUS_SKIPPED_SYNCHRONY)
                for name in cfg.indices for direction in ("xy", "yx")]

    T_eff = cfg.T
    spec = cfg.perturbation
    if spec is not None and spec.kind == "data_size":
        T_eff = spec.data_size
    pair = simulate_pair(cfg.simulation, point, T_eff, seed)
    if spec is not None and spec.kind != "data_size":
        rng = np.random.default_rng([spec.seed, point_index, run])
        pair = apply_perturbation(pair, spec, rng)

    records = []
    for est in compute_indices(pair, cfg.simulation, T_eff, cfg.indices):
        for direction in ("xy", "yx"):
            records.append(Record(
                cfg.simulation, point[0], point[1], run, est.index, direction,
                est.value(direction),
                est.elapsed_xy if direction == "xy" else est.elapsed_yx,
                est.status))
    return records


def run_sweep(cfg: SweepConfig) -> SweepResult:
    """Execute the full (grid x runs) sweep; degenerate estimates are recorded
    with their status and never abort the sweep."""
    units = [(i, run) for i in range(len(cfg.couplings)) for run in range(cfg.runs)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(_run_unit_star, [(cfg, i, r) for i, r in units]))
    else:
        chunks = [_run_unit(cfg, i, r) for i, r in units]
    records = [rec for chunk in chunks for rec in chunk]
    records.sort(key=lambda r: (r.lambda_xy, r.lambda_yx, r.run, r.index, r.direction))
    T_eff = cfg.T
    if cfg.perturbation is not None and cfg.perturbation.kind == "data_size":
        T_eff = cfg.perturbation.data_size
    return SweepResult(cfg.simulation, T_eff, cfg.runs, records)


def _run_unit_star(args):
    return _run_unit(*args)


# ---------------------------------------------------------------------------
# reporting


def time_index(fn, *args, **kwargs):
    """(result, elapsed wall-clock seconds) of one call."""
    t0 = time.perf_counter()
    result = fn(*args, **kwargs)
    return result, time.perf_counter() - t0


def timing_table(res: SweepResult) -> dict:
    """index -> (mean, std) of per-estimate elapsed seconds (directions
    summed), aggregated over grid points and runs."""
    sums: dict[str, dict] = {}
    for rec in res.records:
        key = (rec.lambda_xy, rec.lambda_yx, rec.run)
        sums.setdefault(rec.index, {}).setdefault(key, 0.0)
        sums[rec.index][key] += rec.elapsed_seconds
    return {index: (float(np.mean(list(v.values()))), float(np.std(list(v.values()))))
            for index, v in sums.items()}


def corr_matrix(res: SweepResult, kind: str = "pearson",
                statistic: str = "d", direction: str | None = None):
    """Correlation between indices across all (grid point, run) samples.

    statistic "d" correlates the directed index; "value" correlates one
    direction's raw estimates (pass direction="xy"/"yx"). Undefined entries
    (constant or empty columns) are NaN. Returns (names, matrix).
    """
    if kind not in ("pearson", "spearman"):
        raise ValidationError(f"unknown correlation kind {kind!r}")
    names = res.index_names()
    if len(names) < 2:
        raise ValidationError("need at least two indices")
    columns = {}
    for name in names:
        if statistic == "d":
            keys, vals = res.directed_series(name)
        elif statistic == "value":
            if direction not in ("xy", "yx"):
                raise ValidationError("statistic 'value' needs direction 'xy' or 'yx'")
            mapping = res.values(name, direction)
            keys = sorted(mapping)
            vals = np.array([mapping[k] for k in keys])
        else:
            raise ValidationError(f"unknown statistic {statistic!r}")
        if len(vals) < 3:
            raise ValidationError("need at least three records per index")
        columns[name] = dict(zip(keys, vals))

    mat = np.full((len(names), len(names)), np.nan)
    for i, a in enumerate(names):
        for j, b in enumerate(names):
            if j < i:
                continue
            common = sorted(set(columns[a]) & set(columns[b]))
            va = np.array([columns[a][k] for k in common])
            vb = np.array([columns[b][k] for k in common])
            ok = np.isfinite(va) & np.isfinite(vb)
            va, vb = va[ok], vb[ok]
            if len(va) < 3 or va.std() == 0.0 or vb.std() == 0.0:
                continue
            if kind == "pearson":
                c = float(np.corrcoef(va, vb)[0, 1])
            else:
                c = float(spearmanr(va, vb).statistic)
            mat[i, j] = mat[j, i] = c
    return names, mat


# ---------------------------------------------------------------------------
# persistence


def _fmt(value: float) -> str:
    return "NA" if not np.isfinite(value) else repr(float(value))


def sweep_to_csv(res: SweepResult, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in res.records:
            writer.writerow([r.simulation, repr(r.lambda_xy), repr(r.lambda_yx),
                             r.run, r.index, r.direction, _fmt(r.value),
                             repr(r.elapsed_seconds), r.status])


def sweep_from_csv(path) -> SweepResult:
    records = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ValidationError(f"cannot read sweep CSV {path}: {exc}")
    with fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValidationError(f"unexpected sweep CSV header: {header}")
        for row in reader:
            sim, lxy, lyx, run, index, direction, value, elapsed, status = row
            records.append(Record(
                sim, float(lxy), float(lyx), int(run), index, direction,
                float("nan") if value in ("NA", "") else float(value),
                float(elapsed), status))
    if not records:
        raise ValidationError("empty sweep CSV")
    sim = records[0].simulation
    runs = max(r.run for r in records) + 1
    return SweepResult(sim, T=-1, runs=runs, records=records)


def corr_to_csv(names, matrix, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index"] + list(names))
        for name, row in zip(names, matrix):
            writer.writerow([name] + [_fmt(v) for v in row])


def fg_to_csv(summary, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "f", "g"])
        for index, fg in summary.stats.items():
            writer.writerow([index, _fmt(fg.f), _fmt(fg.g)])


def timing_to_csv(table: dict, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "mean_seconds", "std_seconds"])
        for index in INDEX_NAMES:
            if index in table:
                mean, std = table[index]
                writer.writerow([index, repr(mean), repr(std)])


def pair_to_csv(pair: SeriesPair, path):
    """Headered t,x,y rows; missing samples are empty cells."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "x", "y"])
        for t in range(pair.T):
            x = "" if pair.x_missing[t] else repr(float(pair.x[t]))
            y = "" if pair.y_missing[t] else repr(float(pair.y[t]))
            writer.writerow([t, x, y])


def pair_from_csv(path) -> SeriesPair:
    xs, ys = [], []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ValidationError(f"cannot read series CSV {path}: {exc}")
    with fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header] != ["t", "x", "y"]:
            raise ValidationError("series CSV must have header t,x,y")
        for row in reader:
            xs.append(float(row[1]) if row[1].strip() else float("nan"))
            ys.append(float(row[2]) if row[2].strip() else float("nan"))
    return SeriesPair(np.array(xs), np.array(ys))


def write_manifest(path, cfg: SweepConfig, extra: dict | None = None):
    payload = {
        "simulation": cfg.simulation,
        "T": cfg.T,
        "runs": cfg.runs,
        "couplings": [list(pt) for pt in cfg.couplings],
        "indices": list(cfg.indices),
        "base_seed": cfg.base_seed,
        "perturbation": None if cfg.perturbation is None else asdict(cfg.perturbation),
        "workers": cfg.workers,
        "prng": simulate.GENERATOR_NAME,
        "presets_version": PRESETS_VERSION,
        "created_unix": time.time(),
    }
    if extra:
        payload.update(extra)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, default=str)
    return payload
