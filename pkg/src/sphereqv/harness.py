"""Monte Carlo experiment engine with deterministic parallel replication.

An experiment is a sweep over (degree, grid) cells. For each cell the
harness draws replications of the quadratic variation in fixed-size
batches, computes the requested empirical statistics with standard errors,
and pairs every one with its exact counterpart from the moment formulas.
Replication r of a cell depends only on (seed, r), and batches are reduced
in submission order, so the emitted report is byte-identical for any worker
count.

Empirical cumulants use k-statistics (unbiased cumulant estimators) with
delete-block jackknife standard errors; normality is measured by the exact
Kolmogorov–Smirnov distance of the standardized statistic to N(0,1);
scaling laws are checked by least-squares slopes in log-log coordinates.
"""

from __future__ import annotations

import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz
from scipy.special import ndtr

from . import moments as mom
from .covariance import (FbmSpec, LineGrid, PowerSpectrum, fbm_spatial_row,
                         increment_row_f, increment_row_fl)
from .estimators import estimate_cl, estimate_hurst
from .moments import RegimeTag
from .simulate import (FbmTarget, FullField, SampleSpec, SingleEll,
                       batch_quadratic_variation)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "CellStat",
    "ExperimentReport",
    "run_experiment",
    "empirical_cumulants",
    "ks_normal",
    "loglog_slope",
    "check_oracle_agreement",
]

_STATISTICS = ("mean", "var", "k3", "k4", "ks_normal", "estimator_error", "hurst")

# statistics whose "exact" column is a paired diagnostic, not an oracle value
_NON_ORACLE_STATS = frozenset({"ks_normal", "fourth_moment_bound"})

_CSV_COLUMNS = ("ell", "n", "regime", "stat", "empirical", "se", "exact",
                "source_op", "seed")


class ConfigError(ValueError):
    """Invalid experiment configuration (unknown key, bad value, bad coupling)."""


# ======================================================================
# Configuration
# ======================================================================

def _parse_spectrum(obj):
    if not isinstance(obj, dict):
        raise ConfigError("spectrum must be an object")
    kind = obj.get("kind")
    if kind == "power_law":
        allowed = {"kind", "c0", "epsilon", "l_max"}
        if set(obj) - allowed:
            raise ConfigError(f"unknown spectrum keys {sorted(set(obj) - allowed)}")
        try:
            return PowerSpectrum.power_law(obj["c0"], obj["epsilon"], obj["l_max"])
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad power_law spectrum: {exc}") from exc
    if kind == "explicit":
        allowed = {"kind", "values", "l_min"}
        if set(obj) - allowed:
            raise ConfigError(f"unknown spectrum keys {sorted(set(obj) - allowed)}")
        try:
            return PowerSpectrum.explicit(obj["values"], obj.get("l_min", 1))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad explicit spectrum: {exc}") from exc
    raise ConfigError("spectrum.kind must be 'power_law' or 'explicit'")


def _parse_regime(obj):
    if obj is None:
        return RegimeTag.fixed_ell()
    if not isinstance(obj, dict) or set(obj) - {"kind", "c"}:
        raise ConfigError("regime must be {kind, [c]}")
    try:
        return RegimeTag(obj.get("kind"), obj.get("c"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description.

    ``target`` is a dict with a ``kind`` of single_ell/full_field/fbm plus
    that kind's parameters; ``cells`` is a tuple of (ell, n) pairs (ell is
    carried but unused for fbm targets); ``regime`` tags every cell.
    """

    seed: int
    replications: int
    statistics: tuple
    target: dict
    cells: tuple
    regime: RegimeTag
    output: str | None = None
    batch_size: int = 1024

    @classmethod
    def from_dict(cls, raw):
        allowed = {"seed", "replications", "statistics", "target", "cells",
                   "regime", "output", "batch_size"}
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(raw) - allowed
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        for key in ("seed", "replications", "statistics", "target", "cells"):
            if key not in raw:
                raise ConfigError(f"missing config key '{key}'")

        seed = raw["seed"]
        if int(seed) != seed or not (0 <= seed < 2 ** 64):
            raise ConfigError("seed must be an unsigned 64-bit integer")
        reps = raw["replications"]
        if int(reps) != reps or reps < 1:
            raise ConfigError("replications must be a positive integer")

        stats = tuple(raw["statistics"])
        if not stats:
            raise ConfigError("statistics must be nonempty")
        bad = [s for s in stats if s not in _STATISTICS]
        if bad:
            raise ConfigError(f"unknown statistics {bad}")

        target_raw = raw["target"]
        if not isinstance(target_raw, dict) or "kind" not in target_raw:
            raise ConfigError("target must be an object with a 'kind'")
        kind = target_raw["kind"]
        if kind == "single_ell":
            allowed_t = {"kind", "c_ell"}
            if set(target_raw) - allowed_t:
                raise ConfigError(
                    f"unknown target keys {sorted(set(target_raw) - allowed_t)}")
            target = {"kind": kind, "c_ell": float(target_raw.get("c_ell", 1.0))}
        elif kind == "full_field":
            allowed_t = {"kind", "spectrum"}
            if set(target_raw) - allowed_t:
                raise ConfigError(
                    f"unknown target keys {sorted(set(target_raw) - allowed_t)}")
            target = {"kind": kind,
                      "spectrum": _parse_spectrum(target_raw.get("spectrum"))}
        elif kind == "fbm":
            allowed_t = {"kind", "hurst", "times", "spectrum"}
            if set(target_raw) - allowed_t:
                raise ConfigError(
                    f"unknown target keys {sorted(set(target_raw) - allowed_t)}")
            try:
                spec = FbmSpec(hurst=float(target_raw["hurst"]),
                               spectrum=_parse_spectrum(target_raw.get("spectrum")),
                               times=tuple(target_raw["times"]))
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"bad fbm target: {exc}") from exc
            target = {"kind": kind, "spec": spec}
        else:
            raise ConfigError(f"unknown target kind {kind!r}")

        cells = []
        for cell in raw["cells"]:
            ell, n = cell
            if int(ell) != ell or int(n) != n or n < 1 or (ell < 1 and kind != "fbm"):
                raise ConfigError(f"bad cell {cell!r}")
            cells.append((int(ell), int(n)))
        if not cells:
            raise ConfigError("cells must be nonempty")

        regime = _parse_regime(raw.get("regime"))
        _check_coupling(regime, cells, kind)

        if "estimator_error" in stats and kind != "single_ell":
            raise ConfigError("estimator_error requires a single_ell target")
        if "hurst" in stats and kind != "fbm":
            raise ConfigError("hurst requires an fbm target")
        if kind == "fbm" and {"k3", "k4", "estimator_error"} & set(stats):
            raise ConfigError("fbm targets support mean/var/ks_normal/hurst")

        batch = raw.get("batch_size", 1024)
        if int(batch) != batch or batch < 1:
            raise ConfigError("batch_size must be a positive integer")

        output = raw.get("output")
        if output is not None and not isinstance(output, str):
            raise ConfigError("output must be a path string")

        return cls(seed=int(seed), replications=int(reps), statistics=stats,
                   target=target, cells=tuple(cells), regime=regime,
                   output=output, batch_size=int(batch))


def _check_coupling(regime, cells, target_kind):
    """The (ell, n) pairs must realize the declared regime."""
    if target_kind == "fbm":
        return
    kind = regime.kind
    if kind == mom.FIXED_ELL:
        if len({ell for ell, _ in cells}) > 1:
            raise ConfigError("fixed_ell sweep must keep the degree constant")
    elif kind == mom.ELL_COMPARABLE:
        for ell, n in cells:
            if ell != int(round(regime.c * n)):
                raise ConfigError(
                    f"cell ({ell},{n}) violates coupling l = round(c·N), c={regime.c}")
    elif kind == mom.ELL_FASTER:
        for ell, n in cells:
            if ell <= n:
                raise ConfigError(f"cell ({ell},{n}) has l ≤ N under ell_faster")
    else:
        for ell, n in cells:
            if ell >= n:
                raise ConfigError(f"cell ({ell},{n}) has l ≥ N under ell_slower")


# ======================================================================
# Report containers
# ======================================================================

@dataclass(frozen=True)
class CellStat:
    """One empirical statistic paired with its exact counterpart."""

    ell: int
    n: int
    regime: str
    stat: str
    empirical: float
    se: float
    exact: float
    source_op: str
    seed: int

    def as_dict(self):
        return {
            "ell": self.ell, "n": self.n, "regime": self.regime,
            "stat": self.stat, "empirical": self.empirical, "se": self.se,
            "exact": self.exact, "source_op": self.source_op, "seed": self.seed,
        }


def _fmt(x):
    if isinstance(x, float):
        return "%.17g" % x
    return str(x)


@dataclass(frozen=True)
class ExperimentReport:
    """Deterministic result of one experiment run."""

    rows: tuple
    slopes: dict = field(default_factory=dict)
    seed: int = 0
    replications: int = 0

    def to_json(self):
        payload = {
            "replications": self.replications,
            "rows": [r.as_dict() for r in self.rows],
            "seed": self.seed,
            "slopes": self.slopes,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    def to_csv(self):
        lines = [",".join(_CSV_COLUMNS)]
        for r in self.rows:
            d = r.as_dict()
            lines.append(",".join(_fmt(d[c]) for c in _CSV_COLUMNS))
        return "\n".join(lines) + "\n"

    def write(self, base_path):
        """Write <base>.json and <base>.csv (UTF-8, LF)."""
        base = str(base_path)
        os.makedirs(os.path.dirname(base) or ".", exist_ok=True)
        with open(base + ".json", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_json())
        with open(base + ".csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_csv())
        return base + ".json", base + ".csv"


# ======================================================================
# Statistics
# ======================================================================

def _block_bounds(n, groups):
    edges = np.linspace(0, n, groups + 1).astype(int)
    return list(zip(edges[:-1], edges[1:]))


def empirical_cumulants(samples, p_max=4):
    """k-statistics k₂..k_{p_max} with delete-block jackknife standard errors.

    k-statistics are the unbiased estimators of cumulants:
        k₂ = n m₂/(n−1)
        k₃ = n² m₃/((n−1)(n−2))
        k₄ = n² [(n+1) m₄ − 3(n−1) m₂²] / ((n−1)(n−2)(n−3))
    with m_r the central sample moments. Standard errors come from delete-
    block jackknife over G contiguous blocks (G = 50 for large samples),
    computed from per-block power sums so the cost stays O(n + G).

    Returns [(k_p, se_p)] for p = 2..p_max. Requires ≥ 10·p_max samples.
    """
    if not (2 <= p_max <= 4):
        raise ValueError("p_max must be 2, 3 or 4")
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if n < 10 * p_max:
        raise ValueError(f"need at least {10 * p_max} samples, got {n}")

    groups = 50 if n >= 500 else max(2, n // 10)
    bounds = _block_bounds(n, groups)
    powers = np.empty((4, groups))
    for b, (lo, hi) in enumerate(bounds):
        seg = x[lo:hi]
        powers[0, b] = seg.sum()
        powers[1, b] = (seg * seg).sum()
        powers[2, b] = (seg ** 3).sum()
        powers[3, b] = (seg ** 4).sum()
    totals = powers.sum(axis=1)
    counts = np.array([hi - lo for lo, hi in bounds], dtype=float)

    def kstats(s1, s2, s3, s4, m):
        mu = s1 / m
        r2 = s2 / m
        r3 = s3 / m
        r4 = s4 / m
        m2 = r2 - mu ** 2
        m3 = r3 - 3 * mu * r2 + 2 * mu ** 3
        m4 = r4 - 4 * mu * r3 + 6 * mu ** 2 * r2 - 3 * mu ** 4
        k2 = m * m2 / (m - 1)
        k3 = m ** 2 * m3 / ((m - 1) * (m - 2))
        k4 = (m ** 2 * ((m + 1) * m4 - 3 * (m - 1) * m2 ** 2)
              / ((m - 1) * (m - 2) * (m - 3)))
        return k2, k3, k4

    full = kstats(*totals, float(n))
    leave = np.array([
        kstats(totals[0] - powers[0, b], totals[1] - powers[1, b],
               totals[2] - powers[2, b], totals[3] - powers[3, b],
               float(n) - counts[b])
        for b in range(groups)
    ])  # (groups, 3)
    g = float(groups)
    se = np.sqrt((g - 1.0) / g
                 * np.sum((leave - leave.mean(axis=0)) ** 2, axis=0))
    return [(float(full[p - 2]), float(se[p - 2])) for p in range(2, p_max + 1)]


def _jackknife_se(samples, statistic, groups=None):
    """Delete-block jackknife SE of an arbitrary statistic (generic, O(G·n))."""
    x = np.asarray(samples, dtype=float)
    n = x.shape[0]
    g = groups if groups else (50 if n >= 500 else max(2, n // 10))
    if g < 2:
        return float("nan")
    vals = []
    for lo, hi in _block_bounds(n, g):
        vals.append(statistic(np.concatenate([x[:lo], x[hi:]])))
    vals = np.asarray(vals, dtype=float)
    return float(np.sqrt((g - 1.0) / g * np.sum((vals - vals.mean()) ** 2)))


def ks_normal(samples):
    """Exact Kolmogorov–Smirnov distance to the standard normal.

    D = max_i max(i/n − Φ(x_(i)), Φ(x_(i)) − (i−1)/n) over the sorted
    sample. Requires at least 100 samples.
    """
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if n < 100:
        raise ValueError(f"need at least 100 samples, got {n}")
    phi = ndtr(np.sort(x))
    i = np.arange(1, n + 1, dtype=float)
    return float(max(np.max(i / n - phi), np.max(phi - (i - 1.0) / n)))


def loglog_slope(xs, ys, log_correction=None):
    """Least-squares slope of log y against log x, with its standard error.

    ``log_correction='divide_by_log'`` fits log(y/ln x) instead, removing a
    known logarithmic factor before the power-law fit (requires x > 1).
    Needs at least 3 strictly positive points.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 3 or xs.size != ys.size:
        raise ValueError("need at least 3 paired points")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("log-log fit needs strictly positive data")
    if log_correction not in (None, "none", "divide_by_log"):
        raise ValueError("log_correction must be None or 'divide_by_log'")
    if log_correction == "divide_by_log":
        if np.any(xs <= 1):
            raise ValueError("divide_by_log needs x > 1")
        ys = ys / np.log(xs)
    lx = np.log(xs)
    ly = np.log(ys)
    mx = lx.mean()
    sxx = float(np.sum((lx - mx) ** 2))
    if sxx == 0:
        raise ValueError("x values must not be all equal")
    slope = float(np.sum((lx - mx) * (ly - ly.mean())) / sxx)
    intercept = float(ly.mean() - slope * mx)
    resid = ly - (intercept + slope * lx)
    dof = xs.size - 2
    stderr = float(np.sqrt(np.sum(resid ** 2) / dof / sxx)) if dof > 0 else float("nan")
    return slope, stderr


# ======================================================================
# The experiment engine
# ======================================================================

def _resolve_threads(threads):
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("SPHEREQV_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _cell_sample_spec(config, ell, n):
    kind = config.target["kind"]
    grid = LineGrid(n)
    if kind == "single_ell":
        target = SingleEll(ell=ell, c_ell=config.target["c_ell"])
    elif kind == "full_field":
        target = FullField(spectrum=config.target["spectrum"])
    else:
        target = FbmTarget(spec=config.target["spec"])
    return SampleSpec(target=target, grid=grid, seed=config.seed,
                      replications=config.replications)


def _cell_exact(config, ell, n):
    """Exact mean/variance (cheap, from the Gram row) plus a lazy dense Gram."""
    kind = config.target["kind"]
    grid = LineGrid(n)
    if kind == "single_ell":
        c_ell = config.target["c_ell"]
        row = increment_row_fl(ell, c_ell, grid)
        mean = mom.exact_mean_vnl(ell, c_ell, n)
        mean_src = "exact_mean_vnl"
        scale = 1.0
    elif kind == "full_field":
        row = increment_row_f(config.target["spectrum"], grid)
        mean = n * row[0]
        mean_src = "increment_gram_f.trace"
        scale = 1.0
    else:
        spec = config.target["spec"]
        t = spec.times[0]
        row = fbm_spatial_row(spec.spectrum, grid)
        scale = t ** (2.0 * spec.hurst)
        row = scale * row
        mean = n * row[0]
        mean_src = "fbm_joint_gram.trace"
    var = mom.exact_var_from_row(row)
    return {"row": row, "mean": mean, "mean_src": mean_src, "var": var}


def _cell_rows(config, ell, n, samples, exact):
    """Assemble the CellStat rows for one cell."""
    regime_str = config.regime.kind
    if config.regime.kind == mom.ELL_COMPARABLE:
        regime_str = f"ell_comparable(c={config.regime.c:g})"
    seed = config.seed
    stats = config.statistics
    kind = config.target["kind"]
    v = samples[:, 0] if samples.ndim == 2 else samples

    gram = None

    def dense_gram():
        nonlocal gram
        if gram is None:
            gram = toeplitz(exact["row"])
        return gram

    kmax = 4 if "k4" in stats else (3 if "k3" in stats else 2)
    kstats = None
    if {"var", "k3", "k4"} & set(stats):
        kstats = empirical_cumulants(v, p_max=max(kmax, 2))

    rows = []

    def add(stat, empirical, se, exact_val, source):
        rows.append(CellStat(ell=ell, n=n, regime=regime_str, stat=stat,
                             empirical=float(empirical), se=float(se),
                             exact=float(exact_val), source_op=source,
                             seed=seed))

    for stat in stats:
        if stat == "mean":
            se = float(np.std(v, ddof=1) / math.sqrt(v.size))
            add("mean", float(np.mean(v)), se, exact["mean"], exact["mean_src"])
        elif stat == "var":
            add("var", kstats[0][0], kstats[0][1], exact["var"],
                "exact_var_from_row")
        elif stat == "k3":
            add("k3", kstats[1][0], kstats[1][1],
                mom.trace_cumulant(dense_gram(), 3), "trace_cumulant")
        elif stat == "k4":
            add("k4", kstats[2][0], kstats[2][1],
                mom.trace_cumulant(dense_gram(), 4), "trace_cumulant")
        elif stat == "ks_normal":
            f = (v - exact["mean"]) / math.sqrt(exact["var"])
            ks = ks_normal(f)
            se = _jackknife_se(f, ks_normal) if f.size >= 200 else float("nan")
            add("ks_normal", ks, se,
                mom.fourth_moment_bound(dense_gram()), "fourth_moment_bound")
        elif stat == "estimator_error":
            c_ell = config.target["c_ell"]
            ratios = np.array([estimate_cl(x, ell, n).value / c_ell for x in v])
            se = float(np.std(ratios, ddof=1) / math.sqrt(ratios.size))
            add("estimator_mean", float(np.mean(ratios)), se, 1.0, "estimate_cl")
            kr = empirical_cumulants(ratios, p_max=2)
            norm = mom.exact_mean_vnl(ell, c_ell, n)
            add("estimator_var", kr[0][0], kr[0][1],
                exact["var"] / norm ** 2, "exact_var_vnl/exact_mean_vnl")
        elif stat == "hurst":
            spec = config.target["spec"]
            t, s = spec.times
            # per-replication estimates scatter outside (0,1) by design;
            # the median absorbs them, so the per-value warning is noise here
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", UserWarning)
                h = np.array([estimate_hurst(vt, vs, t, s) for vt, vs in samples])
            med = float(np.median(h))
            se = _jackknife_se(h, np.median)
            add("hurst_median", med, se, spec.hurst, "estimate_hurst")
    return rows


def _fit_slopes(config, rows):
    """Log-log slopes across the sweep, from exact and empirical columns."""
    cells_n = [n for _, n in config.cells]
    if len(set(cells_n)) < 3 or config.target["kind"] == "fbm":
        return {}
    slopes = {}
    by_stat = {}
    for r in rows:
        by_stat.setdefault(r.stat, []).append(r)
    for stat, corr, key in (("mean", None, "mean"),
                            ("var", "divide_by_log", "var_divlog")):
        cells = by_stat.get(stat, [])
        if len(cells) < 3:
            continue
        xs = np.array([r.n for r in cells], dtype=float)
        try:
            s, e = loglog_slope(xs, np.array([r.exact for r in cells]), corr)
            slopes[f"exact_{key}"] = [s, e]
            s, e = loglog_slope(xs, np.array([r.empirical for r in cells]), corr)
            slopes[f"empirical_{key}"] = [s, e]
        except ValueError:
            continue
    return slopes


def run_experiment(config, threads=None, partial_flush=None):
    """Execute an experiment; deterministic for (config, seed), any workers.

    Replications are drawn in fixed batches of ``config.batch_size`` mapped
    over a thread pool and reduced in submission order. On KeyboardInterrupt
    the rows finished so far are flushed through ``partial_flush`` (if
    given) before the interrupt propagates.
    """
    n_threads = _resolve_threads(threads)
    all_rows = []
    try:
        for ell, n in config.cells:
            spec = _cell_sample_spec(config, ell, n)
            reps = config.replications
            starts = list(range(0, reps, config.batch_size))
            with ThreadPoolExecutor(max_workers=n_threads) as pool:
                futures = [
                    pool.submit(batch_quadratic_variation, spec, s,
                                min(config.batch_size, reps - s))
                    for s in starts
                ]
                parts = [f.result() for f in futures]
            samples = np.concatenate(parts, axis=0)
            exact = _cell_exact(config, ell, n)
            all_rows.extend(_cell_rows(config, ell, n, samples, exact))
    except KeyboardInterrupt:
        if partial_flush is not None:
            partial_flush(ExperimentReport(rows=tuple(all_rows), slopes={},
                                           seed=config.seed,
                                           replications=config.replications))
        raise
    report = ExperimentReport(rows=tuple(all_rows),
                              slopes=_fit_slopes(config, all_rows),
                              seed=config.seed,
                              replications=config.replications)
    return report


def check_oracle_agreement(report, band=4.0):
    """Fraction of empirical/exact pairs agreeing within ``band`` SEs.

    Rows whose exact column is a paired diagnostic rather than an oracle
    (ks_normal) are skipped, as are rows without a finite SE. Returns
    (n_ok, n_checked, failures) with one (stat, ell, n, gap_in_se) tuple
    per violation.
    """
    ok = 0
    checked = 0
    failures = []
    for r in report.rows:
        if r.stat in _NON_ORACLE_STATS:
            continue
        if not (math.isfinite(r.exact) and math.isfinite(r.se) and r.se > 0):
            continue
        checked += 1
        gap = abs(r.empirical - r.exact) / r.se
        if gap <= band:
            ok += 1
        else:
            failures.append((r.stat, r.ell, r.n, gap))
    return ok, checked, failures
