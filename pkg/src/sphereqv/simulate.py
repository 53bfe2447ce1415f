"""Exact Gaussian sampling of meridian paths and their quadratic variations.

Sampling happens in coefficient space: a degree-l isotropic field restricted
to the meridian is √C_l · [z₀ λ_{l0}(θ) + √2 Σ_m z_m λ_{lm}(θ)] with i.i.d.
standard normal z, which reproduces the exact covariance
C_l (2l+1)/(4π) P_l(cos|θ−θ'|) through the addition theorem. No matrix
factorization is involved, so the (rank-deficient) grid covariance never
has to be decomposed. Truncated full fields sum independent degrees;
the two-time fractional pair couples each coefficient channel through the
2×2 time covariance.

Determinism contract: every replication owns one random stream derived as
SeedSequence([seed, rep, l]) for single-degree targets and
SeedSequence([seed, rep]) for multi-degree targets (full field, fractional
pair), whose draws follow a fixed degree-ascending layout. The coefficients
of a replication are therefore a pure function of (spec, rep). Evaluated
paths are bitwise reproducible for a fixed batch partition (different
partitions can move the last ulp through BLAS reduction order), which is
why consumers that promise byte-identical output pin their batch
boundaries and let only the scheduling vary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .covariance import FbmSpec, LineGrid, PowerSpectrum, rh_cross
from .specfun import harmonic_meridian_stack, harmonic_meridian_table

__all__ = [
    "SingleEll",
    "FullField",
    "FbmTarget",
    "SampleSpec",
    "PathSample",
    "rep_seed_sequence",
    "rep_stream_id",
    "sample_fl_line",
    "sample_f_line",
    "sample_fbm_pair",
    "quadratic_variation",
    "batch_quadratic_variation",
]

# degree-chunk size (in stacked coefficient rows) for full-field work;
# bounds the basis block at ~16k rows × (N+1) points
_CHUNK_ROWS = 16384


# ======================================================================
# Targets and sample specification
# ======================================================================

@dataclass(frozen=True)
class SingleEll:
    """Sample the degree-l component alone."""

    ell: int
    c_ell: float

    def __post_init__(self):
        if int(self.ell) != self.ell or self.ell < 1:
            raise ValueError("degree must be an integer ≥ 1")
        if self.c_ell < 0:
            raise ValueError("c_ell must be non-negative")
        object.__setattr__(self, "ell", int(self.ell))


@dataclass(frozen=True)
class FullField:
    """Sample the truncated full field with the given spectrum."""

    spectrum: PowerSpectrum


@dataclass(frozen=True)
class FbmTarget:
    """Sample the fractional pair (B_t, B_s) described by an FbmSpec."""

    spec: FbmSpec


@dataclass(frozen=True)
class SampleSpec:
    """What to sample, where, and under which deterministic seed."""

    target: object
    grid: LineGrid
    seed: int
    replications: int = 1

    def __post_init__(self):
        if not isinstance(self.target, (SingleEll, FullField, FbmTarget)):
            raise TypeError("target must be SingleEll, FullField or FbmTarget")
        if not (0 <= int(self.seed) < 2 ** 64):
            raise ValueError("seed must be an unsigned 64-bit integer")
        if int(self.replications) != self.replications or self.replications < 1:
            raise ValueError("replications must be a positive integer")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "replications", int(self.replications))


@dataclass(frozen=True)
class PathSample:
    """Field values at the N+1 grid points."""

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 2:
            raise ValueError("a path needs at least two grid values")
        if not np.all(np.isfinite(vals)):
            raise ValueError("path values must be finite")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.values.size


def rep_seed_sequence(spec, rep):
    """The per-replication seed sequence defined by the determinism contract."""
    if isinstance(spec.target, SingleEll):
        return np.random.SeedSequence([spec.seed, int(rep), spec.target.ell])
    return np.random.SeedSequence([spec.seed, int(rep)])


def rep_stream_id(spec, rep):
    """Human-readable identifier of a replication's stream."""
    if isinstance(spec.target, SingleEll):
        return f"{spec.seed}:{int(rep)}:{spec.target.ell}"
    return f"{spec.seed}:{int(rep)}"


# ======================================================================
# Shared machinery
# ======================================================================

def _degree_chunks(l_min, l_max):
    """Partition degrees [l_min, l_max] so Σ(l+1) per chunk ≤ _CHUNK_ROWS."""
    chunks = []
    lo = l_min
    rows = 0
    for l in range(l_min, l_max + 1):
        if rows and rows + l + 1 > _CHUNK_ROWS:
            chunks.append((lo, l))
            lo, rows = l, 0
        rows += l + 1
    chunks.append((lo, l_max + 1))
    return chunks


def _scaled_basis(l_lo, l_hi, theta, degree_scale):
    """Harmonic stack with √2 order weights and per-degree scales folded in.

    degree_scale(l) multiplies every row of degree l; orders m ≥ 1 carry an
    extra √2 (the two azimuthal channels collapse to one on the meridian).
    Row layout matches the coefficient draw order.
    """
    stack = harmonic_meridian_stack(l_lo, l_hi, theta)
    scale = np.empty(stack.shape[0])
    pos = 0
    for l in range(l_lo, l_hi):
        s = degree_scale(l)
        scale[pos] = s
        scale[pos + 1:pos + l + 1] = s * math.sqrt(2.0)
        pos += l + 1
    stack *= scale[:, None]
    return stack


def _field_paths_batch(spectrum, grid, gens):
    """Truncated-field paths for a batch of generators, shape (B, N+1).

    Each generator is consumed in ascending-degree order, l_min..l_max,
    with l+1 standard normals per degree (the meridian needs only the
    cosine channels; the draw layout is part of the determinism contract).
    """
    theta = grid.points
    out = np.zeros((len(gens), theta.size))
    for lo, hi in _degree_chunks(spectrum.l_min, spectrum.l_max):
        basis = _scaled_basis(lo, hi, theta,
                              lambda l: math.sqrt(spectrum.cl(l)))
        rows = basis.shape[0]
        z = np.empty((len(gens), rows))
        for i, g in enumerate(gens):
            z[i] = g.standard_normal(rows)
        out += z @ basis
    return out


def _fbm_paths_batch(spec, grid, gens):
    """Fractional-pair paths for a batch of generators: (B_t, B_s) arrays.

    Per coefficient channel (l, m), two standard normals are mapped through
    the lower Cholesky factor of [[t^{2H}, r], [r, s^{2H}]] with
    r = ½(t^{2H}+s^{2H}−|t−s|^{2H}), giving the exact joint law of the
    channel at the two times. The spatial convention Σ A_l (2l+1) P_l
    (no 1/(4π)) makes the per-degree scale √(4π A_l) against the
    normalized harmonics.
    """
    t, s = spec.times
    h2 = 2.0 * spec.hurst
    r = rh_cross(spec.hurst, t, s)
    l00 = t ** spec.hurst
    l10 = r / l00
    l11 = math.sqrt(max(s ** h2 - l10 * l10, 0.0))
    spectrum = spec.spectrum
    theta = grid.points
    out_t = np.zeros((len(gens), theta.size))
    out_s = np.zeros((len(gens), theta.size))
    for lo, hi in _degree_chunks(spectrum.l_min, spectrum.l_max):
        basis = _scaled_basis(lo, hi, theta,
                              lambda l: math.sqrt(4.0 * math.pi * spectrum.cl(l)))
        rows = basis.shape[0]
        z = np.empty((len(gens), rows, 2))
        for i, g in enumerate(gens):
            z[i] = g.standard_normal(2 * rows).reshape(rows, 2)
        out_t += (l00 * z[:, :, 0]) @ basis
        out_s += (l10 * z[:, :, 0] + l11 * z[:, :, 1]) @ basis
    return out_t, out_s


# ======================================================================
# Single-path sampling
# ======================================================================

def sample_fl_line(ell, c_ell, grid, rng):
    """One exact path of the degree-l field at the grid points.

    Draws 2l+1 independent standard normals (the full coefficient set);
    the l sine-channel coefficients multiply sin(mφ) = 0 on the meridian,
    so only the leading l+1 enter the values.
    """
    if int(ell) != ell or ell < 1:
        raise ValueError("degree must be an integer ≥ 1")
    ell = int(ell)
    if c_ell < 0:
        raise ValueError("c_ell must be non-negative")
    lam = harmonic_meridian_table(ell, grid.points)
    z = rng.standard_normal(2 * ell + 1)
    w = np.full(ell + 1, math.sqrt(2.0 * c_ell))
    w[0] = math.sqrt(c_ell)
    return PathSample(values=(w * z[:ell + 1]) @ lam)


def sample_f_line(spectrum, grid, rng):
    """One exact path of the truncated full field (degrees l_min..l_max)."""
    return PathSample(values=_field_paths_batch(spectrum, grid, [rng])[0])


def sample_fbm_pair(spec, grid, rng):
    """One exact joint draw of the fractional pair: (path at t, path at s)."""
    if not isinstance(spec, FbmSpec):
        raise TypeError("spec must be an FbmSpec")
    vt, vs = _fbm_paths_batch(spec, grid, [rng])
    return PathSample(values=vt[0]), PathSample(values=vs[0])


# ======================================================================
# Quadratic variation
# ======================================================================

def quadratic_variation(path):
    """Sum of squared increments over the grid: Σ (v_{i+1} − v_i)²."""
    vals = path.values if isinstance(path, PathSample) else np.asarray(path, float)
    if vals.ndim != 1 or vals.size < 2:
        raise ValueError("need at least two grid values")
    d = np.diff(vals)
    return float(d @ d)


def batch_quadratic_variation(spec, rep_start, rep_count):
    """Quadratic variations for replications rep_start..rep_start+rep_count−1.

    Returns shape (rep_count,) for single-degree and full-field targets and
    (rep_count, 2) with columns (V at t, V at s) for fractional pairs.
    The random draws depend only on (spec, rep); re-running the same batch
    reproduces values bitwise, and different batch splits agree to
    floating-point reduction order.
    """
    if rep_count < 1:
        raise ValueError("rep_count must be positive")
    reps = range(int(rep_start), int(rep_start) + int(rep_count))
    gens = [np.random.default_rng(rep_seed_sequence(spec, r)) for r in reps]
    target = spec.target
    if isinstance(target, SingleEll):
        ell, c_ell = target.ell, target.c_ell
        lam = harmonic_meridian_table(ell, spec.grid.points)
        w = np.full(ell + 1, math.sqrt(2.0 * c_ell))
        w[0] = math.sqrt(c_ell)
        basis = w[:, None] * lam
        z = np.empty((len(gens), ell + 1))
        for i, g in enumerate(gens):
            z[i] = g.standard_normal(2 * ell + 1)[:ell + 1]
        paths = z @ basis
        d = np.diff(paths, axis=1)
        return np.einsum("ij,ij->i", d, d)
    if isinstance(target, FullField):
        paths = _field_paths_batch(target.spectrum, spec.grid, gens)
        d = np.diff(paths, axis=1)
        return np.einsum("ij,ij->i", d, d)
    vt, vs = _fbm_paths_batch(target.spec, spec.grid, gens)
    dt = np.diff(vt, axis=1)
    ds = np.diff(vs, axis=1)
    return np.stack([np.einsum("ij,ij->i", dt, dt),
                     np.einsum("ij,ij->i", ds, ds)], axis=1)
