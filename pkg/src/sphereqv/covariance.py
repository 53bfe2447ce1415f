"""Covariance structure of isotropic Gaussian fields along a meridian grid.

Angular power spectra, the equispaced colatitude grid, exact covariance
kernels of single-degree and truncated full fields, second differences of
Legendre polynomials, the Gram matrix of grid increments, and the joint
covariance of a sphere-valued fractional Brownian pair observed at two
times.

The increment Gram matrix is the workhorse: for a Gaussian field f observed
at grid points θ_1 < ... < θ_{N+1}, entry (i, j) is E[Δ_i Δ_j] with
Δ_i = f(θ_{i+1}) − f(θ_i). Every exact moment of the quadratic variation
Σ Δ_i² is a trace functional of this matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .specfun import legendre_p

__all__ = [
    "PowerSpectrum",
    "LineGrid",
    "IncrementGram",
    "FbmSpec",
    "kernel_fl",
    "second_difference_p",
    "increment_row_fl",
    "increment_gram_fl",
    "increment_row_f",
    "increment_gram_f",
    "rh_cross",
    "fbm_spatial_row",
    "fbm_joint_gram",
]


# ======================================================================
# Domain types
# ======================================================================

@dataclass(frozen=True)
class PowerSpectrum:
    """Angular power spectrum: non-negative variances C_l per degree.

    Two kinds. ``explicit`` stores a finite table of values for degrees
    l_min..l_max. ``power_law`` is C_l = c0 · l^(−2−ε) for l ≥ 1, truncated
    at l_max for any finite computation; the discarded tail is quantified by
    :meth:`tail_bound`.

    Build via :meth:`explicit`, :meth:`single`, or :meth:`power_law`.
    """

    kind: str
    l_min: int
    l_max: int
    values: tuple = ()
    c0: float = 0.0
    epsilon: float = 0.0

    def __post_init__(self):
        if self.kind not in ("explicit", "power_law"):
            raise ValueError(f"unknown spectrum kind {self.kind!r}")
        if self.l_max < 1 or self.l_max < self.l_min:
            raise ValueError("l_max must be ≥ 1 and ≥ l_min")
        if self.kind == "explicit":
            if len(self.values) != self.l_max - self.l_min + 1:
                raise ValueError("values length must match degree range")
            if any(v < 0 for v in self.values):
                raise ValueError("spectrum values must be non-negative")
        else:
            if self.c0 <= 0 or self.epsilon <= 0:
                raise ValueError("power law needs c0 > 0 and epsilon > 0")

    @classmethod
    def explicit(cls, values, l_min=1):
        """Spectrum from a value table; values[i] is C_{l_min+i}."""
        vals = tuple(float(v) for v in np.atleast_1d(values))
        return cls(kind="explicit", l_min=int(l_min),
                   l_max=int(l_min) + len(vals) - 1, values=vals)

    @classmethod
    def single(cls, ell, c_ell):
        """Spectrum concentrated on one degree."""
        return cls.explicit([float(c_ell)], l_min=int(ell))

    @classmethod
    def power_law(cls, c0, epsilon, l_max):
        """C_l = c0·l^(−2−ε), l ≥ 1, truncated at l_max.

        l_max is mandatory: for slowly decaying tails (small ε) no practical
        truncation makes the tail numerically negligible, so the choice is
        the caller's and the tail bound is always reported.
        """
        return cls(kind="power_law", l_min=1, l_max=int(l_max),
                   c0=float(c0), epsilon=float(epsilon))

    def cl(self, ell):
        """C_l for scalar or array degree, 0 outside the stored range."""
        ells = np.atleast_1d(np.asarray(ell))
        out = np.zeros(ells.shape, dtype=float)
        inside = (ells >= self.l_min) & (ells <= self.l_max)
        if self.kind == "explicit":
            idx = ells[inside] - self.l_min
            out[inside] = np.asarray(self.values)[idx]
        else:
            out[inside] = self.c0 * ells[inside].astype(float) ** (-2.0 - self.epsilon)
        return float(out[0]) if np.ndim(ell) == 0 else out

    def degrees(self):
        """Array of degrees carried by the truncated spectrum."""
        return np.arange(self.l_min, self.l_max + 1)

    def tail_bound(self):
        """Upper bound on the discarded pointwise variance Σ_{l>l_max} C_l(2l+1)/(4π)·2.

        Zero for explicit spectra. For the power law the sum is bounded by
        integral comparison: Σ_{l>L}(2l+1)l^(−2−ε) ≤ 2L^(−ε)/ε + L^(−1−ε)/(1+ε).
        """
        if self.kind == "explicit":
            return 0.0
        L = float(self.l_max)
        s = 2.0 * L ** (-self.epsilon) / self.epsilon \
            + L ** (-1.0 - self.epsilon) / (1.0 + self.epsilon)
        return self.c0 * s / (2.0 * math.pi)


@dataclass(frozen=True)
class LineGrid:
    """Equispaced colatitude grid θ_i = (i/N)(π/2), i = 1..N+1.

    N is the number of increments; there are N+1 points with exact spacing
    π/(2N). The last point slightly exceeds π/2 by construction; distances
    along the meridian are plain |θ_i − θ_j|.
    """

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        object.__setattr__(self, "n", int(self.n))

    @property
    def spacing(self):
        return 0.5 * math.pi / self.n

    @property
    def points(self):
        return np.arange(1, self.n + 2) * (0.5 * math.pi / self.n)


@dataclass(frozen=True)
class IncrementGram:
    """Covariance matrix of grid increments, with the truncation tail.

    sigma[i, j] = E[Δ_i Δ_j], an N×N symmetric PSD Toeplitz matrix
    (stationary on the line). ``tail_bound`` is an upper bound on the
    entrywise error from spectrum truncation (0 for single-degree and
    explicit spectra).
    """

    n: int
    sigma: np.ndarray = field(repr=False)
    tail_bound: float = 0.0

    def __post_init__(self):
        sig = np.asarray(self.sigma, dtype=float)
        if sig.shape != (self.n, self.n):
            raise ValueError("sigma must be N×N")
        object.__setattr__(self, "sigma", sig)

    @property
    def first_row(self):
        return self.sigma[0].copy()

    def trace(self):
        return float(np.trace(self.sigma))


@dataclass(frozen=True)
class FbmSpec:
    """Sphere-valued fractional Brownian field observed at two times.

    ``spectrum`` carries the spatial coefficients A_l; the spatial kernel is
    Σ A_l (2l+1) P_l(cos d) with no 1/(4π), which differs from the fixed-time
    field convention by exactly that factor. ``times`` = (t, s), distinct
    positives; ``hurst`` in (0, 1) scales variances as t^{2H}.
    """

    hurst: float
    spectrum: PowerSpectrum
    times: tuple

    def __post_init__(self):
        if not (0.0 < self.hurst < 1.0):
            raise ValueError("hurst must lie in (0, 1)")
        t, s = self.times
        if t <= 0 or s <= 0 or t == s:
            raise ValueError("times must be distinct positives")
        object.__setattr__(self, "times", (float(t), float(s)))


# ======================================================================
# Kernels and second differences
# ======================================================================

def kernel_fl(ell, c_ell, theta1, theta2):
    """Covariance of the degree-l field between two meridian points.

    E[f_l(θ1) f_l(θ2)] = c_l (2l+1)/(4π) · P_l(cos|θ1−θ2|).
    """
    d = np.abs(np.asarray(theta1, dtype=float) - np.asarray(theta2, dtype=float))
    return c_ell * (2 * ell + 1) / (4.0 * math.pi) * legendre_p(ell, np.cos(d))


def second_difference_p(ell, k, n):
    """Symmetric second difference of P_l over the grid, at lag k.

    2 P_l(cos(kπ/2N)) − P_l(cos((k−1)π/2N)) − P_l(cos((k+1)π/2N)),
    for 1 ≤ k ≤ N−1. ``k`` may be an integer or integer array.
    """
    k_arr = np.atleast_1d(np.asarray(k))
    if np.any(k_arr < 1) or np.any(k_arr > n - 1):
        raise IndexError(f"lag k must lie in [1, {n - 1}]")
    h = 0.5 * math.pi / n
    val = (2.0 * legendre_p(ell, np.cos(k_arr * h))
           - legendre_p(ell, np.cos((k_arr - 1) * h))
           - legendre_p(ell, np.cos((k_arr + 1) * h)))
    return float(val[0]) if np.ndim(k) == 0 else val


# ======================================================================
# Increment Gram matrices
# ======================================================================

def increment_row_fl(ell, c_ell, grid):
    """First row of the degree-l increment Gram matrix (length N).

    Entry 0 is the common diagonal 2 c_l (2l+1)/(4π)(1 − P_l(cos(π/2N)));
    entry k ≥ 1 is c_l (2l+1)/(4π) times the lag-k second difference.
    The full matrix is Toeplitz in this row; the row form is O(lN) and
    avoids the O(N²) matrix for large grids.
    """
    n = grid.n
    h = grid.spacing
    a = c_ell * (2 * ell + 1) / (4.0 * math.pi)
    # P_l(cos(kh)) for k = 0..N in one recurrence sweep
    p = legendre_p(ell, np.cos(np.arange(n + 1) * h))
    row = np.empty(n)
    row[0] = 2.0 * a * (p[0] - p[1])
    if n > 1:
        row[1:] = a * (2.0 * p[1:n] - p[0:n - 1] - p[2:n + 1])
    return row


def increment_gram_fl(ell, c_ell, grid):
    """Increment Gram matrix of the degree-l field on the grid."""
    row = increment_row_fl(ell, c_ell, grid)
    return IncrementGram(n=grid.n, sigma=toeplitz(row))


def _kernel_row(weights, l_min, x):
    """Σ_l w_l P_l(x) accumulated degree by degree.

    weights[i] is the coefficient of degree l_min+i; x is an array of
    cosines. One upward recurrence sweep, O(l_max·len(x)) time and O(len(x))
    memory, so full-field rows never materialize a (degree × point) table.
    """
    x = np.asarray(x, dtype=float)
    acc = np.zeros_like(x)
    pm1 = np.ones_like(x)   # P_0
    p = x.copy()            # P_1
    if l_min <= 0:
        acc += weights[0 - l_min] * pm1
    l_max = l_min + len(weights) - 1
    for l in range(1, l_max + 1):
        if l >= 2:
            pm1, p = p, ((2 * l - 1) * x * p - (l - 1) * pm1) / l
        if l >= l_min:
            acc += weights[l - l_min] * p
    return acc


def increment_row_f(spectrum, grid):
    """First row of the truncated full-field increment Gram matrix.

    The full-field kernel is the degree sum of kernel_fl with weights
    C_l(2l+1)/(4π); by linearity the Gram row is the weighted sum of the
    per-degree rows. Returns a length-N array.
    """
    n = grid.n
    h = grid.spacing
    ells = spectrum.degrees().astype(float)
    w = spectrum.cl(spectrum.degrees()) * (2.0 * ells + 1.0) / (4.0 * math.pi)
    kern = _kernel_row(w, spectrum.l_min, np.cos(np.arange(n + 2) * h))
    row = np.empty(n)
    row[0] = 2.0 * (kern[0] - kern[1])
    if n > 1:
        row[1:] = 2.0 * kern[1:n] - kern[0:n - 1] - kern[2:n + 1]
    return row


def increment_gram_f(spectrum, grid):
    """Increment Gram matrix of the truncated full field, tail attached."""
    row = increment_row_f(spectrum, grid)
    return IncrementGram(n=grid.n, sigma=toeplitz(row),
                         tail_bound=spectrum.tail_bound())


# ======================================================================
# Fractional Brownian pair
# ======================================================================

def rh_cross(hurst, t, s):
    """Cross-time covariance factor ½(t^{2H} + s^{2H} − |t−s|^{2H})."""
    return 0.5 * (t ** (2 * hurst) + s ** (2 * hurst)
                  - abs(t - s) ** (2 * hurst))


def fbm_spatial_row(spectrum, grid):
    """First row of the spatial increment Gram for the fBm kernel.

    Kernel Σ_l A_l (2l+1) P_l(cos d); note the absence of 1/(4π) relative
    to the fixed-time field convention.
    """
    n = grid.n
    h = grid.spacing
    ells = spectrum.degrees().astype(float)
    w = spectrum.cl(spectrum.degrees()) * (2.0 * ells + 1.0)
    kern = _kernel_row(w, spectrum.l_min, np.cos(np.arange(n + 2) * h))
    row = np.empty(n)
    row[0] = 2.0 * (kern[0] - kern[1])
    if n > 1:
        row[1:] = 2.0 * kern[1:n] - kern[0:n - 1] - kern[2:n + 1]
    return row


def fbm_joint_gram(spec, grid):
    """Joint 2N×2N increment covariance of (B_t, B_s) on the grid.

    Separable structure: time factor R with R[0,0] = t^{2H},
    R[1,1] = s^{2H}, off-diagonal ½(t^{2H}+s^{2H}−|t−s|^{2H}), tensored
    with the single spatial increment Gram. Ordering: the first N rows are
    the time-t increments, the last N the time-s increments.
    """
    t, s = spec.times
    h2 = 2.0 * spec.hurst
    r = rh_cross(spec.hurst, t, s)
    time_cov = np.array([[t ** h2, r], [r, s ** h2]])
    spatial = toeplitz(fbm_spatial_row(spec.spectrum, grid))
    return np.kron(time_cov, spatial)
