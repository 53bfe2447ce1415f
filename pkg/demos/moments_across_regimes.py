"""Exact moments of the quadratic variation against their asymptotic forms.

Walks the four degree-vs-grid regimes. The mean forms are genuine limits
and the tables show them settling to ratio 1. The variance forms fix the
scale (the powers of l, N and the ln N factor); their constants are only
partly right, and the ratio columns show exactly by how much.
"""

from sphereqv.covariance import LineGrid, increment_row_fl
from sphereqv.moments import (
    RegimeTag,
    asymptotic_mean,
    asymptotic_var,
    exact_mean_vnl,
    exact_var_from_row,
)


def mean_ratio(regime, ell, n, c=1.0):
    return exact_mean_vnl(ell, c, n) / asymptotic_mean(regime, ell, c, n)


def var_ratio(regime, ell, n, c=1.0):
    var = exact_var_from_row(increment_row_fl(ell, c, LineGrid(n)))
    return var / asymptotic_var(regime, ell, c, n)


print("mean: exact / asymptotic form, settling to 1 in every regime")
print(f"  {'fixed degree l=8:':<27}", end="")
print("  ".join(f"N={n}: {mean_ratio(RegimeTag.fixed_ell(), 8, n):.4f}"
                for n in (256, 1024, 4096)))
print(f"  {'degree outruns grid N=8:':<27}", end="")
print("  ".join(f"l={l}: {mean_ratio(RegimeTag.ell_faster(), l, 8):.4f}"
                for l in (1000, 10000, 100000)))
print(f"  {'matched growth l=N:':<27}", end="")
print("  ".join(f"N={n}: {mean_ratio(RegimeTag.ell_comparable(1.0), n, n):.4f}"
                for n in (256, 1024, 4096)))
print(f"  {'grid outruns degree l=512:':<27}", end="")
print("  ".join(f"N={n}: {mean_ratio(RegimeTag.ell_slower(), 512, n):.4f}"
                for n in (100000, 400000, 1600000)))

print()
print("variance: exact / asymptotic form")
print(f"  {'fixed degree l=8:':<27}", end="")
print("  ".join(f"N={n}: {var_ratio(RegimeTag.fixed_ell(), 8, n):.4f}"
                for n in (256, 1024, 4096)))
print("    settles at the lag-weight factor: the tabulated profile constant")
print("    integrates g² without the (1-x) multiplicity weight")
print(f"  {'matched growth l=N:':<27}", end="")
print("  ".join(f"N={n}: {var_ratio(RegimeTag.ell_comparable(1.0), n, n):.4f}"
                for n in (256, 1024, 4096)))
print("    the N³ ln N scale is right; the 2/π⁴ constant is ≈3.8× too small")
print(f"  {'grid outruns degree l=512:':<27}", end="")
print("  ".join(f"N={n}: {var_ratio(RegimeTag.ell_slower(), 512, n):.4f}"
                for n in (100000, 400000, 1600000)))
print("    decays toward 1 with a logarithmic-in-N correction")
print("  (the sparse-grid regime l >> N is omitted: there the spread is set")
print("   by per-increment chi-square noise, not by a grid-refinement form)")
