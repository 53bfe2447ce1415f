"""Approach to normality when the degree grows with the grid (l = N).

Two diagnostics per size: the exact fourth-moment distance bound for the
normalized statistic, and the empirical Kolmogorov-Smirnov distance of
4000 simulated values against the standard normal. Both shrink, slowly,
which is the expected logarithmic pace.
"""

import math

import numpy as np

from sphereqv.covariance import LineGrid, increment_gram_fl
from sphereqv.harness import ks_normal
from sphereqv.moments import exact_mean_vnl, exact_var_vnl, fourth_moment_bound
from sphereqv.simulate import SampleSpec, SingleEll, batch_quadratic_variation

REPS = 4000
print(f"{'l=N':>5} {'4th-moment bound':>17} {'KS vs normal':>13} {'ln N':>7}")
for n in (64, 128, 256, 512):
    gram = increment_gram_fl(n, 1.0, LineGrid(n))
    bound = fourth_moment_bound(gram)
    spec = SampleSpec(target=SingleEll(n, 1.0), grid=LineGrid(n),
                      seed=52000 + n, replications=REPS)
    v = batch_quadratic_variation(spec, 0, REPS)
    f = (v - exact_mean_vnl(n, 1.0, n)) / math.sqrt(exact_var_vnl(gram))
    print(f"{n:>5} {bound:>17.4f} {ks_normal(f):>13.4f} {math.log(n):>7.3f}")
print("halving the bound takes roughly squaring N: a 1/ln N pace")
