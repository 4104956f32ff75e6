#!/usr/bin/env python3
"""Spatial regularity: the variance of field differences is Hoelder.

For points x, y at geodesic distance theta, Var[U(x,t) - U(y,t)] computed
from the covariance series stays below K * theta^(2 beta*) whenever both
power spectra decay faster than 2(1 + beta*).  The constant K is fully
explicit (weighted spectral sums), so the envelope is checkable.
"""

import math

import numpy as np

from fracsphere import (AlgebraicSpectrum, FractionalModel,
                        covariance_function, holder_envelope)

model = FractionalModel(
    alpha=0.5,
    tau=1e-5,
    spec_c=AlgebraicSpectrum(1.0, 1.0, 2.3),
    spec_a=AlgebraicSpectrum(1e4, 1e4, 2.5),
)

beta_star = 0.1  # admissible: 2.3, 2.5 > 2 (1 + 0.1)
t = 10 * model.tau
lmax = 600

k = holder_envelope(beta_star, t, model.tau, model.spec_c, model.spec_a)
c_at_zero = covariance_function(model, t, 1.0, lmax)

print(f"envelope constant K = {k:.2f} at regularity exponent {beta_star}")
print("theta        Var[U(x)-U(y)]   K theta^(2 beta*)   ratio")
for theta in np.logspace(-3, math.log10(math.pi), 10):
    var = 2.0 * (c_at_zero - covariance_function(model, t, math.cos(theta), lmax))
    env = k * theta ** (2 * beta_star)
    print(f"{theta:9.2e}   {var:13.5f}   {env:15.2f}   {var / env:7.4f}")

print("\nsmall-angle behavior: the series variance vanishes like "
      "theta^2 (smooth truncation), while the envelope only needs "
      f"theta^{2 * beta_star:g}; the envelope holds with a wide margin.")
