import math

import mpmath as mp
import numpy as np
import pytest

from fracsphere import AlgebraicSpectrum, FractionalModel


@pytest.fixture(scope="session")
def ref_spectra():
    """The reference parameter study's spectra: kappa1=2.3 head/coeff 1,
    kappa2=2.5 head/coeff 1e4."""
    return (AlgebraicSpectrum(1.0, 1.0, 2.3),
            AlgebraicSpectrum(1e4, 1e4, 2.5))


@pytest.fixture(scope="session")
def model05(ref_spectra):
    return FractionalModel(0.5, 1e-5, *ref_spectra)


@pytest.fixture(scope="session")
def model075(ref_spectra):
    return FractionalModel(0.75, 1e-5, *ref_spectra)


def ml_oracle(alpha, x, beta=1.0, dps=35):
    """High-precision E_{alpha,beta}(-x) oracle (mpmath).

    Power series for small x, branch-cut integral otherwise; independent of
    the package's double-precision evaluator.
    """
    with mp.workdps(dps):
        a, b, xx = mp.mpf(alpha), mp.mpf(beta), mp.mpf(x)
        if xx == 0:
            return 1 / mp.gamma(b)
        if a == 1:
            # E_{1,b}(z) = M(1, b, z)/Gamma(b); branch-cut form is singular here
            return mp.hyp1f1(1, b, -xx) / mp.gamma(b)
        if xx <= 3:
            s = mp.mpf(0)
            k = 0
            while True:
                term = (-xx) ** k / mp.gamma(a * k + b)
                s += term
                if k > 4 and abs(term) < mp.mpf(10) ** (-dps - 5):
                    break
                k += 1
            return s
        if b > 1:
            return (1 / mp.gamma(b - a) - ml_oracle(alpha, x, float(b - a), dps)) / xx

        # substituted branch-cut integrand (v = r^alpha): smooth at 0
        def f(v):
            num = xx * mp.sinpi(b - a) + v * mp.sinpi(b)
            den = v * v + 2 * xx * v * mp.cospi(a) + xx * xx
            return mp.e ** (-v ** (1 / a)) * v ** ((1 - b) / a) * num / den

        knots = [0, 1, 10]
        if mp.cospi(a) < 0:  # denominator dip at v0
            v0 = -xx * mp.cospi(a)
            w = xx * abs(mp.sinpi(a))
            knots += [max(v0 - w, mp.mpf("0.01")), v0, v0 + w]
        knots = sorted(set(float(k) for k in knots))
        return mp.quad(f, knots + [mp.inf], maxdegree=10) / (a * mp.pi)


def unit_points(n, seed):
    """n reproducible random unit vectors."""
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def harmonic_table(point, lmax):
    """Y_{l,m}(point) for 0 <= m <= l <= lmax via the package's normalized
    Legendre recurrences (vectorized companion to spherical_harmonic)."""
    from fracsphere.specfun import assoc_legendre_norm_all

    x = math.cos(point.theta)
    table = np.zeros((lmax + 1, lmax + 1), dtype=complex)
    for m in range(lmax + 1):
        rows = assoc_legendre_norm_all(lmax, m, np.array([x]))[:, 0]
        phase = complex(math.cos(m * point.phi), math.sin(m * point.phi))
        table[m:, m] = rows * phase
    return table


def addition_sum(table_x, table_y, ell):
    """sum_{m=-l}^{l} Y_{l,m}(x) conj(Y_{l,m}(y)) from m >= 0 tables."""
    z = table_x[ell, 1: ell + 1] @ np.conj(table_y[ell, 1: ell + 1])
    return (table_x[ell, 0] * np.conj(table_y[ell, 0]) + 2.0 * z.real).real
