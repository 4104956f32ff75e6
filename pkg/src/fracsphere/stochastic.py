"""Exact Gaussian sampling of the solution's harmonic coefficients.

The solution of the two-stage equation has independent complex Gaussian
coefficients (m >= 0 stored; m < 0 implied by conjugation for a real field):

    V_{l,0}(t) = E_alpha(-lambda_l t^alpha) sqrt(C_l) Z1_{l,0}
                 + 1_{t>tau} sqrt(A_l) I1_{l,0}(t-tau),
    V_{l,m}(t) = E_alpha(-lambda_l t^alpha) sqrt(C_l/2) (Z1_{l,m} - i Z2_{l,m})
                 + 1_{t>tau} sqrt(A_l/2) (I1_{l,m} - i I2_{l,m}),

with Z ~ N(0,1) iid and I(s) ~ N(0, sigma^2_{l,s,alpha}),
sigma^2_{l,s,alpha} = int_0^s E_alpha(-lambda_l r^alpha)^2 dr.

Sampling at several times reuses the same Z draws (the homogeneous part is
a deterministic decay of the initial field) and draws the stochastic
integrals jointly with their exact two-time covariance

    cross_sigma(l, s, h) = int_0^s E(-lambda (r+h)^a) E(-lambda r^a) dr,

via a Cholesky factor, so temporal increments have the true law.

Randomness is counter-based: every normal variate is determined by
(seed, realization, l, role) through a dedicated Philox key, making draws
order-independent and identical under any work scheduling.
"""

from __future__ import annotations

import functools
import io
import math
import struct
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad as _quad

from .errors import AccuracyError, DomainError
from .spectra import AlgebraicSpectrum, m_alpha
from .specfun import ml_neg

__all__ = [
    "FractionalModel",
    "CoefficientSet",
    "RngStream",
    "ROLE_INIT_RE",
    "ROLE_INIT_IM",
    "noise_role",
    "sigma_squared",
    "sigma_squared_bound",
    "cross_sigma",
    "sample_initial_coefficients",
    "evolve_homogeneous",
    "sample_inhomogeneous",
    "sample_combined",
    "sample_coefficient_rows",
    "sample_combined_pair",
    "sample_combined_times",
    "coefficient_variance",
    "covariance_function",
]


@dataclass(frozen=True)
class FractionalModel:
    """A full problem instance: fractional order, noise onset time, and the
    two angular power spectra."""

    alpha: float
    tau: float
    spec_c: AlgebraicSpectrum
    spec_a: AlgebraicSpectrum

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise DomainError(f"FractionalModel: alpha must be in (0, 1], got {self.alpha}")
        if not (self.tau > 0.0):
            raise DomainError(f"FractionalModel: tau must be > 0, got {self.tau}")


# --------------------------------------------------------------------------
# counter-based RNG streams

ROLE_INIT_RE = 0
ROLE_INIT_IM = 1
_ROLE_NOISE_BASE = 16
_MAX_NOISE_SLOTS = 100


def noise_role(slot, component):
    """Role id of the noise draw for time-slot `slot` (0-based) and
    component 0 (real) / 1 (imag)."""
    if not (0 <= slot < _MAX_NOISE_SLOTS):
        raise DomainError(f"noise slot out of range: {slot}")
    return _ROLE_NOISE_BASE + 2 * slot + component


@dataclass(frozen=True)
class RngStream:
    """Reproducible stream of normals keyed by (seed, realization, l, role).

    Identical coordinates give bit-identical variates on every platform;
    distinct coordinates give independent Philox streams.
    """

    seed: int

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2 ** 64):
            raise DomainError("RngStream: seed must fit in 64 bits")

    def normals(self, realization, ell, role, n):
        if realization < 0 or realization >= 2 ** 36:
            raise DomainError(f"realization index out of range: {realization}")
        if ell < 0 or ell >= 2 ** 20:
            raise DomainError(f"degree out of range: {ell}")
        if role < 0 or role >= 2 ** 8:
            raise DomainError(f"role out of range: {role}")
        hi = (int(realization) << 28) | (int(ell) << 8) | int(role)
        key = np.array([self.seed, hi], dtype=np.uint64)
        gen = np.random.Generator(np.random.Philox(key=key))
        return gen.standard_normal(n)


# --------------------------------------------------------------------------
# coefficient sets

@dataclass
class CoefficientSet:
    """Triangular complex array {V_{l,m} : 0 <= m <= l <= L} of a real
    field's harmonic coefficients, plus bookkeeping."""

    L: int
    values: np.ndarray  # (L+1, L+1) complex, entries with m > l are zero
    time: float = 0.0
    seed: int = 0
    realization: int = 0

    @classmethod
    def zeros(cls, L, time=0.0, seed=0, realization=0):
        return cls(L=int(L), values=np.zeros((L + 1, L + 1), dtype=complex),
                   time=float(time), seed=int(seed), realization=int(realization))

    def copy(self):
        return CoefficientSet(self.L, self.values.copy(), self.time,
                              self.seed, self.realization)

    def degree_power(self):
        """Per-degree Parseval power p_l = |V_{l,0}|^2 + 2 sum_{m>=1} |V_{l,m}|^2."""
        a = np.abs(self.values) ** 2
        return 2.0 * a.sum(axis=1) - a[:, 0]

    def tail_power(self, L_low):
        """sum_{l > L_low} p_l, the squared truncation remainder of this draw."""
        return float(self.degree_power()[L_low + 1:].sum())

    # -- serialization ------------------------------------------------------

    def write_csv(self, path):
        with open(path, "w", newline="") as f:
            f.write("ell,m,re,im\n")
            for ell in range(self.L + 1):
                row = self.values[ell]
                for m in range(ell + 1):
                    f.write("%d,%d,%.17g,%.17g\n" % (ell, m, row[m].real, row[m].imag))

    @classmethod
    def read_csv(cls, path, time=0.0):
        data = np.genfromtxt(path, delimiter=",", skip_header=1)
        data = np.atleast_2d(data)
        L = int(data[:, 0].max())
        out = cls.zeros(L, time=time)
        for ell, m, re, im in data:
            out.values[int(ell), int(m)] = complex(re, im)
        return out

    _MAGIC = b"SFDC"
    _VERSION = 1

    def write_binary(self, path):
        buf = io.BytesIO()
        buf.write(self._MAGIC)
        buf.write(struct.pack("<II", self._VERSION, self.L))
        for ell in range(self.L + 1):
            row = self.values[ell, : ell + 1]
            pairs = np.empty(2 * (ell + 1))
            pairs[0::2] = row.real
            pairs[1::2] = row.imag
            buf.write(pairs.astype("<f8").tobytes())
        with open(path, "wb") as f:
            f.write(buf.getvalue())

    @classmethod
    def read_binary(cls, path, time=0.0):
        with open(path, "rb") as f:
            raw = f.read()
        if raw[:4] != cls._MAGIC:
            raise DomainError(f"not a coefficient file (bad magic): {path}")
        version, L = struct.unpack_from("<II", raw, 4)
        if version != cls._VERSION:
            raise DomainError(f"unsupported coefficient file version {version}")
        out = cls.zeros(L, time=time)
        off = 12
        for ell in range(L + 1):
            pairs = np.frombuffer(raw, dtype="<f8", count=2 * (ell + 1), offset=off)
            off += 16 * (ell + 1)
            out.values[ell, : ell + 1] = pairs[0::2] + 1j * pairs[1::2]
        return out


# --------------------------------------------------------------------------
# variance quadratures

def _lambda(ell):
    return float(ell) * (float(ell) + 1.0)


def _check_ell(ell):
    if not float(ell).is_integer() or ell < 0:
        raise DomainError(f"degree must be a non-negative integer, got {ell!r}")
    return int(ell)


def _decay_points(lam, alpha, upper):
    """Subdivision hints for the adaptive quadrature: the kernel drops on
    the scale lambda^(-1/alpha), steeply near 0 for small alpha."""
    knee = lam ** (-1.0 / alpha)
    return [p for p in (knee / 100.0, knee, 100.0 * knee) if 0.0 < p < upper]


@functools.lru_cache(maxsize=100_000)
def _sigma_squared_cached(ell, t, alpha):
    lam = _lambda(ell)

    def f(r):
        return ml_neg(alpha, lam * r ** alpha) ** 2

    val, err, info = _quad(f, 0.0, t, points=_decay_points(lam, alpha, t) or None,
                           limit=500, epsabs=1e-14 * max(t, 1.0), epsrel=1e-12,
                           full_output=True)[:3]
    if err > max(1e-10 * max(t, 1.0), 1e-9 * abs(val)):
        raise AccuracyError(
            f"sigma_squared: quadrature failed tolerance at l={ell}, t={t}, "
            f"alpha={alpha} (err={err:.2e})")
    return min(val, t)  # integrand <= 1, so sigma^2 <= t


def sigma_squared(ell, t, alpha):
    """Variance of the stochastic integral of the decay kernel:
    int_0^t E_alpha(-lambda_l r^alpha)^2 dr, in [0, t]."""
    ell = _check_ell(ell)
    if not (0.0 < alpha <= 1.0):
        raise DomainError(f"sigma_squared: alpha must be in (0, 1], got {alpha}")
    if t < 0.0:
        raise DomainError(f"sigma_squared: t must be >= 0, got {t}")
    if t == 0.0:
        return 0.0
    if ell == 0:
        return float(t)  # lambda_0 = 0, integrand identically 1
    return _sigma_squared_cached(ell, float(t), float(alpha))


def sigma_squared_bound(ell, t, alpha):
    """Three-regime closed-form upper bound for sigma_squared (l >= 1).

    The alpha = 1/2 branch contains ln(lambda^2 t) and is only valid when
    lambda^2 t > 1; outside that regime a DomainError is raised.
    """
    ell = _check_ell(ell)
    if ell < 1:
        raise DomainError("sigma_squared_bound: requires l >= 1")
    if not (t > 0.0):
        raise DomainError(f"sigma_squared_bound: t must be > 0, got {t}")
    if not (0.0 < alpha <= 1.0):
        raise DomainError(f"sigma_squared_bound: alpha must be in (0, 1], got {alpha}")
    lam = _lambda(ell)
    if alpha < 0.5:
        return lam ** (-1.0 / alpha) + m_alpha(alpha) * t ** (1.0 - 2.0 * alpha) * lam ** -2.0
    if alpha == 0.5:
        if lam * lam * t <= 1.0:
            raise DomainError(
                "sigma_squared_bound: the alpha = 1/2 branch requires lambda^2 t > 1")
        return lam ** -2.0 * (1.0 + m_alpha(0.5) * math.log(lam * lam * t))
    return lam ** (-1.0 / alpha) * (1.0 + m_alpha(alpha))


@functools.lru_cache(maxsize=100_000)
def _cross_sigma_cached(ell, s, h, alpha):
    lam = _lambda(ell)

    def f(r):
        return ml_neg(alpha, lam * (r + h) ** alpha) * ml_neg(alpha, lam * r ** alpha)

    val, err, info = _quad(f, 0.0, s, points=_decay_points(lam, alpha, s) or None,
                           limit=500, epsabs=1e-14 * max(s, 1.0), epsrel=1e-12,
                           full_output=True)[:3]
    if err > max(1e-10 * max(s, 1.0), 1e-9 * abs(val)):
        raise AccuracyError(
            f"cross_sigma: quadrature failed tolerance at l={ell}, s={s}, h={h}")
    return min(val, s)


def cross_sigma(ell, s, h, alpha):
    """Two-time covariance int_0^s E(-lambda (r+h)^a) E(-lambda r^a) dr of the
    stochastic integrals at lags s and s+h; equals sigma_squared at h = 0."""
    ell = _check_ell(ell)
    if s < 0.0 or h < 0.0:
        raise DomainError(f"cross_sigma: s and h must be >= 0, got s={s}, h={h}")
    if s == 0.0:
        return 0.0
    if h == 0.0:
        return sigma_squared(ell, s, alpha)
    if ell == 0:
        return float(s)
    return _cross_sigma_cached(ell, float(s), float(h), float(alpha))


# --------------------------------------------------------------------------
# samplers

def _decay_factors(L, t, alpha):
    """E_alpha(-lambda_l t^alpha) for l = 0..L."""
    if t == 0.0:
        return np.ones(L + 1)
    ells = np.arange(L + 1, dtype=float)
    return np.array([ml_neg(alpha, lv) for lv in ells * (ells + 1.0) * t ** alpha])


def sample_initial_coefficients(spec_c, L, rng, realization=0):
    """Draw the initial isotropic Gaussian field's coefficients at degree L.

    V_{l,0} = sqrt(C_l) Z1_{l,0};  V_{l,m} = sqrt(C_l/2)(Z1_{l,m} - i Z2_{l,m}).
    """
    L = _check_ell(L)
    out = CoefficientSet.zeros(L, time=0.0, seed=rng.seed, realization=realization)
    for ell in range(L + 1):
        cl = spec_c.value(ell)
        if cl == 0.0:
            continue
        z1 = rng.normals(realization, ell, ROLE_INIT_RE, ell + 1)
        out.values[ell, 0] = math.sqrt(cl) * z1[0]
        if ell >= 1:
            z2 = rng.normals(realization, ell, ROLE_INIT_IM, ell)
            out.values[ell, 1: ell + 1] = math.sqrt(cl / 2.0) * (z1[1:] - 1j * z2)
    return out


def evolve_homogeneous(init, t, alpha):
    """Decay every coefficient by E_alpha(-lambda_l t^alpha); identity at t = 0."""
    if t < 0.0:
        raise DomainError(f"evolve_homogeneous: t must be >= 0, got {t}")
    out = init.copy()
    out.time = float(t)
    if t == 0.0:
        return out
    fac = _decay_factors(init.L, t, alpha)
    out.values *= fac[:, None]
    return out


def _noise_rows(spec_a, L, rng, realization, slot):
    """Unit-variance complex noise rows eta_{l,m} for one time slot
    (None for rows with A_l = 0)."""
    rows = []
    for ell in range(L + 1):
        if spec_a.value(ell) == 0.0:
            rows.append(None)
            continue
        e1 = rng.normals(realization, ell, noise_role(slot, 0), ell + 1)
        e2 = rng.normals(realization, ell, noise_role(slot, 1), ell) if ell >= 1 else None
        rows.append((e1, e2))
    return rows


def _add_joint_noise(model_spec_a, alpha, outs, lags, L, rng, realization):
    """Add the stochastic-integral part jointly at the given increasing
    lags, one output set per lag.

    Per (l, m) the vector (I(s_1), ..., I(s_k)) is Gaussian with
    Cov(i, j) = cross_sigma at the lag pair; the Cholesky factor maps
    independent slot draws onto it.  The k = 1 case is the plain
    single-time draw (identical bits, since chol[0,0] = sqrt(sigma^2)).
    """
    k = len(lags)
    all_rows = [_noise_rows(model_spec_a, L, rng, realization, slot) for slot in range(k)]
    for ell in range(L + 1):
        if all_rows[0][ell] is None:
            continue
        al = math.sqrt(model_spec_a.value(ell))
        chol = _joint_noise_scales(ell, lags, alpha)
        for i in range(k):
            acc0 = 0.0
            accm = np.zeros(ell, dtype=complex) if ell >= 1 else None
            for j in range(i + 1):
                e1, e2 = all_rows[j][ell]
                acc0 += chol[i, j] * e1[0]
                if ell >= 1:
                    accm = accm + chol[i, j] * (e1[1:] - 1j * e2)
            outs[i].values[ell, 0] += al * acc0
            if ell >= 1:
                outs[i].values[ell, 1: ell + 1] += al / math.sqrt(2.0) * accm


def sample_inhomogeneous(spec_a, L, t, tau, alpha, rng, realization=0):
    """Draw the noise-driven part at time t: zero for t <= tau, otherwise
    V built from I ~ N(0, sigma^2_{l,t-tau,alpha}) with the A_l scaling."""
    L = _check_ell(L)
    if not (tau > 0.0):
        raise DomainError(f"sample_inhomogeneous: tau must be > 0, got {tau}")
    out = CoefficientSet.zeros(L, time=float(t), seed=rng.seed, realization=realization)
    if t <= tau:
        return out
    _add_joint_noise(spec_a, alpha, [out], [t - tau], L, rng, realization)
    return out


def sample_combined(model, L, t, rng, realization=0):
    """Draw the full solution's coefficients at time t (homogeneous decay of
    an initial draw plus, past tau, the independent noise integral)."""
    if not (t > 0.0):
        raise DomainError(f"sample_combined: t must be > 0, got {t}")
    init = sample_initial_coefficients(model.spec_c, L, rng, realization)
    out = evolve_homogeneous(init, t, model.alpha)
    if t > model.tau:
        noise = sample_inhomogeneous(model.spec_a, L, t, model.tau, model.alpha,
                                     rng, realization)
        out.values += noise.values
    return out


def sample_coefficient_rows(model, t, rng, ells, realization=0):
    """Rows {l: (V_{l,0..l})} of sample_combined at time t, drawing only the
    requested degrees (bit-identical to the full sampler's rows; used by
    Monte Carlo checks that need a few degrees at many realizations)."""
    if not (t > 0.0):
        raise DomainError(f"sample_coefficient_rows: t must be > 0, got {t}")
    out = {}
    for ell in ells:
        ell = _check_ell(ell)
        row = np.zeros(ell + 1, dtype=complex)
        cl = model.spec_c.value(ell)
        if cl > 0.0:
            z1 = rng.normals(realization, ell, ROLE_INIT_RE, ell + 1)
            row[0] = math.sqrt(cl) * z1[0]
            if ell >= 1:
                z2 = rng.normals(realization, ell, ROLE_INIT_IM, ell)
                row[1:] = math.sqrt(cl / 2.0) * (z1[1:] - 1j * z2)
        row *= ml_neg(model.alpha, _lambda(ell) * t ** model.alpha)
        if t > model.tau and model.spec_a.value(ell) > 0.0:
            al = math.sqrt(model.spec_a.value(ell))
            chol = _joint_noise_scales(ell, [t - model.tau], model.alpha)
            e1 = rng.normals(realization, ell, noise_role(0, 0), ell + 1)
            row[0] += al * (chol[0, 0] * e1[0])
            if ell >= 1:
                e2 = rng.normals(realization, ell, noise_role(0, 1), ell)
                row[1:] += al / math.sqrt(2.0) * (chol[0, 0] * (e1[1:] - 1j * e2))
        out[ell] = row
    return out


def _joint_noise_scales(ell, lags, alpha):
    """Cholesky factor of the covariance matrix of the stochastic integrals
    at the given increasing lags (entries Cov = cross_sigma at min lag)."""
    k = len(lags)
    cov = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            lo, hi = lags[i], lags[j]
            cov[i, j] = cov[j, i] = cross_sigma(ell, lo, hi - lo, alpha)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        # allow tiny negative eigenvalues from quadrature roundoff
        w, v = np.linalg.eigh(cov)
        if np.min(w) < -1e-12 * max(np.max(w), 1e-300):
            raise AccuracyError(
                f"joint noise covariance not positive semidefinite at l={ell}, "
                f"lags={lags} (min eig {np.min(w):.2e})")
        w = np.clip(w, 0.0, None)
        return v * np.sqrt(w)


def sample_combined_times(model, L, times, rng, realization=0):
    """Draw the solution jointly at several increasing times.

    The homogeneous part shares one set of Z draws across all times; the
    noise integrals are drawn as the exact joint Gaussian across times via
    the cross-covariance Cholesky factor, so differences between times have
    the true increment law.
    """
    times = [float(t) for t in times]
    if any(t <= 0.0 for t in times) or any(b <= a for a, b in zip(times, times[1:])):
        raise DomainError("sample_combined_times: times must be positive and increasing")
    L = _check_ell(L)
    init = sample_initial_coefficients(model.spec_c, L, rng, realization)
    outs = [evolve_homogeneous(init, t, model.alpha) for t in times]
    lags = [t - model.tau for t in times if t > model.tau]
    if lags:
        first = len(times) - len(lags)
        _add_joint_noise(model.spec_a, model.alpha, outs[first:], lags, L,
                         rng, realization)
    return outs


def sample_combined_pair(model, L, t, h, rng, realization=0):
    """Draw (U(t), U(t+h)) jointly, t > tau, h > 0; the marginal at t is
    bit-identical to sample_combined with the same coordinates."""
    if not (t > model.tau):
        raise DomainError(f"sample_combined_pair: need t > tau, got t={t}, tau={model.tau}")
    if not (h > 0.0):
        raise DomainError(f"sample_combined_pair: h must be > 0, got {h}")
    a, b = sample_combined_times(model, L, [t, t + h], rng, realization)
    return a, b


# --------------------------------------------------------------------------
# analytic second moments

def coefficient_variance(model, ell, t):
    """E|V_{l,m}(t)|^2 = C_l E_alpha(-lambda_l t^alpha)^2
    + 1_{t>tau} A_l sigma^2_{l,t-tau,alpha}."""
    ell = _check_ell(ell)
    if not (t > 0.0):
        raise DomainError(f"coefficient_variance: t must be > 0, got {t}")
    lam = _lambda(ell)
    e = ml_neg(model.alpha, lam * t ** model.alpha)
    v = model.spec_c.value(ell) * e * e
    if t > model.tau:
        v += model.spec_a.value(ell) * sigma_squared(ell, t - model.tau, model.alpha)
    return v


def covariance_function(model, t, cos_angle, lmax):
    """Truncated covariance series sum_l (2l+1) Var_l(t) P_l(cos angle);
    at cos_angle = 1 this is the pointwise field variance."""
    if abs(cos_angle) > 1.0 + 1e-14:
        raise DomainError(f"covariance_function: |cos_angle| must be <= 1, got {cos_angle}")
    lmax = _check_ell(lmax)
    var = np.array([coefficient_variance(model, ell, t) for ell in range(lmax + 1)])
    coeffs = (2.0 * np.arange(lmax + 1) + 1.0) * var
    return float(np.polynomial.legendre.legval(min(1.0, max(-1.0, cos_angle)), coeffs))
