"""Angular power-spectrum models and closed-form constants of the
truncation / temporal-increment error bounds.

All bounds below are for the two-stage model
    dU - D_t^{1-alpha} Laplacian U dt = { 0 on (0,tau], dW_tau on [tau,inf) },
with an algebraically decaying initial spectrum C_l (decay kappa1) and
noise spectrum A_l (decay kappa2); lambda_l = l(l+1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .specfun import gamma, ml_neg

__all__ = [
    "AlgebraicSpectrum",
    "TabulatedSpectrum",
    "BoundConstants",
    "tail_constant",
    "m_alpha",
    "gamma_alpha_kappa",
    "psi_h",
    "psi_i",
    "bound_qh",
    "bound_qi",
    "bound_q_combined",
    "combined_case",
    "increment_bound",
    "holder_envelope",
    "measured_increment_c",
    "bound_constants",
]


@dataclass(frozen=True)
class AlgebraicSpectrum:
    """Power spectrum: `head` at l = 0, `coeff` * l^-kappa for l >= 1.

    kappa > 2 guarantees sum (2l+1) X_l < infinity.
    """

    head: float
    coeff: float
    kappa: float

    def __post_init__(self):
        if self.head < 0 or not math.isfinite(self.head):
            raise DomainError(f"AlgebraicSpectrum: head must be >= 0, got {self.head}")
        if self.coeff < 0 or not math.isfinite(self.coeff):
            raise DomainError(f"AlgebraicSpectrum: coeff must be >= 0, got {self.coeff}")
        if not (self.kappa > 2.0):
            raise DomainError(
                f"AlgebraicSpectrum: kappa must be > 2 for summability, got {self.kappa}")

    def value(self, ell):
        if not float(ell).is_integer() or ell < 0:
            raise DomainError(f"spectrum value: l must be a non-negative integer, got {ell!r}")
        ell = int(ell)
        return self.head if ell == 0 else self.coeff * float(ell) ** (-self.kappa)

    def values(self, ells):
        ells = np.asarray(ells)
        out = np.empty(ells.shape, dtype=float)
        zero = ells == 0
        out[zero] = self.head
        nz = ~zero
        out[nz] = self.coeff * ells[nz].astype(float) ** (-self.kappa)
        return out


@dataclass(frozen=True)
class TabulatedSpectrum:
    """Power spectrum given as a plain list X_0, X_1, ... (zero beyond the
    end).  Usable wherever a spectrum is sampled or summed; the closed-form
    tail bounds need an algebraic decay and do not apply."""

    table: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.table)
        if any(v < 0 or not math.isfinite(v) for v in vals):
            raise DomainError("TabulatedSpectrum: values must be finite and >= 0")
        object.__setattr__(self, "table", vals)

    def value(self, ell):
        if not float(ell).is_integer() or ell < 0:
            raise DomainError(f"spectrum value: l must be a non-negative integer, got {ell!r}")
        ell = int(ell)
        return self.table[ell] if ell < len(self.table) else 0.0

    def values(self, ells):
        return np.array([self.value(ell) for ell in np.asarray(ells).ravel()]
                        ).reshape(np.asarray(ells).shape)


def _check_alpha(alpha):
    if not (0.0 < alpha <= 1.0):
        raise DomainError(f"alpha must be in (0, 1], got {alpha}")
    return float(alpha)


def tail_constant(spectrum):
    """sqrt(coeff * (2/(kappa-2) + 1/(kappa-1))): constant dominating the
    spectrum tail, sum_{l>L} (2l+1) X_l <= tail_constant^2 * L^(2-kappa)."""
    k = spectrum.kappa
    return math.sqrt(spectrum.coeff * (2.0 / (k - 2.0) + 1.0 / (k - 1.0)))


def m_alpha(alpha):
    """Gamma(1+alpha)^2 / |2 alpha - 1| away from alpha = 1/2, and
    Gamma(3/2)^2 there."""
    alpha = _check_alpha(alpha)
    if alpha == 0.5:
        return gamma(1.5) ** 2
    return gamma(1.0 + alpha) ** 2 / abs(2.0 * alpha - 1.0)


def gamma_alpha_kappa(alpha, kappa2):
    """Decay exponent of the inhomogeneous truncation bound for
    t well past the knee: kappa2+2 (alpha < 1/2), kappa2 + 2/alpha - 2
    (alpha > 1/2), kappa2 (alpha = 1/2)."""
    alpha = _check_alpha(alpha)
    if not (kappa2 > 2.0):
        raise DomainError(f"gamma_alpha_kappa: kappa2 must be > 2, got {kappa2}")
    if alpha < 0.5:
        return kappa2 + 2.0
    if alpha == 0.5:
        return float(kappa2)
    return kappa2 + 2.0 / alpha - 2.0


def psi_h(alpha, t):
    """Gamma(1+alpha) * t^-alpha, the time factor of the homogeneous bound."""
    alpha = _check_alpha(alpha)
    if not (t > 0.0):
        raise DomainError(f"psi_h: t must be > 0, got {t}")
    return gamma(1.0 + alpha) * t ** (-alpha)


def _k_half(t):
    m = m_alpha(0.5)
    if t > 1.0:
        return math.sqrt(1.0 + m * (2.0 + math.log(t)))
    return math.sqrt(1.0 + 2.0 * m)


def psi_i(alpha, t):
    """Time factor of the inhomogeneous bound; logarithmic K(t) at the
    critical order alpha = 1/2."""
    alpha = _check_alpha(alpha)
    if not (t > 0.0):
        raise DomainError(f"psi_i: t must be > 0, got {t}")
    if alpha < 0.5:
        return math.sqrt(1.0 + m_alpha(alpha) * t ** (1.0 - 2.0 * alpha))
    if alpha == 0.5:
        return _k_half(t)
    return math.sqrt(1.0 + m_alpha(alpha))


def _lambda(L):
    return float(L) * (float(L) + 1.0)


def _check_L(L):
    if not float(L).is_integer() or L < 1:
        raise DomainError(f"truncation degree L must be an integer >= 1, got {L!r}")
    return int(L)


def bound_qh(L, t, alpha, spec_c):
    """Upper bound for the homogeneous truncation error Q^H_L(t).

    Points exactly on the regime boundary go to the earlier regime.
    """
    L = _check_L(L)
    alpha = _check_alpha(alpha)
    if not (t > 0.0):
        raise DomainError(f"bound_qh: t must be > 0, got {t}")
    knee = _lambda(L) ** (-1.0 / alpha)
    ct = tail_constant(spec_c)
    if t <= knee:
        return ct * L ** (-(spec_c.kappa - 2.0) / 2.0)
    return psi_h(alpha, t) * ct * L ** (-(2.0 + spec_c.kappa) / 2.0)


def bound_qi(L, t, tau, alpha, spec_a):
    """Upper bound for the inhomogeneous truncation error Q^I_L(t), t > tau."""
    L = _check_L(L)
    alpha = _check_alpha(alpha)
    if not (tau > 0.0):
        raise DomainError(f"bound_qi: tau must be > 0, got {tau}")
    if not (t > tau):
        raise DomainError(f"bound_qi: need t > tau, got t={t}, tau={tau}")
    knee = _lambda(L) ** (-1.0 / alpha)
    at = tail_constant(spec_a)
    if t <= tau + knee:
        return at * L ** (-(spec_a.kappa + 2.0 / alpha - 2.0) / 2.0)
    return psi_i(alpha, t - tau) * at * L ** (-gamma_alpha_kappa(alpha, spec_a.kappa) / 2.0)


def combined_case(L, t, tau, alpha):
    """Which case of the combined truncation bound applies at (L, t):
    1, 2 or 3.  Raises DomainError naming the violated condition when no
    case applies (t at or below the knee but tau below it too)."""
    L = _check_L(L)
    alpha = _check_alpha(alpha)
    if not (t > 0.0):
        raise DomainError(f"combined bound: t must be > 0, got {t}")
    if not (tau > 0.0):
        raise DomainError(f"combined bound: tau must be > 0, got {tau}")
    knee = _lambda(L) ** (-1.0 / alpha)
    if t <= knee:
        if tau >= knee:
            return 1
        raise DomainError(
            f"combined bound: case I requires tau >= lambda_L^(-1/alpha) "
            f"(= {knee:.3e}), got tau = {tau:.3e} at L = {L}")
    if t <= tau + knee:
        return 2
    return 3


def bound_q_combined(L, t, tau, alpha, spec_c, spec_a):
    """Upper bound for the combined truncation error Q_L(t).

    Case I (early time): tail of the initial spectrum only.
    Case II (between the knees): mixed constant, exponent
        min(kappa1+2, kappa2+2/alpha-2).
    Case III (late time): exponent min(kappa1+2, gamma_alpha(kappa2)).
    """
    case = combined_case(L, t, tau, alpha)
    ct = tail_constant(spec_c)
    at = tail_constant(spec_a)
    k1, k2 = spec_c.kappa, spec_a.kappa
    if case == 1:
        return ct * L ** (-(k1 - 2.0) / 2.0)
    if case == 2:
        khat = min(k1 + 2.0, k2 + 2.0 / alpha - 2.0)
        return math.hypot(psi_h(alpha, t) * ct, at) * L ** (-khat / 2.0)
    kal = min(k1 + 2.0, gamma_alpha_kappa(alpha, k2))
    return math.hypot(psi_h(alpha, t) * ct,
                      psi_i(alpha, t - tau) * at) * L ** (-kal / 2.0)


_measured_c_cache: dict[float, float] = {}


def measured_increment_c(alpha, override=None):
    """The generic constant C of the increment bound, measured once per
    alpha as max over a log grid x in [1e-6, 1e8] of (1+x) E_{alpha,alpha}(-x).

    `override` substitutes a user-configured value.
    """
    alpha = _check_alpha(alpha)
    if override is not None:
        if not (override > 0.0):
            raise DomainError(f"increment constant override must be > 0, got {override}")
        return float(override)
    if alpha not in _measured_c_cache:
        xs = np.logspace(-6.0, 8.0, 200)
        vals = (1.0 + xs) * np.array([ml_neg(alpha, x, beta=alpha) for x in xs])
        # include the x -> 0 limit E_{a,a}(0) = 1/Gamma(a)
        _measured_c_cache[alpha] = max(float(np.max(vals)), 1.0 / gamma(alpha))
    return _measured_c_cache[alpha]


def increment_bound(t, h, tau, alpha, spec_c, spec_a, c):
    """q(t) * sqrt(h) with q(t) = sqrt(c*Ctail^2/t + (1+c)*Atail^2)."""
    _check_alpha(alpha)
    if not (tau > 0.0):
        raise DomainError(f"increment_bound: tau must be > 0, got {tau}")
    if not (t > tau):
        raise DomainError(f"increment_bound: need t > tau, got t={t}, tau={tau}")
    if not (h > 0.0):
        raise DomainError(f"increment_bound: h must be > 0, got {h}")
    if not (c > 0.0):
        raise DomainError(f"increment_bound: c must be > 0, got {c}")
    ct2 = tail_constant(spec_c) ** 2
    at2 = tail_constant(spec_a) ** 2
    q = math.sqrt(c * ct2 / t + (1.0 + c) * at2)
    return q * math.sqrt(h)


def _weighted_tail_sum(spectrum, expo, lmax):
    """sum_{l=1..lmax} l^expo * X_l plus an integral bound on the remainder."""
    ells = np.arange(1, lmax + 1, dtype=float)
    s = float(np.sum(ells ** expo * spectrum.coeff * ells ** (-spectrum.kappa)))
    decay = spectrum.kappa - expo  # > 1 under the envelope assumption
    s += spectrum.coeff * lmax ** (1.0 - decay) / (decay - 1.0)
    return s


def holder_envelope(beta_star, t, tau, spec_c, spec_a, lmax=100_000):
    """Constant K of the spatial variance envelope
    Var[U(x,t) - U(y,t)] <= K * d(x,y)^(2 beta*).

    K = 2^(4-beta*) * (K1 + (t-tau) * K2 * 1_{t>tau}) with
    Kj = sum_l l^(1+2 beta*) X_l, summed to lmax with the integral remainder
    added (so the reported value is an upper bound, monotone in lmax).
    Requires kappa1, kappa2 > 2(1 + beta*).
    """
    if not (0.0 < beta_star <= 1.0):
        raise DomainError(f"holder_envelope: beta* must be in (0, 1], got {beta_star}")
    need = 2.0 * (1.0 + beta_star)
    if spec_c.kappa <= need or spec_a.kappa <= need:
        raise DomainError(
            f"holder_envelope: requires kappa1, kappa2 > {need}, got "
            f"{spec_c.kappa}, {spec_a.kappa}")
    if not (tau > 0.0):
        raise DomainError(f"holder_envelope: tau must be > 0, got {tau}")
    expo = 1.0 + 2.0 * beta_star
    k1 = _weighted_tail_sum(spec_c, expo, int(lmax))
    out = k1
    if t > tau:
        out = out + (t - tau) * _weighted_tail_sum(spec_a, expo, int(lmax))
    return 2.0 ** (4.0 - beta_star) * out


@dataclass(frozen=True)
class BoundConstants:
    """The closed-form constants for one model configuration."""

    c_tail_c: float
    c_tail_a: float
    m_alpha: float
    gamma_alpha: float
    increment_c: float


def bound_constants(alpha, spec_c, spec_a, increment_c_override=None):
    """All bound constants for a model, as exported by the CLI."""
    return BoundConstants(
        c_tail_c=tail_constant(spec_c),
        c_tail_a=tail_constant(spec_a),
        m_alpha=m_alpha(alpha),
        gamma_alpha=gamma_alpha_kappa(alpha, spec_a.kappa),
        increment_c=measured_increment_c(alpha, override=increment_c_override),
    )
