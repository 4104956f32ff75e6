import math

import numpy as np
import pytest

from fracsphere import (AlgebraicSpectrum, CoefficientSet, DomainError,
                        FractionalModel, RngStream, coefficient_variance,
                        covariance_function, cross_sigma, evolve_homogeneous,
                        holder_envelope, ml_neg, sample_coefficient_rows,
                        sample_combined, sample_combined_pair,
                        sample_combined_times, sample_inhomogeneous,
                        sample_initial_coefficients, sigma_squared,
                        sigma_squared_bound)


def closed_form_sigma2_a1(ell, t):
    lam = ell * (ell + 1.0)
    return -math.expm1(-2.0 * lam * t) / (2.0 * lam) if ell else t


# --------------------------------------------------------------------------
# sigma^2 and cross covariance

def test_sigma_squared_trivial():
    assert sigma_squared(0, 3.0, 0.7) == 3.0
    assert sigma_squared(17, 0.0, 0.7) == 0.0


def test_sigma_squared_alpha1_closed_form():
    # quadrature against the exact (1 - e^(-2 lambda t))/(2 lambda)
    for ell in (1, 2, 7, 30, 100):
        for t in (1e-4, 1e-2, 1.0, 10.0):
            ref = closed_form_sigma2_a1(ell, t)
            assert sigma_squared(ell, t, 1.0) == pytest.approx(ref, rel=1e-9)


def test_sigma_squared_le_t_and_monotone():
    ts = np.logspace(-6, 1, 12)
    for alpha in (0.3, 0.5, 0.75, 1.0):
        for ell in (1, 5, 40, 200):
            vals = [sigma_squared(ell, float(t), alpha) for t in ts]
            assert all(v <= t * (1 + 1e-12) for v, t in zip(vals, ts))
            assert all(b >= a * (1 - 1e-12) for a, b in zip(vals, vals[1:]))
        # non-increasing in ell at fixed t
        for t in (1e-3, 1.0):
            by_ell = [sigma_squared(ell, t, alpha) for ell in (1, 2, 5, 20, 90, 200)]
            assert all(b <= a * (1 + 1e-12) for a, b in zip(by_ell, by_ell[1:]))


def test_sigma_squared_bound_values_and_domination():
    # placed examples
    assert sigma_squared_bound(1, 1.0, 1.0) == pytest.approx(1.0, rel=1e-14)
    ref = 30.0 ** -2.0 * (1.0 + math.pi / 4.0 * math.log(900.0 * 10.0))
    assert sigma_squared_bound(5, 10.0, 0.5) == pytest.approx(ref, rel=1e-14)
    # domination wherever the regime assumptions hold
    for alpha in (0.3, 0.5, 0.75, 1.0):
        for ell in (1, 4, 15, 60, 200):
            for t in np.logspace(-5, 1, 8):
                lam = ell * (ell + 1.0)
                if alpha == 0.5 and lam * lam * t <= 1.0:
                    with pytest.raises(DomainError):
                        sigma_squared_bound(ell, float(t), alpha)
                    continue
                assert sigma_squared(ell, float(t), alpha) <= \
                    sigma_squared_bound(ell, float(t), alpha) * (1 + 1e-10)


def test_cross_sigma_basics():
    assert cross_sigma(3, 0.5, 0.0, 0.6) == sigma_squared(3, 0.5, 0.6)
    assert cross_sigma(0, 0.7, 0.3, 0.6) == 0.7
    # alpha = 1 closed form: e^(-lambda h) sigma^2(s)
    got = cross_sigma(1, 1.0, 0.5, 1.0)
    assert got == pytest.approx(math.exp(-1.0) * closed_form_sigma2_a1(1, 1.0), rel=1e-9)


def test_cross_sigma_cauchy_schwarz():
    for alpha in (0.5, 0.75, 1.0):
        for ell in (1, 9, 50):
            for s, h in ((1e-6, 1e-6), (1e-3, 5e-4), (0.5, 2.0)):
                c = cross_sigma(ell, s, h, alpha)
                hi = math.sqrt(sigma_squared(ell, s, alpha)
                               * sigma_squared(ell, s + h, alpha))
                assert 0.0 <= c <= hi * (1 + 1e-10)


# --------------------------------------------------------------------------
# samplers: determinism and shape

@pytest.fixture(scope="module")
def spectra():
    return AlgebraicSpectrum(1.0, 1.0, 2.3), AlgebraicSpectrum(1e4, 1e4, 2.5)


@pytest.fixture(scope="module")
def model(spectra):
    return FractionalModel(0.5, 1e-5, *spectra)


def test_sampler_determinism(model):
    rng = RngStream(987654321)
    a = sample_combined(model, 40, 1e-4, rng, realization=7)
    b = sample_combined(model, 40, 1e-4, rng, realization=7)
    assert np.array_equal(a.values, b.values)
    c = sample_combined(model, 40, 1e-4, rng, realization=8)
    assert not np.array_equal(a.values, c.values)
    d = sample_combined(model, 40, 1e-4, RngStream(123), realization=7)
    assert not np.array_equal(a.values, d.values)


def test_initial_sampler_structure(spectra):
    spec_c, _ = spectra
    rng = RngStream(5)
    init = sample_initial_coefficients(spec_c, 30, rng)
    assert init.time == 0.0
    assert np.all(init.values[:, 0].imag == 0.0)  # m = 0 row is real
    tri = np.tril(np.ones((31, 31), dtype=bool))
    assert np.all(init.values[~tri] == 0.0)  # m > l entries empty
    zero = sample_initial_coefficients(AlgebraicSpectrum(0, 0, 2.5), 10, rng)
    assert np.all(zero.values == 0.0)


def test_evolve_homogeneous(model):
    rng = RngStream(5)
    init = sample_initial_coefficients(model.spec_c, 20, rng)
    same = evolve_homogeneous(init, 0.0, model.alpha)
    assert np.array_equal(same.values, init.values)
    later = evolve_homogeneous(init, 0.5, model.alpha)
    assert later.values[0, 0] == init.values[0, 0]  # lambda_0 = 0
    fac = ml_neg(model.alpha, 2.0 * 0.5 ** model.alpha)
    assert later.values[1, 1] == pytest.approx(fac * init.values[1, 1], rel=1e-14)


def test_inhomogeneous_zero_until_onset(model):
    rng = RngStream(5)
    pre = sample_inhomogeneous(model.spec_a, 10, model.tau, model.tau,
                               model.alpha, rng)
    assert np.all(pre.values == 0.0)
    zero_spec = sample_inhomogeneous(AlgebraicSpectrum(0, 0, 2.5), 10, 1.0,
                                     model.tau, model.alpha, rng)
    assert np.all(zero_spec.values == 0.0)
    post = sample_inhomogeneous(model.spec_a, 10, 2 * model.tau, model.tau,
                                model.alpha, rng)
    assert np.any(post.values != 0.0)
    assert np.all(post.values[:, 0].imag == 0.0)


def test_combined_before_onset_is_homogeneous(model):
    rng = RngStream(44)
    t = model.tau / 2
    combined = sample_combined(model, 15, t, rng, realization=2)
    hom = evolve_homogeneous(
        sample_initial_coefficients(model.spec_c, 15, rng, realization=2),
        t, model.alpha)
    assert np.array_equal(combined.values, hom.values)


def test_row_sampler_matches_full(model):
    rng = RngStream(31337)
    for t in (model.tau / 2, 10 * model.tau):
        full = sample_combined(model, 50, t, rng, realization=9)
        rows = sample_coefficient_rows(model, t, rng, [0, 5, 50], realization=9)
        for ell, row in rows.items():
            assert np.array_equal(row, full.values[ell, : ell + 1])


def test_pair_marginal_bitwise(model):
    rng = RngStream(2024)
    single = sample_combined(model, 30, 1e-4, rng, realization=4)
    a, b = sample_combined_pair(model, 30, 1e-4, 3e-6, rng, realization=4)
    assert np.array_equal(a.values, single.values)
    assert b.time == pytest.approx(1e-4 + 3e-6)


def test_times_sampler_consistency(model):
    rng = RngStream(77)
    times = [model.tau / 2, 5 * model.tau, 20 * model.tau]
    outs = sample_combined_times(model, 25, times, rng, realization=1)
    # pre-onset snapshot is the pure homogeneous draw
    hom = evolve_homogeneous(
        sample_initial_coefficients(model.spec_c, 25, rng, realization=1),
        times[0], model.alpha)
    assert np.array_equal(outs[0].values, hom.values)
    # first post-onset snapshot has the single-time law (bitwise)
    single = sample_combined(model, 25, times[1], rng, realization=1)
    assert np.array_equal(outs[1].values, single.values)


def test_zero_everything(spectra):
    zero = AlgebraicSpectrum(0.0, 0.0, 2.5)
    m = FractionalModel(0.5, 1e-5, zero, zero)
    out = sample_combined(m, 12, 1e-4, RngStream(1))
    assert np.all(out.values == 0.0)


# --------------------------------------------------------------------------
# samplers: distribution checks (5 standard errors at moderate N)

def _mc_rows(model, ell, t, n, seed=99):
    rng = RngStream(seed)
    rows = np.empty((n, ell + 1), dtype=complex)
    for j in range(n):
        rows[j] = sample_coefficient_rows(model, t, rng, [ell], realization=j)[ell]
    return rows


def test_initial_variance_mc(spectra):
    spec_c, _ = spectra
    rng = RngStream(42)
    n, ell = 10_000, 5
    vals = np.empty((n, ell + 1), dtype=complex)
    for j in range(n):
        vals[j] = sample_initial_coefficients(spec_c, ell, rng, realization=j).values[ell, : ell + 1]
    cl = spec_c.value(ell)
    for m in (0, 1, 4):
        mc = np.mean(np.abs(vals[:, m]) ** 2)
        se = cl * math.sqrt((2.0 if m == 0 else 1.0) / n)
        assert abs(mc - cl) <= 5.0 * se
    # zero means
    assert np.all(np.abs(vals.mean(axis=0)) <= 5.0 * math.sqrt(cl / n))


def test_combined_variance_mc(model):
    n = 10_000
    for t in (model.tau / 2, 10 * model.tau):
        rows = _mc_rows(model, 5, t, n)
        target = coefficient_variance(model, 5, t)
        for m in (0, 3):
            mc = np.mean(np.abs(rows[:, m]) ** 2)
            se = target * math.sqrt((2.0 if m == 0 else 1.0) / n)
            assert abs(mc - target) <= 5.0 * se


def test_cross_coefficient_independence(model):
    n = 10_000
    rows = _mc_rows(model, 7, 10 * model.tau, n, seed=5)
    v = coefficient_variance(model, 7, 10 * model.tau)
    # distinct m are uncorrelated
    for m1, m2 in ((0, 1), (1, 2), (3, 7)):
        corr = np.mean(rows[:, m1] * np.conj(rows[:, m2])) / v
        assert abs(corr) <= 5.0 / math.sqrt(n)


def test_real_imag_split_mc(model):
    # Re and Im of V_{l,m}, m >= 1, are independent N(0, v/2)
    n = 10_000
    rows = _mc_rows(model, 4, 10 * model.tau, n, seed=13)
    v = coefficient_variance(model, 4, 10 * model.tau)
    re, im = rows[:, 2].real, rows[:, 2].imag
    assert abs(np.mean(re ** 2) - v / 2) <= 5.0 * (v / 2) * math.sqrt(2.0 / n)
    assert abs(np.mean(im ** 2) - v / 2) <= 5.0 * (v / 2) * math.sqrt(2.0 / n)
    assert abs(np.mean(re * im) / (v / 2)) <= 5.0 / math.sqrt(n)


def test_pair_increment_variance_alpha1(spectra):
    # alpha = 1 closed forms make the pair law fully checkable
    spec_c, spec_a = spectra
    m1 = FractionalModel(1.0, 1e-5, spec_c, spec_a)
    t, h, ell = 2e-5, 1e-5, 1
    lam = 2.0
    s = t - m1.tau
    n = 20_000
    rng = RngStream(7)
    acc = 0.0
    for j in range(n):
        a, b = sample_combined_pair(m1, ell, t, h, rng, realization=j)
        acc += abs(b.values[1, 1] - a.values[1, 1]) ** 2
    mc = acc / n
    e1, e2 = math.exp(-lam * t), math.exp(-lam * (t + h))
    s1, s2 = closed_form_sigma2_a1(1, s), closed_form_sigma2_a1(1, s + h)
    cr = math.exp(-lam * h) * s1
    expect = spec_c.value(1) * (e2 - e1) ** 2 + spec_a.value(1) * (s1 + s2 - 2 * cr)
    assert abs(mc - expect) <= 5.0 * expect * math.sqrt(2.0 / n)


def test_pair_increment_variance_alpha_half(model):
    # same check against the quadrature-based covariance at alpha = 1/2
    t, h, ell = 2e-5, 1e-5, 3
    s = t - model.tau
    n = 20_000
    rng = RngStream(8)
    acc = 0.0
    for j in range(n):
        a, b = sample_combined_pair(model, ell, t, h, rng, realization=j)
        acc += abs(b.values[ell, 2] - a.values[ell, 2]) ** 2
    mc = acc / n
    lam = ell * (ell + 1.0)
    de = (ml_neg(0.5, lam * math.sqrt(t + h)) - ml_neg(0.5, lam * math.sqrt(t)))
    expect = (model.spec_c.value(ell) * de ** 2
              + model.spec_a.value(ell) * (sigma_squared(ell, s, 0.5)
                                           + sigma_squared(ell, s + h, 0.5)
                                           - 2 * cross_sigma(ell, s, h, 0.5)))
    assert abs(mc - expect) <= 5.0 * expect * math.sqrt(2.0 / n)


def test_pair_marginal_distribution(model):
    # second marginal of the pair matches the single-time variance
    n = 10_000
    rng = RngStream(17)
    ell, t, h = 6, 2e-5, 4e-5
    acc = 0.0
    for j in range(n):
        _, b = sample_combined_pair(model, ell, t, h, rng, realization=j)
        acc += abs(b.values[ell, 1]) ** 2
    target = coefficient_variance(model, ell, t + h)
    assert abs(acc / n - target) <= 5.0 * target * math.sqrt(2.0 / n)


# --------------------------------------------------------------------------
# analytic second moments

def test_coefficient_variance_cases(model):
    assert coefficient_variance(model, 0, model.tau / 2) == pytest.approx(
        model.spec_c.value(0), rel=1e-12)
    nonoise = FractionalModel(model.alpha, model.tau, model.spec_c,
                              AlgebraicSpectrum(0, 0, 2.5))
    t = 10 * model.tau
    lam = 110.0
    e = ml_neg(0.5, lam * math.sqrt(t))
    assert coefficient_variance(nonoise, 10, t) == pytest.approx(
        model.spec_c.value(10) * e * e, rel=1e-11)
    assert coefficient_variance(model, 10, t) == pytest.approx(
        model.spec_c.value(10) * e * e
        + model.spec_a.value(10) * sigma_squared(10, t - model.tau, 0.5), rel=1e-11)


def test_covariance_function_at_one(model):
    t = 10 * model.tau
    lmax = 60
    total = sum((2 * ell + 1) * coefficient_variance(model, ell, t)
                for ell in range(lmax + 1))
    assert covariance_function(model, t, 1.0, lmax) == pytest.approx(total, rel=1e-12)


def test_covariance_holder_consistency(model):
    # Var[U(x)-U(y)] = 2 (cov(1) - cov(cos theta)) <= K * theta^(2 beta*)
    t = 10 * model.tau
    lmax = 300
    k = holder_envelope(0.1, t, model.tau, model.spec_c, model.spec_a)
    c1 = covariance_function(model, t, 1.0, lmax)
    for theta in np.logspace(-3, math.log10(math.pi), 9):
        v = 2.0 * (c1 - covariance_function(model, t, math.cos(theta), lmax))
        assert v <= k * theta ** 0.2 * (1 + 1e-9)


# --------------------------------------------------------------------------
# serialization

def test_csv_round_trip(model, tmp_path):
    c = sample_combined(model, 12, 1e-4, RngStream(3), realization=0)
    path = tmp_path / "coeffs.csv"
    c.write_csv(path)
    header = path.read_text().splitlines()[0]
    assert header == "ell,m,re,im"
    back = CoefficientSet.read_csv(path)
    assert back.L == 12
    assert np.array_equal(back.values, c.values)


def test_binary_round_trip(model, tmp_path):
    c = sample_combined(model, 9, 1e-4, RngStream(3), realization=1)
    path = tmp_path / "coeffs.sfdc"
    c.write_binary(path)
    raw = path.read_bytes()
    assert raw[:4] == b"SFDC"
    back = CoefficientSet.read_binary(path)
    assert back.L == 9
    assert np.array_equal(back.values, c.values)
    with pytest.raises(DomainError):
        bad = tmp_path / "bad.sfdc"
        bad.write_bytes(b"NOPE" + raw[4:])
        CoefficientSet.read_binary(bad)


def test_degree_power():
    c = CoefficientSet.zeros(2)
    c.values[1, 0] = 3.0
    c.values[1, 1] = 1.0 + 2.0j
    p = c.degree_power()
    assert p[1] == pytest.approx(9.0 + 2.0 * 5.0)
    assert c.tail_power(0) == pytest.approx(p[1] + p[2])
