import json
import math

import numpy as np
import pytest

from fracsphere import (AlgebraicSpectrum, CoefficientSet, DomainError,
                        GridSpec, RngStream, SphPoint,
                        sample_initial_coefficients, spherical_harmonic,
                        synthesize, write_map_csv, write_map_image)
from fracsphere.synthesis import read_map_csv


def naive_eval(coeffs, theta, phi):
    """Independent pointwise oracle: direct sum over the scalar harmonics."""
    p = SphPoint(theta, phi)
    total = 0.0
    for ell in range(coeffs.L + 1):
        total += (coeffs.values[ell, 0] * spherical_harmonic(ell, 0, p)).real
        total += 2.0 * sum((coeffs.values[ell, m] * spherical_harmonic(ell, m, p)).real
                           for m in range(1, ell + 1))
    return total


def random_coeffs(L, seed=0):
    rng = np.random.default_rng(seed)
    c = CoefficientSet.zeros(L)
    for ell in range(L + 1):
        c.values[ell, 0] = rng.normal()
        c.values[ell, 1: ell + 1] = rng.normal(size=ell) + 1j * rng.normal(size=ell)
    return c


def test_constant_map():
    c = CoefficientSet.zeros(3)
    c.values[0, 0] = 2.5
    fmap = synthesize(c, GridSpec(5, 8))
    assert np.allclose(fmap.values, 2.5, atol=1e-14)


def test_dipole_map():
    c = CoefficientSet.zeros(2)
    c.values[1, 0] = 1.0
    grid = GridSpec(9, 4)
    fmap = synthesize(c, grid)
    expect = math.sqrt(3.0) * np.cos(grid.colatitudes())
    for k in range(grid.n_lon):
        assert fmap.values[:, k] == pytest.approx(expect, abs=1e-14)


def test_linearity():
    g = GridSpec(7, 12)
    c1, c2 = random_coeffs(10, 1), random_coeffs(10, 2)
    both = CoefficientSet.zeros(10)
    both.values = 3.0 * c1.values + c2.values
    lhs = synthesize(both, g).values
    rhs = 3.0 * synthesize(c1, g).values + synthesize(c2, g).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs)))


def test_fast_vs_naive_l64():
    c = random_coeffs(64, seed=7)
    grid = GridSpec(16, 32)  # 512 points
    fmap = synthesize(c, grid)
    scale = np.max(np.abs(fmap.values))
    thetas, phis = grid.colatitudes(), grid.longitudes()
    rng = np.random.default_rng(3)
    idx = [(int(j), int(k)) for j, k in zip(rng.integers(0, 16, 60),
                                            rng.integers(0, 32, 60))]
    for j, k in idx:
        ref = naive_eval(c, float(thetas[j]), float(phis[k]))
        assert abs(fmap.values[j, k] - ref) <= 1e-9 * scale


def test_parseval_gauss_grid():
    L = 64
    c = random_coeffs(L, seed=11)
    grid = GridSpec(L + 1, 2 * L + 1, gauss=True)
    fmap = synthesize(c, grid)
    quad_power = float(grid.quadrature_weights() @ (fmap.values ** 2).mean(axis=1))
    parseval = float(c.degree_power().sum())
    assert quad_power == pytest.approx(parseval, rel=1e-8)


def test_single_mode_longitudinal_content():
    # a pure (l, m) coefficient concentrates at longitudinal wavenumber m
    L, ell, m = 24, 20, 9
    c = CoefficientSet.zeros(L)
    c.values[ell, m] = 1.0 - 0.5j
    grid = GridSpec(33, 2 * L + 2)
    fmap = synthesize(c, grid)
    spec = np.abs(np.fft.rfft(fmap.values, axis=1)) ** 2
    other = np.delete(spec, m, axis=1)
    assert np.sum(other) <= 1e-9 * np.sum(spec)


def test_grid_validation():
    with pytest.raises(DomainError):
        GridSpec(1, 8)
    with pytest.raises(DomainError):
        GridSpec(4, 0)


def test_csv_round_trip(tmp_path):
    c = random_coeffs(6, seed=5)
    grid = GridSpec(4, 6)
    fmap = synthesize(c, grid)
    path = tmp_path / "map.csv"
    write_map_csv(fmap, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "theta,phi,value"
    assert len(lines) == 1 + 4 * 6
    back = read_map_csv(path, grid)
    assert np.array_equal(back.values, fmap.values)


def test_zero_map_csv(tmp_path):
    fmap = synthesize(CoefficientSet.zeros(1), GridSpec(2, 1))
    path = tmp_path / "zero.csv"
    write_map_csv(fmap, path)
    rows = path.read_text().splitlines()[1:]
    assert len(rows) == 2
    assert all(r.endswith(",0") for r in rows)


def test_ppm_bytes_documented_example(tmp_path):
    # 2x2 map [[0, 1], [0.5, 0.25]] on [0, 1] with the gray map:
    # indices 0, 255, 128, 64 -> documented raw bytes
    grid = GridSpec(2, 2)
    fmap = synthesize(CoefficientSet.zeros(1), grid)
    fmap.values = np.array([[0.0, 1.0], [0.5, 0.25]])
    path = tmp_path / "map.ppm"
    write_map_image(fmap, str(path), colormap="gray", vrange=(0.0, 1.0))
    raw = path.read_bytes()
    header = b"P6\n2 2\n255\n"
    expect = bytes([0, 0, 0, 255, 255, 255, 128, 128, 128, 64, 64, 64])
    assert raw == header + expect
    sidecar = json.loads((tmp_path / "map.json").read_text())
    assert sidecar["vmin"] == 0.0 and sidecar["vmax"] == 1.0
    assert sidecar["colormap"] == "gray"
    assert set(sidecar) >= {"time", "L", "seed", "vmin", "vmax", "colormap"}


def test_constant_map_single_color(tmp_path):
    grid = GridSpec(3, 4)
    fmap = synthesize(CoefficientSet.zeros(1), grid)
    fmap.values = np.full((3, 4), 1.25)
    path = tmp_path / "flat.ppm"
    write_map_image(fmap, str(path), colormap="coolwarm")
    raw = path.read_bytes()
    body = raw.split(b"\n", 3)[3]
    pixels = [body[i:i + 3] for i in range(0, len(body), 3)]
    assert len(set(pixels)) == 1


def test_unwritable_path_no_partial_file(tmp_path):
    grid = GridSpec(2, 2)
    fmap = synthesize(CoefficientSet.zeros(1), grid)
    missing = tmp_path / "no" / "such" / "dir" / "map.ppm"
    with pytest.raises(OSError):
        write_map_image(fmap, str(missing))
    assert not missing.exists()


def test_png_sibling_written(tmp_path):
    pytest.importorskip("PIL")
    grid = GridSpec(2, 3)
    fmap = synthesize(CoefficientSet.zeros(1), grid)
    path = tmp_path / "map.ppm"
    write_map_image(fmap, str(path))
    assert (tmp_path / "map.png").exists()


def test_synthesis_from_isotropic_draw():
    # end to end: an isotropic draw synthesizes to finite values, and the
    # equiangular grid covers the poles
    spec = AlgebraicSpectrum(1.0, 1.0, 2.3)
    coeffs = sample_initial_coefficients(spec, 32, RngStream(1))
    grid = GridSpec(17, 36)
    fmap = synthesize(coeffs, grid)
    assert np.all(np.isfinite(fmap.values))
    assert grid.colatitudes()[0] == 0.0
    assert grid.colatitudes()[-1] == pytest.approx(math.pi)
    # polar rings are constant in longitude
    assert np.ptp(fmap.values[0]) <= 1e-9
    assert np.ptp(fmap.values[-1]) <= 1e-9
