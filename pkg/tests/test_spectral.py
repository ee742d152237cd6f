import math

import numpy as np
import pytest

from windingrmt import (
    ContourGrid,
    ContourRefinementError,
    IllConditionedError,
    ParametricField,
    SingularFieldError,
    circle_spectrum,
    eigenvalues,
    sample_field,
    spherical_spectrum,
    substream,
    winding_contour,
    winding_density,
    winding_density_from_spectrum,
    winding_from_count,
)
from windingrmt.spectral import NEAR_UNIT_CIRCLE, WindingSample


def assert_same_multiset(actual, expected, tol=1e-12):
    actual = list(np.asarray(actual, dtype=complex))
    for target in np.asarray(expected, dtype=complex):
        gaps = [abs(a - target) for a in actual]
        best = int(np.argmin(gaps))
        assert gaps[best] <= tol, f"no eigenvalue near {target}: {actual}"
        actual.pop(best)
    assert not actual


def test_eigenvalues_identity():
    assert np.allclose(eigenvalues(np.eye(3)), np.ones(3))


def test_eigenvalues_diagonal():
    assert_same_multiset(eigenvalues(np.diag([2.0, 3.0j])), [2.0, 3.0j])


def test_eigenvalues_rotation_block():
    # characteristic polynomial lambda^2 + 1
    assert_same_multiset(eigenvalues([[0.0, 1.0], [-1.0, 0.0]]), [1.0j, -1.0j])


def test_eigenvalues_backward_stable():
    # sigma_min(A - lambda I) <= tol * ||A|| certifies a unit vector with small residual
    rng = substream(31, 0)
    n = 6
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    tol = 1e-10 * n * np.linalg.norm(a, 2)
    for lam in eigenvalues(a):
        smin = np.linalg.svd(a - lam * np.eye(n), compute_uv=False)[-1]
        assert smin <= tol


def test_eigenvalues_rejects_nonfinite():
    with pytest.raises(ValueError):
        eigenvalues(np.array([[np.inf, 0.0], [0.0, 1.0]]))


def test_spherical_spectrum_scalar_ratio():
    field = ParametricField(np.array([[2.0]]), np.array([[1.0 + 1.0j]]))
    spectrum = spherical_spectrum(field)
    assert np.allclose(spectrum.z, [(1.0 + 1.0j) / 2.0])
    assert spectrum.source_condition == pytest.approx(1.0)


def test_spherical_spectrum_diagonal():
    d = np.array([0.5, -2.0j, 1.0 + 1.0j])
    field = ParametricField(np.eye(3, dtype=complex), np.diag(d))
    assert_same_multiset(spherical_spectrum(field).z, d)


def test_spherical_spectrum_residuals():
    # each eigenvalue z must make k2 - z k1 numerically singular
    field = sample_field(4, substream(8, 0))
    spectrum = spherical_spectrum(field)
    scale = np.linalg.norm(field.k2, 2)
    for z in spectrum.z:
        smin = np.linalg.svd(field.k2 - z * field.k1, compute_uv=False)[-1]
        assert smin <= 1e-9 * max(1.0, abs(z)) * scale


def test_spherical_spectrum_ill_conditioned():
    field = ParametricField(np.diag([1.0, 1e-30]), np.eye(2, dtype=complex))
    with pytest.raises(IllConditionedError):
        spherical_spectrum(field)


def test_circle_spectrum_quarter_shift():
    # (1 + i*(i/2)) = z (1 - i*(i/2))  =>  z = 1/3
    field = ParametricField(np.array([[1.0]]), np.array([[0.5j]]))
    assert np.allclose(circle_spectrum(field).z, [1.0 / 3.0])


def test_circle_spectrum_degenerate_axes():
    eye = np.eye(3, dtype=complex)
    assert np.allclose(circle_spectrum(ParametricField(eye, np.zeros_like(eye))).z, np.ones(3))
    assert np.allclose(circle_spectrum(ParametricField(np.zeros_like(eye), eye)).z, -np.ones(3))


def test_circle_spectrum_distribution_matches_spherical():
    # for one eigenvalue both routes must give |z|^2/(1+|z|^2) uniform on (0,1)
    from scipy.stats import kstest

    values = np.empty(20_000)
    for i in range(values.size):
        z = circle_spectrum(sample_field(1, substream(606, i))).z[0]
        values[i] = abs(z) ** 2 / (1.0 + abs(z) ** 2)
    assert kstest(values, "uniform").pvalue > 0.01


def test_winding_from_count_scalar():
    field = ParametricField(np.array([[1.0]]), np.array([[0.5j]]))
    sample = winding_from_count(circle_spectrum(field))
    assert (sample.m, sample.W) == (1, 1)


def test_winding_from_count_all_outside():
    from windingrmt import SphericalSpectrum

    spectrum = SphericalSpectrum(z=np.array([2.0, 3.0j, -1.5]), source_condition=1.0)
    assert winding_from_count(spectrum).W == -3


def test_winding_from_count_boundary_flagged():
    from windingrmt import SphericalSpectrum

    spectrum = SphericalSpectrum(z=np.array([1.0 + 0.0j, 0.2]), source_condition=1.0)
    sample = winding_from_count(spectrum)
    # strict inequality: the boundary eigenvalue is not inside
    assert sample.m == 1
    assert NEAR_UNIT_CIRCLE in sample.flags


def test_winding_sample_invariants_enforced():
    with pytest.raises(ValueError):
        WindingSample(N=3, m=1, W=0)
    with pytest.raises(ValueError):
        WindingSample(N=3, m=4, W=5)


def test_winding_density_uniform_rotation():
    for n in (1, 3):
        eye = np.eye(n, dtype=complex)
        field = ParametricField(eye, 1j * eye)
        for p in (0.0, 0.4, 2.0):
            assert winding_density(field, p) == pytest.approx(1j * n)


def test_winding_density_scalar_matches_cot_form():
    z = 0.7 - 0.3j
    field = ParametricField(np.array([[1.0]]), np.array([[z]]))
    for p in (0.4, 1.1, 2.7):
        q = 1.0 / math.tan(p)
        expected = q - (1.0 / math.sin(p) ** 2) / (q + z)
        assert winding_density(field, p) == pytest.approx(expected, rel=1e-12)


def test_winding_density_trace_vs_eigenform():
    field = sample_field(5, substream(21, 0))
    spectrum = spherical_spectrum(field)
    p = math.pi / 3
    w_trace = winding_density(field, p)
    w_eig = winding_density_from_spectrum(spectrum, p)
    assert abs(w_trace - w_eig) <= 1e-10 * max(1.0, abs(w_trace))


def test_winding_density_smooth_across_axis_points():
    # the trace form must not blow up at p = 0 or p = pi
    field = sample_field(4, substream(22, 0))
    for p in (-1e-9, 0.0, 1e-9, math.pi - 1e-9, math.pi, math.pi + 1e-9):
        w = winding_density(field, p)
        assert np.isfinite(w.real) and np.isfinite(w.imag)
        assert abs(w) < 1e3


def test_winding_density_singular_field():
    # K(0) = k1 is exactly the zero matrix
    field = ParametricField(np.array([[0.0]]), np.array([[1.0]]))
    with pytest.raises(SingularFieldError):
        winding_density(field, 0.0)


def test_winding_contour_uniform_rotations():
    eye = np.eye(2, dtype=complex)
    assert winding_contour(ParametricField(eye, 1j * eye)) == 2
    assert winding_contour(ParametricField(eye, -1j * eye)) == -2
    assert winding_contour(ParametricField(np.array([[1.0]]), np.array([[0.5j]]))) == 1


def test_winding_contour_needs_refinement_budget():
    eye = np.eye(6, dtype=complex)
    field = ParametricField(eye, 1j * eye)  # winds 6 times: coarse grid must bisect
    assert winding_contour(field, ContourGrid.uniform(8)) == 6
    with pytest.raises(ContourRefinementError):
        winding_contour(field, ContourGrid.uniform(8, refinement_limit=2))


def test_winding_contour_singular_grid_point():
    # det K(0) = 0 exactly at the first grid angle
    field = ParametricField(np.array([[0.0]]), np.array([[1.0]]))
    with pytest.raises(SingularFieldError):
        winding_contour(field)


def test_winding_contour_gap_closing_on_circle():
    # det K(p) = cos p - sin p crosses zero between grid points: tracking must not settle
    field = ParametricField(np.array([[1.0]]), np.array([[-1.0]]))
    with pytest.raises((SingularFieldError, ContourRefinementError)):
        winding_contour(field)


def test_contour_grid_validation():
    with pytest.raises(ValueError):
        ContourGrid(points=np.linspace(0, 1, 4))
    with pytest.raises(ValueError):
        ContourGrid(points=np.linspace(0.1, 1.0, 16))
    with pytest.raises(ValueError):
        ContourGrid(points=np.linspace(0.0, 2 * math.pi, 16))  # endpoint reaches 2*pi


def test_evaluators_agree_on_random_fields():
    rng_seed = 404
    idx = 0
    for n in range(2, 6):
        for _ in range(40):
            field = sample_field(n, substream(rng_seed, idx))
            idx += 1
            sample = winding_from_count(circle_spectrum(field))
            if NEAR_UNIT_CIRCLE in sample.flags:
                continue
            assert winding_contour(field) == sample.W
            assert abs(sample.W) <= n
            assert (sample.W - n) % 2 == 0


def test_density_trapezoid_matches_contour():
    for idx in range(3):
        field = sample_field(4, substream(515, idx))
        grid = 2 * math.pi * np.arange(1024) / 1024
        values = np.array([winding_density(field, p) for p in grid])
        integral = values.sum() * (2 * math.pi / 1024) / (2j * math.pi)
        assert abs(integral - winding_contour(field)) < 1e-3
