"""Eigenvalue computations and the two independent winding-number evaluators.

The winding number of a field sample can be obtained two ways:

* ``winding_from_count``: count generalized eigenvalues inside the unit
  circle (W = 2m - n), via ``circle_spectrum``.
* ``winding_contour``: track the phase of det K(p) around the parameter
  circle with adaptive bisection.

Both must agree on every well-conditioned sample; the Monte Carlo layer
cross-checks them.
"""

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .ensemble import ParametricField, SphericalSpectrum, field_derivative, field_evaluate
from .errors import (
    ContourRefinementError,
    EigenConvergenceError,
    IllConditionedError,
    SingularFieldError,
)

__all__ = [
    "NEAR_UNIT_CIRCLE",
    "ILL_CONDITIONED",
    "WindingSample",
    "ContourGrid",
    "eigenvalues",
    "condition_estimate",
    "spherical_spectrum",
    "circle_spectrum",
    "winding_from_count",
    "winding_density",
    "winding_density_from_spectrum",
    "winding_contour",
]

NEAR_UNIT_CIRCLE = "NEAR_UNIT_CIRCLE"
ILL_CONDITIONED = "ILL_CONDITIONED"

DEFAULT_CONDITION_THRESHOLD = 1e12
DEFAULT_EPSILON_CIRCLE = 1e-9

# kept a hair under pi/2 so resonant steps that alias to exactly +-pi/2
# (e.g. uniform rotations sampled at a commensurate grid) still get bisected
_PHASE_STEP_CAP = math.pi / 2 - 1e-6
_INTEGER_TOLERANCE = 1e-6


@dataclass(frozen=True)
class WindingSample:
    """One winding-number draw: m eigenvalues strictly inside the unit circle."""

    N: int
    m: int
    W: int
    flags: frozenset = dataclass_field(default_factory=frozenset)

    def __post_init__(self):
        if not 0 <= self.m <= self.N:
            raise ValueError(f"inside count m={self.m} out of range for N={self.N}")
        if self.W != 2 * self.m - self.N:
            raise ValueError(f"W={self.W} inconsistent with m={self.m}, N={self.N}")


@dataclass(frozen=True)
class ContourGrid:
    """Angles at which the determinant phase is seeded before refinement."""

    points: np.ndarray
    refinement_limit: int = 100_000

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 8:
            raise ValueError("contour grid needs at least 8 points")
        if pts[0] != 0.0:
            raise ValueError("contour grid must start at angle 0")
        if np.any(np.diff(pts) <= 0) or pts[-1] >= 2 * math.pi:
            raise ValueError("contour grid must be strictly increasing within [0, 2*pi)")
        if self.refinement_limit < 1:
            raise ValueError("refinement_limit must be positive")
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, n_points: int = 64, refinement_limit: int = 100_000) -> "ContourGrid":
        pts = 2 * math.pi * np.arange(n_points) / n_points
        return cls(points=pts, refinement_limit=refinement_limit)


def eigenvalues(a) -> np.ndarray:
    """All eigenvalues of a dense complex matrix, with multiplicity.

    Backward stable: each returned value lambda admits a unit vector v with
    ||A v - lambda v|| <= 1e-10 * n * ||A||.
    """
    a = np.asarray(a, dtype=complex)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    try:
        return np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise EigenConvergenceError(
            f"eigenvalue iteration failed for {a.shape[0]}x{a.shape[1]} matrix: {exc}",
            diagnostics={"shape": a.shape, "norm": float(np.linalg.norm(a))},
        ) from exc


def condition_estimate(a) -> float:
    """Two-norm condition estimate; +inf when the matrix is numerically singular."""
    try:
        c = np.linalg.cond(np.asarray(a, dtype=complex))
    except np.linalg.LinAlgError:
        return math.inf
    return float(c) if np.isfinite(c) else math.inf


def _screened_eigensolve(numer, denom, threshold, what):
    cond = condition_estimate(denom)
    if not cond < threshold:
        raise IllConditionedError(
            f"{what} has condition estimate {cond:.3e} above threshold {threshold:.3e}",
            condition=cond,
        )
    ratio = np.linalg.solve(denom, numer)
    return SphericalSpectrum(z=eigenvalues(ratio), source_condition=cond)


def spherical_spectrum(
    field: ParametricField, condition_threshold: float = DEFAULT_CONDITION_THRESHOLD
) -> SphericalSpectrum:
    """Eigenvalues of k1^{-1} k2 (the spherical ensemble of the field)."""
    return _screened_eigensolve(field.k2, field.k1, condition_threshold, "k1")


def circle_spectrum(
    field: ParametricField, condition_threshold: float = DEFAULT_CONDITION_THRESHOLD
) -> SphericalSpectrum:
    """Generalized eigenvalues z solving (k1 + i k2) v = z (k1 - i k2) v.

    Solved by reduction to a standard eigenproblem after screening the
    condition of k1 - i k2.  The eigenvalue distribution is that of
    ``spherical_spectrum``; the unit-circle positions of these values
    determine the winding number.
    """
    return _screened_eigensolve(
        field.k1 + 1j * field.k2, field.k1 - 1j * field.k2, condition_threshold, "k1 - i*k2"
    )


def winding_from_count(
    spectrum: SphericalSpectrum, epsilon_circle: float = DEFAULT_EPSILON_CIRCLE
) -> WindingSample:
    """Winding number from the count of eigenvalues strictly inside |z| < 1.

    Eigenvalues within ``epsilon_circle`` of the unit circle flag the sample
    as NEAR_UNIT_CIRCLE; the strict inequality still decides the count, the
    boundary case is never silently absorbed.
    """
    radii = np.abs(spectrum.z)
    m = int(np.sum(radii < 1.0))
    flags = set()
    if np.any(np.abs(radii - 1.0) < epsilon_circle):
        flags.add(NEAR_UNIT_CIRCLE)
    return WindingSample(N=spectrum.n, m=m, W=2 * m - spectrum.n, flags=frozenset(flags))


def winding_density(field: ParametricField, p: float) -> complex:
    """Logarithmic derivative of det K(p): trace(K(p)^{-1} K'(p)).

    Computed through linear solves; smooth across p = 0 and p = pi for
    nonsingular fields.  Raises SingularFieldError when det K(p) = 0
    (the sample grazes a gap closing).
    """
    k = field_evaluate(field, p)
    kprime = field_derivative(field, p)
    try:
        solved = np.linalg.solve(k, kprime)
    except np.linalg.LinAlgError as exc:
        raise SingularFieldError(f"field is singular at p={p!r}") from exc
    w = complex(np.trace(solved))
    if not (math.isfinite(w.real) and math.isfinite(w.imag)):
        raise SingularFieldError(f"field is numerically singular at p={p!r}")
    return w


def winding_density_from_spectrum(spectrum: SphericalSpectrum, p: float) -> complex:
    """Eigenvalue representation of the winding density.

    Equals n*cot(p) - (1/sin^2 p) * sum_k 1/(cot p + z_k) wherever sin(p) is
    bounded away from zero.  Test oracle only: the representation has
    spurious intermediate singularities at p = 0 and p = pi that the trace
    form does not.
    """
    s = math.sin(p)
    if abs(s) < 1e-8:
        raise ValueError("eigenvalue representation is singular near p = 0 mod pi")
    q = math.cos(p) / s
    return complex(spectrum.n * q - np.sum(1.0 / (q + spectrum.z)) / (s * s))


def _det_phases(field: ParametricField, angles: np.ndarray) -> np.ndarray:
    ks = (
        field.k1[None, :, :] * np.cos(angles)[:, None, None]
        + field.k2[None, :, :] * np.sin(angles)[:, None, None]
    )
    signs, logdets = np.linalg.slogdet(ks)
    if np.any(signs == 0) or np.any(np.isneginf(logdets)):
        bad = angles[(signs == 0) | np.isneginf(logdets)]
        raise SingularFieldError(f"det K(p) vanishes at grid angle(s) {bad[:3]!r}")
    return np.angle(signs)


def _wrap_phase(d: np.ndarray) -> np.ndarray:
    return (d + math.pi) % (2 * math.pi) - math.pi


def winding_contour(field: ParametricField, grid: ContourGrid | None = None) -> int:
    """Winding number by accumulating the phase of det K(p) around the circle.

    Any step whose wrapped phase increment exceeds pi/2 is bisected, which
    rules out 2*pi phase slips for analytic determinants.  The accumulated
    total must land within 1e-6 of an integer multiple of 2*pi.
    """
    if grid is None:
        grid = ContourGrid.uniform(max(16, 8 * field.n))
    angles = grid.points
    phases = _det_phases(field, angles)
    # close the loop: K(2*pi) = K(0) exactly, reuse the first phase
    angles = np.append(angles, 2 * math.pi)
    phases = np.append(phases, phases[0])

    inserted = 0
    while True:
        steps = _wrap_phase(np.diff(phases))
        bad = np.flatnonzero(np.abs(steps) > _PHASE_STEP_CAP)
        if bad.size == 0:
            break
        inserted += bad.size
        if inserted > grid.refinement_limit:
            raise ContourRefinementError(
                f"phase tracking needed more than {grid.refinement_limit} extra points; "
                "det K(p) winds too fast or passes near zero"
            )
        mids = 0.5 * (angles[bad] + angles[bad + 1])
        if np.any(angles[bad + 1] - angles[bad] < 1e-12):
            raise ContourRefinementError(
                "phase step will not settle under bisection; det K(p) passes near zero"
            )
        mid_phases = _det_phases(field, mids % (2 * math.pi))
        angles = np.insert(angles, bad + 1, mids)
        phases = np.insert(phases, bad + 1, mid_phases)

    total = float(np.sum(_wrap_phase(np.diff(phases))))
    w = total / (2 * math.pi)
    w_int = round(w)
    if abs(w - w_int) > _INTEGER_TOLERANCE:
        raise ContourRefinementError(
            f"accumulated phase {total!r} is not an integer multiple of 2*pi within 1e-6"
        )
    return int(w_int)
