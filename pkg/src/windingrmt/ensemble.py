"""Random matrix model: Ginibre sampling, the parametric field, and the
joint eigenvalue density of the induced spherical ensemble.

Convention: Ginibre entries are complex Gaussians with independent real and
imaginary parts of variance 1/2 each, so E|entry|^2 = 1.  Every statistic
computed downstream (spherical eigenvalues, winding numbers, correlators) is
invariant under a common rescaling of the two field matrices, so the choice
only fixes an overall scale.
"""

from dataclasses import dataclass
from math import lgamma, log, pi

import numpy as np

__all__ = [
    "ParametricField",
    "SphericalSpectrum",
    "substream",
    "sample_ginibre",
    "sample_field",
    "field_evaluate",
    "field_derivative",
    "build_hamiltonian",
    "chiral_operator",
    "joint_density",
    "log_joint_density",
]


def _check_square_complex(a, name="matrix"):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"{name} must be square with dimension >= 1, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


@dataclass(frozen=True)
class ParametricField:
    """Pair of matrices defining the field  k1*cos(p) + k2*sin(p)."""

    k1: np.ndarray
    k2: np.ndarray

    def __post_init__(self):
        k1 = _check_square_complex(self.k1, "k1")
        k2 = _check_square_complex(self.k2, "k2")
        if k1.shape != k2.shape:
            raise ValueError(f"k1 and k2 must have equal dimension, got {k1.shape} vs {k2.shape}")
        object.__setattr__(self, "k1", k1)
        object.__setattr__(self, "k2", k2)

    @property
    def n(self) -> int:
        return self.k1.shape[0]


@dataclass(frozen=True)
class SphericalSpectrum:
    """Eigenvalues of the generalized problem attached to a field sample.

    ``source_condition`` records the condition estimate of the solve that
    produced the eigenvalues.
    """

    z: np.ndarray
    source_condition: float

    def __post_init__(self):
        z = np.asarray(self.z, dtype=complex)
        if z.ndim != 1 or z.size < 1:
            raise ValueError("spectrum must be a nonempty vector")
        if not np.all(np.isfinite(z)):
            raise ValueError("spectrum contains non-finite eigenvalues")
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return self.z.size


def substream(seed: int, index: int) -> np.random.Generator:
    """Counter-based RNG stream: reproducible from (seed, index) alone.

    Distinct indices use disjoint Philox counter blocks, so streams never
    overlap and may be drawn from concurrently.
    """
    if index < 0:
        raise ValueError("stream index must be nonnegative")
    return np.random.Generator(np.random.Philox(key=int(seed) & (2**128 - 1), counter=int(index) << 128))


def sample_ginibre(n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw an n x n complex Ginibre matrix with E|entry|^2 = 1."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    x = rng.standard_normal((2, n, n))
    return (x[0] + 1j * x[1]) / np.sqrt(2.0)


def sample_field(n: int, rng: np.random.Generator) -> ParametricField:
    """Draw the two independent Ginibre matrices of a parametric field."""
    return ParametricField(sample_ginibre(n, rng), sample_ginibre(n, rng))


def field_evaluate(field: ParametricField, p: float) -> np.ndarray:
    """Evaluate k1*cos(p) + k2*sin(p)."""
    return field.k1 * np.cos(p) + field.k2 * np.sin(p)


def field_derivative(field: ParametricField, p: float) -> np.ndarray:
    """Derivative of the field with respect to p: -k1*sin(p) + k2*cos(p)."""
    return -field.k1 * np.sin(p) + field.k2 * np.cos(p)


def build_hamiltonian(field: ParametricField, p: float) -> np.ndarray:
    """Assemble the 2n x 2n block off-diagonal Hamiltonian [[0, K], [K^+, 0]].

    The result is Hermitean and anticommutes with diag(1_n, -1_n).
    """
    k = field_evaluate(field, p)
    n = field.n
    h = np.zeros((2 * n, 2 * n), dtype=complex)
    h[:n, n:] = k
    h[n:, :n] = k.conj().T
    return h


def chiral_operator(n: int) -> np.ndarray:
    """diag(1_n, -1_n), the operator the Hamiltonian anticommutes with."""
    return np.diag(np.concatenate([np.ones(n), -np.ones(n)]))


def _log_norm_constant(n: int) -> float:
    # log of N! * prod_m B(m, N-m+1) * pi^N
    log_c = lgamma(n + 1)
    for m in range(1, n + 1):
        log_c += lgamma(m) + lgamma(n - m + 1) - lgamma(n + 1)
    return log_c + n * log(pi)


def log_joint_density(z) -> float:
    """Log of the joint eigenvalue density of the spherical ensemble.

    All products are accumulated in log space so dimensions up to 12 stay
    inside the double-precision range.
    """
    z = np.asarray(z, dtype=complex)
    if z.ndim != 1 or z.size == 0:
        raise ValueError("need at least one eigenvalue")
    n = z.size
    if n > 12:
        raise ValueError(f"joint density supported for dimension <= 12, got {n}")
    diffs = z[:, None] - z[None, :]
    iu = np.triu_indices(n, k=1)
    pair = diffs[iu]
    if np.any(pair == 0):
        return -np.inf
    log_vandermonde_sq = 2.0 * np.sum(np.log(np.abs(pair)))
    log_weights = -(n + 1) * np.sum(np.log1p(np.abs(z) ** 2))
    return log_vandermonde_sq + log_weights - _log_norm_constant(n)


def joint_density(z) -> float:
    """Joint eigenvalue density of the spherical ensemble at the point z."""
    return float(np.exp(log_joint_density(z)))
