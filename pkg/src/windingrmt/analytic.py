"""Closed-form results: incomplete-Beta building blocks, determinant formulas
for connected averages, correlators of the winding density, unfolding limits,
and the exact winding-number distribution with its moments.

Conventions used throughout, with q = cot(p):

* ``u, v = beta_uv(m, N, q^2)`` split the radial weight of the spherical
  ensemble at radius |q|; u + v = 1.
* ``n_point_connected`` and ``k_point_connected`` are ensemble averages of
  products 1/(q_1 + z_1) ... over distinct eigenvalues, evaluated as
  permutation sums of determinants built from ``l_function``.
* Correlators of the winding density are assembled from those averages by
  expanding the density into its eigenvalue-independent part N*q plus a sum
  of resolvent terms; repeated resolvents reduce via partial fractions.

Permutation sums are enumerated lexicographically and capped at dimension 8;
they are exact but factorially expensive, and exist mainly to anchor the
cheap routes (the closed forms and the Poisson-binomial reduction).
"""

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import betainc, betaincc

from .errors import CoincidentPointsError

__all__ = [
    "WindingDistribution",
    "beta_uv",
    "l_function",
    "n_point_connected",
    "k_point_connected",
    "c1",
    "c2",
    "ck_assemble",
    "unfolded_f2",
    "rescaled_c2",
    "winding_distribution",
    "winding_distribution_permutation_sum",
    "variance_analytic",
    "moment_quadrature",
    "gaussian_approx",
    "mean_level_spacing",
]

_MAX_PERMUTATION_DIM = 8
_MAX_ASSEMBLY_ORDER = 3
_COINCIDENT_TOL = 1e-12


# ---------------------------------------------------------------------------
# incomplete-Beta building blocks


def _check_index(m: int, N: int) -> None:
    if not 1 <= m <= N:
        raise ValueError(f"index m={m} out of range 1..{N}")


def beta_uv(m: int, N: int, qsq: float) -> tuple[float, float]:
    """Normalized incomplete-Beta pair (u, v) with u + v = 1.

    u is the regularized incomplete Beta I_x(m, N-m+1) at x = qsq/(1+qsq);
    qsq = +inf is allowed and gives (1, 0).
    """
    _check_index(m, N)
    if qsq < 0:
        raise ValueError("qsq must be nonnegative")
    if math.isinf(qsq):
        return 1.0, 0.0
    x = qsq / (1.0 + qsq)
    return float(betainc(m, N - m + 1, x)), float(betaincc(m, N - m + 1, x))


def _beta_euler(m: int, N: int) -> float:
    # Euler Beta B(m, N-m+1) = (m-1)! (N-m)! / N!
    return math.factorial(m - 1) * math.factorial(N - m) / math.factorial(N)


def _c_norm(N: int) -> float:
    return math.factorial(N) * math.prod(_beta_euler(m, N) for m in range(1, N + 1))


def l_function(n: int, m: int, q: float, N: int) -> float:
    """Row-by-row integral of the Vandermonde-resolvent kernel.

    Equals (-1)^(m-n) * pi * q^-(m-n+1) * B(m, N-m+1) * u_m(N, q^2) for
    m >= n and the -v_m branch for m < n.  The sign of q enters only through
    the integer power; the Beta split uses |q|.
    """
    _check_index(n, N)
    _check_index(m, N)
    if q == 0.0:
        if m >= n:
            raise ValueError("l_function has a pole at q = 0 for m >= n")
        # v_m(N, 0) = 1; positive powers of q vanish, the q^0 case survives
        return math.pi * _beta_euler(m, N) if n == m + 1 else 0.0
    u, v = beta_uv(m, N, q * q)
    prefactor = (-1.0) ** (m - n) * math.pi * q ** (-(m - n + 1)) * _beta_euler(m, N)
    return prefactor * u if m >= n else -prefactor * v


# ---------------------------------------------------------------------------
# connected ensemble averages


def _validate_q(qs) -> np.ndarray:
    qs = np.asarray(qs, dtype=float)
    if qs.ndim != 1 or qs.size == 0:
        raise ValueError("need at least one q argument")
    if np.any(qs == 0.0):
        raise ValueError("q arguments must be nonzero")
    return qs


def n_point_connected(q) -> float:
    """Average of prod_n 1/(q_n + z_n) over the full spherical ensemble.

    Permutation sum of N x N determinants; exact oracle, cost N! * N^3.
    """
    qs = _validate_q(q)
    N = qs.size
    if N > _MAX_PERMUTATION_DIM:
        raise ValueError(f"permutation sum unsupported beyond dimension {_MAX_PERMUTATION_DIM}")
    table = np.empty((N, N, N))  # [l, n, m] = L(n+1, m+1, q_l)
    for l in range(N):
        for n in range(N):
            for m in range(N):
                table[l, n, m] = l_function(n + 1, m + 1, qs[l], N)
    perms = np.array(list(itertools.permutations(range(N))))
    mats = table[perms[:, :, None], np.arange(N)[None, :, None], np.arange(N)[None, None, :]]
    total = float(np.sum(np.linalg.det(mats)))
    return total / (_c_norm(N) * math.pi**N)


def k_point_connected(q, N: int) -> float:
    """Average of prod_{n<=k} 1/(q_n + z_n) for k of the N eigenvalues.

    Obtained from the N-point average by sending the excess arguments to
    infinity: a sum over ordered k-subsets of k x k determinants weighted by
    the Beta factors of the untouched rows.
    """
    qs = _validate_q(q)
    k = qs.size
    if N > _MAX_PERMUTATION_DIM:
        raise ValueError(f"permutation sum unsupported beyond dimension {_MAX_PERMUTATION_DIM}")
    if k > N:
        raise ValueError(f"order k={k} exceeds dimension N={N}")
    beta_vals = np.array([_beta_euler(j, N) for j in range(1, N + 1)])
    all_beta = float(np.prod(beta_vals))
    # [j, a, b] = L(a, b, q_j), rows/cols 1-indexed into slots 1..N
    table = np.zeros((k, N + 1, N + 1))
    for j in range(k):
        for a in range(1, N + 1):
            for b in range(1, N + 1):
                table[j, a, b] = l_function(a, b, qs[j], N)
    sel = np.array(list(itertools.permutations(range(1, N + 1), k)))
    rows = np.arange(k)[None, :, None]
    mats = table[rows, sel[:, :, None], sel[:, None, :]]
    prefactors = all_beta / np.prod(beta_vals[sel - 1], axis=1)
    total = float(np.sum(prefactors * np.linalg.det(mats))) * math.factorial(N - k)
    return total / (_c_norm(N) * math.pi**k)


# ---------------------------------------------------------------------------
# correlators of the winding density


def _set_partitions(items):
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]
        yield [[first]] + part


def _resolvent_sum_average(qs, N: int) -> float:
    """< prod_i sum_n 1/(q_i + z_n) > via eigenvalue-assignment partitions.

    Each way of assigning the factors to distinct eigenvalues contributes a
    falling-factorial multiplicity; repeated assignments within a block are
    reduced to single resolvents by partial fractions (requires distinct q).
    """
    k = len(qs)
    total = 0.0
    for part in _set_partitions(range(k)):
        r = len(part)
        if r > N:
            continue
        multiplicity = math.prod(N - j for j in range(r))
        for choice in itertools.product(*part):
            coef = 1.0
            for block, i_sel in zip(part, choice):
                for i_other in block:
                    if i_other != i_sel:
                        coef /= qs[i_other] - qs[i_sel]
            total += multiplicity * coef * k_point_connected([qs[i] for i in choice], N)
    return total


def c1(p: float) -> float:
    """One-point correlator of the winding density: identically zero."""
    return 0.0


def c2(p1: float, p2: float, N: int) -> float:
    """Two-point correlator: -(1 - cos(p1-p2)^(2N)) / (1 - cos(p1-p2)^2).

    Depends on the separation only.  Evaluated through expm1/log1p so that
    near-coincident separations stay accurate; exactly coincident points
    (mod pi) are refused since the estimator-side value is contested there.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    d = p1 - p2
    s = math.sin(d)
    if abs(s) < _COINCIDENT_TOL:
        raise CoincidentPointsError(
            f"two-point correlator undefined at separation 0 mod pi; the continuous limit is {-N}"
        )
    s2 = s * s
    if s2 >= 1.0:
        return -1.0  # cos^2 underflows: both forms give exactly -1
    return math.expm1(N * math.log1p(-s2)) / s2


def ck_assemble(p, N: int) -> float:
    """Correlator of k winding densities assembled from connected averages.

    Supported for k <= 3 and N <= 8; separations must be distinct mod pi and
    no point may sit at a multiple of pi/2 (where cot is zero or undefined).
    """
    ps = np.asarray(p, dtype=float)
    if ps.ndim != 1 or ps.size == 0:
        raise ValueError("need at least one parameter point")
    k = ps.size
    if k > _MAX_ASSEMBLY_ORDER:
        raise ValueError(
            f"correlator assembly capped at order {_MAX_ASSEMBLY_ORDER} (combinatorial growth)"
        )
    if N > _MAX_PERMUTATION_DIM:
        raise ValueError(f"assembly unsupported beyond dimension {_MAX_PERMUTATION_DIM}")
    sins = np.sin(ps)
    if np.any(np.abs(sins) < _COINCIDENT_TOL):
        raise ValueError("points at 0 mod pi have no cotangent representation")
    qs = np.cos(ps) / sins
    if np.any(np.abs(qs) < _COINCIDENT_TOL):
        raise ValueError("points at pi/2 mod pi give q = 0; shift the frame first")
    for i in range(k):
        for j in range(i + 1, k):
            if abs(math.sin(ps[i] - ps[j])) < _COINCIDENT_TOL:
                raise CoincidentPointsError(
                    f"points {i} and {j} coincide modulo pi; correlator assembly needs distinct q"
                )
    total = 0.0
    for subset in itertools.chain.from_iterable(
        itertools.combinations(range(k), r) for r in range(k + 1)
    ):
        rest = [i for i in range(k) if i not in subset]
        coef = float(N) ** len(rest) * math.prod(qs[i] for i in rest)
        if subset:
            coef *= (-1.0) ** len(subset) / math.prod(sins[i] ** 2 for i in subset)
            coef *= _resolvent_sum_average([qs[i] for i in subset], N)
        total += coef
    return total


# ---------------------------------------------------------------------------
# unfolding


def unfolded_f2(alpha: float, psi1: float, psi2: float) -> float:
    """Large-N limit of the rescaled two-point correlator.

    Three regimes in the rescaling exponent: -1/dpsi^2 below 1/2, the
    exponential-corrected form exactly at 1/2, and zero above.
    """
    if alpha <= 0:
        raise ValueError("rescaling exponent must be positive")
    dpsi = psi1 - psi2
    if dpsi == 0.0:
        raise ValueError("limit requires distinct rescaled points")
    if alpha < 0.5:
        return -1.0 / dpsi**2
    if alpha == 0.5:
        return math.expm1(-(dpsi**2)) / dpsi**2
    return 0.0


def rescaled_c2(alpha: float, N: int, psi1: float, psi2: float) -> float:
    """Finite-N rescaled two-point correlator N^(-2a) * C2(psi1/N^a, psi2/N^a).

    Converges pointwise to ``unfolded_f2`` as N grows.
    """
    scale = float(N) ** (-alpha)
    return scale * scale * c2(psi1 * scale, psi2 * scale, N)


def mean_level_spacing(N: int) -> float:
    """GUE mean level spacing pi/sqrt(2N).  Reference constant only; the
    exponent-1/2 unfolding corresponds to rescaling by its inverse."""
    return math.pi / math.sqrt(2 * N)


# ---------------------------------------------------------------------------
# winding-number distribution and moments


@dataclass(frozen=True)
class WindingDistribution:
    """Probability mass of the winding number on {-N, ..., N} with parity N.

    ``probs[m]`` is the mass at W = 2m - N.  Off-parity W carry zero mass.
    """

    N: int
    probs: np.ndarray

    _SUM_TOL = 1e-12
    _SYMMETRY_TOL = 1e-12

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (self.N + 1,):
            raise ValueError(f"need {self.N + 1} mass values, got shape {probs.shape}")
        if np.any(probs < -1e-15) or not np.all(np.isfinite(probs)):
            raise ValueError("mass values must be finite and nonnegative")
        if abs(probs.sum() - 1.0) > self._SUM_TOL:
            raise ValueError(f"mass must sum to 1 within {self._SUM_TOL}")
        if np.max(np.abs(probs - probs[::-1])) > self._SYMMETRY_TOL:
            raise ValueError("mass must be symmetric under W -> -W")
        object.__setattr__(self, "probs", probs)

    @property
    def support(self) -> np.ndarray:
        return 2 * np.arange(self.N + 1) - self.N

    def mass(self, W: int) -> float:
        if abs(W) > self.N or (W + self.N) % 2 != 0:
            return 0.0
        return float(self.probs[(W + self.N) // 2])

    def as_dict(self) -> dict:
        return {int(w): float(p) for w, p in zip(self.support, self.probs)}

    def mean(self) -> float:
        return float(np.dot(self.probs, self.support))

    def second_moment(self) -> float:
        return float(np.dot(self.probs, self.support.astype(float) ** 2))


def _inside_probabilities(N: int) -> np.ndarray:
    ms = np.arange(1, N + 1)
    return betainc(ms, N - ms + 1, 0.5)


def winding_distribution(N: int) -> WindingDistribution:
    """Exact winding-number distribution at dimension N.

    P(W = 2m - N) is the Poisson-binomial probability of m successes among N
    independent trials with success probabilities u_m(N, 1), evaluated by the
    O(N^2) convolution; feasible up to N ~ 10^4.  The permutation-sum
    definition is kept as a brute-force oracle for small N.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    success = _inside_probabilities(N)
    probs = np.zeros(N + 1)
    probs[0] = 1.0
    for i in range(N):
        p = success[i]
        probs[1 : i + 2] = probs[1 : i + 2] * (1.0 - p) + probs[: i + 1] * p
        probs[0] *= 1.0 - p
    return WindingDistribution(N=N, probs=probs)


def winding_distribution_permutation_sum(N: int) -> WindingDistribution:
    """Brute-force oracle: mass at W = 2m - N as binomial(N, m) * r(m), with
    r(m) the average over all permutations of u-factors for the m inside
    eigenvalues and v-factors for the rest.  Cost N! -- keep N <= 8."""
    if not 1 <= N <= _MAX_PERMUTATION_DIM:
        raise ValueError(f"permutation sum limited to 1 <= N <= {_MAX_PERMUTATION_DIM}")
    u = _inside_probabilities(N)
    v = 1.0 - u
    probs = np.zeros(N + 1)
    for m in range(N + 1):
        acc = 0.0
        for omega in itertools.permutations(range(N)):
            term = 1.0
            for i in range(m):
                term *= u[omega[i]]
            for i in range(m, N):
                term *= v[omega[i]]
            acc += term
        r_m = acc / math.factorial(N)
        probs[m] = r_m * math.comb(N, m)
    return WindingDistribution(N=N, probs=probs)


def variance_analytic(N: int) -> float:
    """Exact second moment of the winding number: (2N-1)!!/(2N-2)!!.

    Integer-exact while the big-integer ratio stays cheap, log-space
    (lgamma, relative error ~1e-11) beyond; approaches 2*sqrt(N/pi) for
    large N.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if N <= 2000:
        return float(Fraction(2 * N * math.comb(2 * N, N), 4**N))
    log_value = (
        math.lgamma(2 * N + 1)
        - (2 * N - 1) * math.log(2.0)
        - math.lgamma(N + 1)
        - math.lgamma(N)
    )
    return math.exp(log_value)


def _second_moment_integrand(phi: np.ndarray, N: int) -> np.ndarray:
    """(1 - cos^(2N)) / (1 - cos^2) with series evaluation near its 0/0 points."""
    s2 = np.sin(phi) ** 2
    out = np.empty_like(s2)
    # s2 -> 1 would push log1p to its endpoint; the series branch covers it too
    regular = (s2 > 1e-2) & (s2 < 1.0)
    out[regular] = -np.expm1(N * np.log1p(-s2[regular])) / s2[regular]
    if np.any(~regular):
        # geometric series in cos^2: the 0/0 points become explicit polynomials
        x = np.cos(phi[~regular]) ** 2
        acc = np.zeros(x.size)
        term = np.ones(x.size)
        for _ in range(N):
            acc += term
            term *= x
        out[~regular] = acc
    return out


def moment_quadrature(N: int, k: int = 2) -> float:
    """Moments of the winding number via quadrature of the correlators.

    k = 1 integrates the vanishing one-point correlator (zero); k = 2
    averages the separation integrand over a uniform periodic grid dense
    enough to resolve every harmonic exactly.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if N > 1000:
        raise ValueError("quadrature route limited to N <= 1000")
    if k == 1:
        return 0.0
    if k != 2:
        raise ValueError("only the first and second moments are integrable here")
    n_nodes = 2 * N + 8
    phi = (np.arange(n_nodes) + 0.5) * (2 * math.pi / n_nodes)
    return float(np.mean(_second_moment_integrand(phi, N)))


def gaussian_approx(N: int, W: int) -> float:
    """Gaussian model for P(W)/P(0): exp(-(1/4) sqrt(pi/N) W^2).

    Empirical fit to the exact distribution at large N, not an exact result.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if abs(W) > N:
        raise ValueError(f"|W| must not exceed N={N}")
    if (W + N) % 2 != 0:
        raise ValueError(f"W={W} violates the parity of N={N}")
    return math.exp(-0.25 * math.sqrt(math.pi / N) * W * W)
