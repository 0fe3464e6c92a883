"""Finite-size ground truth: random spreading and exact per-realization SIRs.

User indices at this interface are 1-based (1 <= user <= K), matching the
convention used everywhere the simulator reports per-user quantities.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.linalg.lapack import dpocon
from scipy.special import erfc

from .errors import SingularGramError
from .scenario import Scenario

# Gram realizations worse-conditioned than this are rejected as unusable
GRAM_CONDITION_LIMIT = 1e12

_U64_MAX = 2 ** 64 - 1


@dataclass(frozen=True)
class RngSpec:
    """Reproducible random-stream identity.

    The same (seed, stream_id) always reproduces the same draw sequence, and
    per-trial substreams keyed by (seed, stream_id, trial) make Monte Carlo
    trials order-independent.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if not 0 <= value <= _U64_MAX:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {value}")

    def generator(self) -> np.random.Generator:
        return np.random.default_rng([self.seed, self.stream_id])

    def trial_generator(self, trial: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, self.stream_id, trial])

    def substream(self, offset: int) -> "RngSpec":
        """Derived spec with stream_id shifted by ``offset`` (mod 2**64)."""
        return RngSpec(self.seed, (self.stream_id + offset) % (_U64_MAX + 1))


def spreading_from_generator(generator: np.random.Generator, num_users: int,
                             processing_gain: int) -> np.ndarray:
    """N x K matrix of i.i.d. equiprobable +-1/sqrt(N) chips."""
    chips = generator.integers(0, 2, size=(processing_gain, num_users))
    return (2.0 * chips - 1.0) / np.sqrt(processing_gain)


def random_spreading(num_users: int, processing_gain: int, rng: RngSpec) -> np.ndarray:
    """Deterministic random spreading matrix for the given stream."""
    if num_users < 1 or processing_gain < 1:
        raise ValueError("num_users and processing_gain must be >= 1")
    return spreading_from_generator(rng.generator(), num_users, processing_gain)


def _check_dimensions(S: np.ndarray, powers: np.ndarray, scenario: Scenario, user: int):
    if S.shape != (scenario.processing_gain, scenario.num_users):
        raise ValueError(
            f"spreading matrix must have shape "
            f"({scenario.processing_gain}, {scenario.num_users}), got {S.shape}")
    if powers.shape != (scenario.num_users,):
        raise ValueError(
            f"power vector must have shape ({scenario.num_users},), got {powers.shape}")
    if np.any(powers < 0):
        raise ValueError("powers must be nonnegative")
    if not 1 <= user <= scenario.num_users:
        raise ValueError(f"user index must lie in 1..{scenario.num_users}, got {user}")


def gram_cholesky(S: np.ndarray):
    """Cholesky factor of S^T S, rejecting singular or ill-conditioned draws."""
    gram = S.T @ S
    anorm = float(np.abs(gram).sum(axis=0).max())
    try:
        factor = cho_factor(gram, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularGramError(
            f"Gram matrix of a {S.shape[0]}x{S.shape[1]} realization is singular: {exc}"
        ) from None
    rcond, info = dpocon(factor[0], anorm, uplo="L")
    if info != 0 or rcond <= 0 or 1.0 / rcond > GRAM_CONDITION_LIMIT:
        cond = np.inf if rcond <= 0 else 1.0 / rcond
        raise SingularGramError(
            f"Gram matrix of a {S.shape[0]}x{S.shape[1]} realization has condition "
            f"estimate {cond:.3e} beyond the {GRAM_CONDITION_LIMIT:.0e} limit")
    return factor


def sir_mf(S: np.ndarray, powers, scenario: Scenario, user: int) -> float:
    """Matched-filter output SIR:
    p_k h_k / (sigma^2 + sum_{j != k} p_j h_j (s_k^T s_j)^2).
    """
    p = np.asarray(powers, dtype=float)
    _check_dimensions(S, p, scenario, user)
    k = user - 1
    received = p * scenario.channel_gains
    cross = S.T @ S[:, k]
    interference = received * cross ** 2
    interference[k] = 0.0
    return float(received[k] / (scenario.noise_power + interference.sum()))


def sir_de(S: np.ndarray, powers, scenario: Scenario, user: int) -> float:
    """Decorrelator output SIR: p_k h_k / (sigma^2 * [(S^T S)^{-1}]_{kk})."""
    p = np.asarray(powers, dtype=float)
    _check_dimensions(S, p, scenario, user)
    if scenario.num_users > scenario.processing_gain:
        raise SingularGramError(
            f"decorrelator needs K <= N, got K={scenario.num_users}, "
            f"N={scenario.processing_gain}")
    k = user - 1
    factor = gram_cholesky(S)
    unit = np.zeros(scenario.num_users)
    unit[k] = 1.0
    inv_kk = float(cho_solve(factor, unit, check_finite=False)[k])
    return float(p[k] * scenario.channel_gains[k] / (scenario.noise_power * inv_kk))


def sir_mmse(S: np.ndarray, powers, scenario: Scenario, user: int) -> float:
    """MMSE output SIR: p_k h_k * s_k^T A_k^{-1} s_k with
    A_k = sum_{j != k} p_j h_j s_j s_j^T + sigma^2 I.

    A_k is positive definite for sigma^2 > 0, so the quadratic form is
    evaluated by solving A_k x = s_k rather than forming the inverse.
    """
    p = np.asarray(powers, dtype=float)
    _check_dimensions(S, p, scenario, user)
    k = user - 1
    received = p * scenario.channel_gains
    others = np.delete(np.arange(scenario.num_users), k)
    A = (S[:, others] * received[others]) @ S[:, others].T
    A[np.diag_indices_from(A)] += scenario.noise_power
    factor = cho_factor(A, lower=True, check_finite=False)
    x = cho_solve(factor, S[:, k], check_finite=False)
    return float(received[k] * (S[:, k] @ x))


def sir_based_update(powers, measured_sirs, targets) -> np.ndarray:
    """Measured-SIR power update p_k <- (gamma*_k / gamma_k) p_k."""
    p = np.asarray(powers, dtype=float)
    measured = np.asarray(measured_sirs, dtype=float)
    target = np.asarray(targets, dtype=float)
    if not p.shape == measured.shape == target.shape:
        raise ValueError(
            f"powers, measured_sirs, and targets must share a shape, got "
            f"{p.shape}, {measured.shape}, {target.shape}")
    if np.any(measured <= 0):
        raise ValueError("measured SIRs must be positive")
    return target / measured * p


def ber_from_sir(gamma):
    """Bit error rate under Gaussian interference, Q(sqrt(gamma)).

    Accepts a scalar or array; the per-symbol mapping used in reports, in
    place of symbol-level error counting.
    """
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise ValueError("SIR must be nonnegative")
    result = 0.5 * erfc(np.sqrt(g / 2.0))
    return float(result) if np.isscalar(gamma) else result
