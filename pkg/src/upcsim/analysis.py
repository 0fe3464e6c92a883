"""Finite-size statistical predictions and Monte Carlo deviation estimates.

Covers the beta approximation of the decorrelator SIR density, the Gaussian
approximation of the MMSE SIR fluctuation, the probability that the true SIR
stays within a dB band of the target while powers are held at the
large-system steady state, and the reference probability table built from
both routes (simulation and approximation).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from .efficiency import DEFAULT_SETTINGS, efficiency_mmse_equal_power
from .errors import InfeasibleLoadError, SingularGramError
from .finite import RngSpec, sir_de, sir_mmse, spreading_from_generator
from .scenario import ReceiverKind, Scenario
from .upc import DEFAULT_UPC_SETTINGS, feasibility, upc_run

# give up on a Monte Carlo trial after this many rejected singular draws
_MAX_REDRAWS = 1000


def _std_normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


@dataclass(frozen=True)
class DeltaBand:
    """SIR band within +-delta_db of the target, in linear scale."""

    delta_db: float
    gamma_star: float

    def __post_init__(self):
        if not self.delta_db > 0:
            raise ValueError(f"delta_db must be positive, got {self.delta_db}")
        if not self.gamma_star > 0:
            raise ValueError(f"gamma_star must be positive, got {self.gamma_star}")

    @property
    def gamma_low(self) -> float:
        return 10.0 ** (-self.delta_db / 10.0) * self.gamma_star

    @property
    def gamma_high(self) -> float:
        return 10.0 ** (self.delta_db / 10.0) * self.gamma_star

    def contains(self, value) -> np.ndarray:
        v = np.asarray(value, dtype=float)
        return (v >= self.gamma_low) & (v <= self.gamma_high)


@dataclass(frozen=True)
class MonteCarloReport:
    """Band-probability estimate with its binomial standard error."""

    estimate: float
    trials: int
    seed: RngSpec
    rejected_singular: int
    std_error: float

    def __post_init__(self):
        if not 0.0 <= self.estimate <= 1.0:
            raise ValueError(f"estimate must lie in [0, 1], got {self.estimate}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        binomial = math.sqrt(self.estimate * (1.0 - self.estimate) / self.trials)
        if abs(self.std_error - binomial) > 1e-12:
            raise ValueError(
                f"std_error {self.std_error} does not match the binomial value "
                f"{binomial} for estimate={self.estimate}, trials={self.trials}")


def _de_params(processing_gain: int, num_users: int):
    if num_users < 2:
        raise ValueError(
            f"decorrelator SIR density needs K >= 2, got K={num_users}")
    if num_users >= processing_gain:
        raise InfeasibleLoadError(
            f"decorrelator SIR density needs load K/N < 1, got K={num_users}, "
            f"N={processing_gain}")
    return processing_gain - num_users + 1.0, num_users - 1.0


def de_sir_pdf(z, processing_gain: int, num_users: int, gamma_star: float):
    """Beta-kernel density of the decorrelator SIR at the steady state.

    The SIR divided by its steady-state SNR Gamma* = gamma*/(1-alpha) follows
    (approximately) a beta law with shape (N-K+1, K-1); the density is zero
    outside (0, Gamma*). Accepts scalar or array ``z``.
    """
    a, b = _de_params(processing_gain, num_users)
    if not gamma_star > 0:
        raise ValueError(f"gamma_star must be positive, got {gamma_star}")
    alpha = num_users / processing_gain
    gamma_ss = gamma_star / (1.0 - alpha)
    log_beta = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)

    zz = np.asarray(z, dtype=float)
    out = np.zeros_like(zz, dtype=float)
    inside = (zz > 0) & (zz < gamma_ss)
    t = zz[inside] / gamma_ss
    out[inside] = np.exp(
        (a - 1.0) * np.log(t) + (b - 1.0) * np.log1p(-t) - log_beta) / gamma_ss
    return float(out) if np.isscalar(z) else out


def p_delta_de(processing_gain: int, num_users: int, gamma_star: float,
               delta_db: float) -> float:
    """Probability that the decorrelator SIR stays within delta_db of target.

    Regularized-incomplete-beta difference over the band, with the upper
    band edge clamped to the density's support (0, Gamma*).
    """
    a, b = _de_params(processing_gain, num_users)
    band = DeltaBand(delta_db, gamma_star)
    gamma_ss = gamma_star / (1.0 - num_users / processing_gain)
    x_low = min(max(band.gamma_low / gamma_ss, 0.0), 1.0)
    x_high = min(max(band.gamma_high / gamma_ss, 0.0), 1.0)
    return float(betainc(a, b, x_high) - betainc(a, b, x_low))


def mmse_sir_variance_c(gamma_star: float, alpha: float) -> float:
    """Variance constant c in the Gaussian model gamma ~ N(gamma*, c/N):
    c = 2 gamma*^2 / (1 - alpha (gamma*/(1+gamma*))^2).
    """
    if not gamma_star > 0:
        raise ValueError(f"gamma_star must be positive, got {gamma_star}")
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    denom = 1.0 - alpha * (gamma_star / (1.0 + gamma_star)) ** 2
    if denom <= 0:
        raise ValueError(
            f"variance constant undefined: alpha*(gamma*/(1+gamma*))^2 = "
            f"{alpha * (gamma_star / (1.0 + gamma_star)) ** 2:.6g} >= 1")
    return 2.0 * gamma_star ** 2 / denom


def p_delta_mmse(processing_gain: int, alpha: float, gamma_star: float,
                 delta_db: float) -> float:
    """Gaussian-model probability that the MMSE SIR stays within delta_db:
    Phi(sqrt(N/c)(gamma_H - gamma*)) - Phi(sqrt(N/c)(gamma_L - gamma*)).
    """
    if processing_gain < 1:
        raise ValueError(f"processing_gain must be >= 1, got {processing_gain}")
    c = mmse_sir_variance_c(gamma_star, alpha)
    band = DeltaBand(delta_db, gamma_star)
    scale = math.sqrt(processing_gain / c)
    return (_std_normal_cdf(scale * (band.gamma_high - gamma_star))
            - _std_normal_cdf(scale * (band.gamma_low - gamma_star)))


def steady_state_snr(scenario: Scenario) -> np.ndarray:
    """Per-user received SNR at the power-control fixed point.

    Uses the closed forms where they exist (DE always; MMSE with equal
    targets) and falls back to running the power iteration otherwise.
    """
    if not feasibility(scenario.receiver, scenario.alpha,
                       float(np.max(scenario.target_sirs))):
        raise InfeasibleLoadError(
            f"receiver {scenario.receiver.value} with load alpha="
            f"{scenario.alpha:.6g} cannot reach the configured targets")
    targets = scenario.target_sirs
    if scenario.receiver is ReceiverKind.DE:
        return targets / (1.0 - scenario.alpha)
    equal_targets = bool(np.all(targets == targets[0]))
    if scenario.receiver is ReceiverKind.MMSE and equal_targets:
        _, gamma_ss = efficiency_mmse_equal_power(float(targets[0]), scenario.alpha)
        return np.full(scenario.num_users, gamma_ss)
    trace = upc_run(scenario, np.zeros(scenario.num_users),
                    DEFAULT_UPC_SETTINGS, DEFAULT_SETTINGS)
    if not trace.converged:
        raise InfeasibleLoadError(
            f"power iteration did not converge for receiver "
            f"{scenario.receiver.value} at alpha={scenario.alpha:.6g}")
    return trace.final_snrs


def sir_samples(scenario: Scenario, trials: int, rng: RngSpec,
                user: int = 1) -> tuple[np.ndarray, int]:
    """Draw ``trials`` true SIR values for one user at the steady state.

    Powers are fixed at the large-system fixed point; each trial draws an
    independent spreading matrix from its own (seed, stream, trial) stream.
    Singular Gram realizations are redrawn within the trial's stream and
    counted. Returns (samples, rejected_singular).
    """
    if scenario.receiver not in (ReceiverKind.DE, ReceiverKind.MMSE):
        raise ValueError(
            f"exact SIR sampling supports DE and MMSE receivers, got "
            f"{scenario.receiver.value}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    snr_ss = steady_state_snr(scenario)
    powers = snr_ss * scenario.noise_power / scenario.channel_gains
    sir_fn = sir_de if scenario.receiver is ReceiverKind.DE else sir_mmse

    samples = np.empty(trials)
    rejected = 0
    for trial in range(trials):
        generator = rng.trial_generator(trial)
        for _ in range(_MAX_REDRAWS):
            S = spreading_from_generator(
                generator, scenario.num_users, scenario.processing_gain)
            try:
                samples[trial] = sir_fn(S, powers, scenario, user)
                break
            except SingularGramError:
                rejected += 1
        else:
            raise SingularGramError(
                f"trial {trial} rejected {_MAX_REDRAWS} singular draws in a row")
    return samples, rejected


def monte_carlo_p_delta(scenario: Scenario, delta_db: float, trials: int,
                        rng: RngSpec) -> MonteCarloReport:
    """Monte Carlo estimate of the probability that user 1's true SIR stays
    within delta_db of its target while powers sit at the steady state.

    User 1 is the measured user; at the equal-target steady state all users
    are statistically identical.
    """
    band = DeltaBand(delta_db, float(scenario.target_sirs[0]))
    samples, rejected = sir_samples(scenario, trials, rng, user=1)
    estimate = float(np.mean(band.contains(samples)))
    return MonteCarloReport(
        estimate=estimate, trials=trials, seed=rng, rejected_singular=rejected,
        std_error=math.sqrt(estimate * (1.0 - estimate) / trials))


class EmpiricalCdf:
    """Step-function CDF of a sample set, evaluable at any point."""

    def __init__(self, samples):
        values = np.sort(np.asarray(samples, dtype=float).ravel())
        if values.size == 0:
            raise ValueError("samples must be nonempty")
        self.values = values
        self.n = values.size

    def __call__(self, x):
        idx = np.searchsorted(self.values, np.asarray(x, dtype=float), side="right")
        result = idx / self.n
        return float(result) if np.isscalar(x) else result

    @property
    def grid(self) -> tuple[np.ndarray, np.ndarray]:
        """(sorted sample values, cumulative fractions)."""
        return self.values, np.arange(1, self.n + 1) / self.n


def empirical_cdf(samples) -> EmpiricalCdf:
    """Build the empirical CDF of ``samples``."""
    return EmpiricalCdf(samples)


@dataclass(frozen=True)
class Table1Cell:
    """One (N, alpha, receiver) entry of the reference probability table."""

    processing_gain: int
    alpha: float
    receiver: ReceiverKind
    approx: float | None = None
    sim: MonteCarloReport | None = None
    error: str | None = None


def default_trials(processing_gain: int) -> int:
    """Trial budget per cell: 10^5 up to N=64, 10^4 beyond (matrix solves dominate)."""
    return 100_000 if processing_gain <= 64 else 10_000


def _cell_scenario(processing_gain: int, alpha: float, receiver: ReceiverKind,
                   gamma_star: float) -> Scenario:
    num_users = round(alpha * processing_gain)
    if abs(num_users - alpha * processing_gain) > 1e-9 or num_users < 1:
        raise ValueError(
            f"alpha={alpha} does not give an integer user count at N={processing_gain}")
    # unit gains and noise: only received SNRs matter at the steady state
    return Scenario(num_users=num_users, processing_gain=processing_gain,
                    noise_power=1.0, channel_gains=np.ones(num_users),
                    target_sirs=np.full(num_users, gamma_star), receiver=receiver)


def _table1_cell(processing_gain: int, alpha: float, receiver: ReceiverKind,
                 gamma_star: float, delta_db: float, trials: int,
                 cell_rng: RngSpec) -> Table1Cell:
    try:
        scenario = _cell_scenario(processing_gain, alpha, receiver, gamma_star)
        if receiver is ReceiverKind.DE:
            approx = p_delta_de(processing_gain, scenario.num_users,
                                gamma_star, delta_db)
        else:
            approx = p_delta_mmse(processing_gain, alpha, gamma_star, delta_db)
        sim = None
        if trials > 0:
            sim = monte_carlo_p_delta(scenario, delta_db, trials, cell_rng)
        return Table1Cell(processing_gain, alpha, receiver, approx=approx, sim=sim)
    except Exception as exc:  # cell marked failed without aborting the table
        return Table1Cell(processing_gain, alpha, receiver,
                          error=f"{type(exc).__name__}: {exc}")


def table1(gamma_star: float, delta_db: float, grid, trials: int | None,
           rng: RngSpec, workers: int = 1) -> list[Table1Cell]:
    """Build the reference table over a grid of (N, alpha) cells.

    Each cell is computed for both the DE and MMSE receivers; ``trials``
    of None applies the per-N default budget, 0 skips the simulation column.
    Cells draw from disjoint substreams of ``rng``, so results do not depend
    on evaluation order or on the number of workers.
    """
    jobs = []
    for index, (processing_gain, alpha) in enumerate(grid):
        for offset, receiver in enumerate((ReceiverKind.DE, ReceiverKind.MMSE)):
            cell_trials = default_trials(processing_gain) if trials is None else trials
            cell_rng = rng.substream(2 * index + offset + 1)
            jobs.append((int(processing_gain), float(alpha), receiver,
                         float(gamma_star), float(delta_db), cell_trials, cell_rng))

    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_table1_cell_job, jobs))
    return [_table1_cell(*job) for job in jobs]


def _table1_cell_job(job) -> Table1Cell:
    return _table1_cell(*job)
