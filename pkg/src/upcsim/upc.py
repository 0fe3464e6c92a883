"""The unified power-control iteration and its convergence-property harness.

The iteration updates p_k <- gamma*_k * sigma^2 / (eta * h_k) where eta is
the large-system efficiency of the scenario's receiver at the current SNR
profile. Equivalently, the SNR profile evolves as Gamma(n+1) = I(Gamma(n))
with the interference map I_k(Gamma) = gamma*_k / eta(Gamma).
"""

from dataclasses import dataclass, field

import numpy as np

from .efficiency import DEFAULT_SETTINGS, FixedPointSettings, receiver_efficiency
from .errors import InfeasibleLoadError
from .scenario import ReceiverKind, Scenario, snr_from_power

# guard against division by zero in the relative power-change test
_REL_CHANGE_GUARD = 1e-300


@dataclass(frozen=True)
class UpcSettings:
    """Stopping rule for the power iteration."""

    power_tolerance_rel: float = 1e-9
    max_iterations: int = 500

    def __post_init__(self):
        if not self.power_tolerance_rel > 0:
            raise ValueError(
                f"power_tolerance_rel must be positive, got {self.power_tolerance_rel}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")


DEFAULT_UPC_SETTINGS = UpcSettings()


@dataclass(frozen=True)
class UpcStep:
    """State at the start of iteration ``iteration`` (powers, SNRs, efficiency)."""

    iteration: int
    powers: np.ndarray
    snrs: np.ndarray
    efficiency: np.ndarray

    def __post_init__(self):
        for name in ("powers", "snrs", "efficiency"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class UpcTrace:
    """Full record of one power-control run; step indices are 0, 1, 2, ..."""

    steps: tuple
    converged: bool

    @property
    def final_powers(self) -> np.ndarray:
        return self.steps[-1].powers

    @property
    def final_snrs(self) -> np.ndarray:
        return self.steps[-1].snrs

    @property
    def num_updates(self) -> int:
        """Number of power updates performed (= last iteration index)."""
        return len(self.steps) - 1


def feasibility(receiver: ReceiverKind, alpha: float, gamma_star_max: float) -> bool:
    """Whether a feasible SNR vector exists for the worst-case target.

    MF: alpha * gamma_star_max < 1 (equal-target fixed point of the MF
    efficiency); DE: alpha < 1; MMSE: alpha < 1 + 1/gamma_star_max. For the
    IO detector no criterion is available, so True is returned as a
    placeholder, not a guarantee; upc_run still stops at max_iterations.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    if not gamma_star_max > 0:
        raise ValueError(f"gamma_star_max must be positive, got {gamma_star_max}")
    if receiver is ReceiverKind.MF:
        return alpha * gamma_star_max < 1.0
    if receiver is ReceiverKind.DE:
        return alpha < 1.0
    if receiver is ReceiverKind.MMSE:
        return alpha < 1.0 + 1.0 / gamma_star_max
    if receiver is ReceiverKind.IO:
        return True
    raise ValueError(f"unsupported receiver kind: {receiver!r}")


def interference_map(snrs, scenario: Scenario,
                     settings: FixedPointSettings = DEFAULT_SETTINGS) -> np.ndarray:
    """I_k(Gamma) = gamma*_k / eta(Gamma) for the scenario's receiver.

    Callers are responsible for feasibility; the map itself is defined for
    any nonnegative profile (eta is always positive).
    """
    snr = np.asarray(snrs, dtype=float)
    if snr.shape != (scenario.num_users,):
        raise ValueError(
            f"SNR profile must have shape ({scenario.num_users},), got {snr.shape}")
    eta = receiver_efficiency(snr, scenario.alpha, scenario.receiver, settings)
    return scenario.target_sirs / eta


def upc_run(scenario: Scenario, initial_powers,
            upc_settings: UpcSettings = DEFAULT_UPC_SETTINGS,
            fp_settings: FixedPointSettings = DEFAULT_SETTINGS) -> UpcTrace:
    """Run the power iteration from ``initial_powers`` until convergence.

    Each recorded step holds the powers at that iteration together with the
    SNR profile and per-user efficiency computed from them; step 0 is the
    initial condition (all-zero powers are legal). Convergence means the
    maximum relative power change drops below ``power_tolerance_rel``;
    hitting max_iterations yields a trace with converged=False rather than
    an exception.
    """
    p = np.asarray(initial_powers, dtype=float).copy()
    if p.shape != (scenario.num_users,):
        raise ValueError(
            f"initial powers must have shape ({scenario.num_users},), got {p.shape}")
    if np.any(p < 0):
        raise ValueError("initial powers must be nonnegative")
    if not feasibility(scenario.receiver, scenario.alpha,
                       float(np.max(scenario.target_sirs))):
        raise InfeasibleLoadError(
            f"receiver {scenario.receiver.value} with load alpha={scenario.alpha:.6g} "
            f"cannot reach max target SIR {np.max(scenario.target_sirs):.6g}")

    base = scenario.target_sirs * scenario.noise_power / scenario.channel_gains

    def make_step(n, powers):
        snrs = snr_from_power(powers, scenario)
        eta = receiver_efficiency(snrs, scenario.alpha, scenario.receiver, fp_settings)
        return UpcStep(n, powers, snrs, np.full(scenario.num_users, eta)), eta

    step, eta = make_step(0, p)
    steps = [step]
    converged = False
    for n in range(1, upc_settings.max_iterations + 1):
        p_next = base / eta
        rel_change = float(np.max(
            np.abs(p_next - p) / np.maximum(p, _REL_CHANGE_GUARD)))
        step, eta = make_step(n, p_next)
        steps.append(step)
        p = p_next
        if rel_change < upc_settings.power_tolerance_rel:
            converged = True
            break
    return UpcTrace(steps=tuple(steps), converged=converged)


@dataclass(frozen=True)
class PropertyViolation:
    """One failed standard-interference check on one sample."""

    prop: str            # "positivity" | "monotonicity" | "scalability"
    pair_index: int
    theta: float | None
    detail: str


@dataclass(frozen=True)
class PropertyReport:
    """Outcome of the standard-interference-function checks."""

    receiver: ReceiverKind
    pairs_checked: int
    thetas: tuple
    violations: tuple = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return not self.violations


# relative slack absorbing fixed-point solver noise in the comparisons
_PROPERTY_RTOL = 1e-9


def check_standard_interference(scenario: Scenario, sample_profiles, theta_values,
                                settings: FixedPointSettings = DEFAULT_SETTINGS
                                ) -> PropertyReport:
    """Evaluate positivity, monotonicity, and scalability of the interference map.

    ``sample_profiles`` is a sequence of (Gamma, Gamma') pairs with
    Gamma' >= Gamma element-wise; ``theta_values`` are scale factors > 1.
    Checks I(Gamma) > 0, I(Gamma') >= I(Gamma), and theta*I(Gamma) >
    I(theta*Gamma) on every sample, with relative slack 1e-9 for solver
    noise. For MF, DE, and MMSE receivers the report must come back clean.
    """
    thetas = tuple(float(t) for t in theta_values)
    if any(t <= 1.0 for t in thetas):
        raise ValueError(f"theta values must exceed 1, got {thetas}")

    violations = []
    count = 0
    for idx, (lower, upper) in enumerate(sample_profiles):
        lo = np.asarray(lower, dtype=float)
        hi = np.asarray(upper, dtype=float)
        if lo.shape != (scenario.num_users,) or hi.shape != (scenario.num_users,):
            raise ValueError(
                f"sample pair {idx} must hold length-{scenario.num_users} profiles")
        if np.any(lo < 0) or np.any(hi < lo):
            raise ValueError(
                f"sample pair {idx} must satisfy 0 <= Gamma <= Gamma' element-wise")
        count += 1

        i_lo = interference_map(lo, scenario, settings)
        i_hi = interference_map(hi, scenario, settings)
        if not np.all(i_lo > 0):
            violations.append(PropertyViolation(
                "positivity", idx, None, f"I(Gamma) min entry {np.min(i_lo):.6g}"))
        if np.any(i_hi < i_lo * (1.0 - _PROPERTY_RTOL)):
            worst = float(np.min(i_hi - i_lo))
            violations.append(PropertyViolation(
                "monotonicity", idx, None, f"I(Gamma') - I(Gamma) min {worst:.6g}"))
        for theta in thetas:
            i_scaled = interference_map(theta * lo, scenario, settings)
            if np.any(theta * i_lo <= i_scaled * (1.0 - _PROPERTY_RTOL)):
                worst = float(np.min(theta * i_lo - i_scaled))
                violations.append(PropertyViolation(
                    "scalability", idx, theta,
                    f"theta*I(Gamma) - I(theta*Gamma) min {worst:.6g}"))

    return PropertyReport(receiver=scenario.receiver, pairs_checked=count,
                          thetas=thetas, violations=tuple(violations))
