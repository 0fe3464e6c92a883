"""Large-system multiuser efficiency for the supported receiver kinds.

The efficiency eta in (0, 1] maps received SNR to output SIR through
gamma = eta * Gamma. Expectations over the SNR distribution are realized
as sample means over the K profile entries; no parametric fitting.
"""

import functools
from dataclasses import dataclass
from math import sqrt

import numpy as np

from .errors import InfeasibleLoadError, SolverError
from .scenario import ReceiverKind


@dataclass(frozen=True)
class FixedPointSettings:
    """Numerical knobs for the scalar fixed-point solvers."""

    tolerance: float = 1e-12
    max_iterations: int = 200
    quadrature_nodes: int = 64

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.quadrature_nodes < 8:
            raise ValueError(f"quadrature_nodes must be >= 8, got {self.quadrature_nodes}")


DEFAULT_SETTINGS = FixedPointSettings()


def _profile(profile) -> np.ndarray:
    snr = np.atleast_1d(np.asarray(profile, dtype=float))
    if snr.size == 0:
        raise ValueError("SNR profile must be nonempty")
    if np.any(snr < 0):
        raise ValueError("SNR profile entries must be nonnegative")
    return snr


def solve_scalar_fixed_point(residual, bracket, settings: FixedPointSettings = DEFAULT_SETTINGS,
                             method: str = "bisection", damping: float = 0.5,
                             start: float | None = None) -> float:
    """Drive a scalar residual to |residual(x)| < tolerance inside ``bracket``.

    method="bisection" needs residual(lo) and residual(hi) of opposite sign
    and a single crossing. method="damped" iterates x <- x - damping *
    residual(x) from ``start`` (default: upper bracket edge), clipping
    iterates to the bracket; use it when the residual is a fixed-point map
    x - T(x) with contracting T.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValueError(f"bracket must satisfy lo < hi, got ({lo}, {hi})")

    if method == "bisection":
        r_lo = residual(lo)
        r_hi = residual(hi)
        if abs(r_lo) < settings.tolerance:
            return lo
        if abs(r_hi) < settings.tolerance:
            return hi
        if np.sign(r_lo) == np.sign(r_hi):
            raise SolverError(
                f"residual has no sign change over ({lo}, {hi}): "
                f"r(lo)={r_lo:.3e}, r(hi)={r_hi:.3e}", residual=r_hi)
        r_mid = r_hi
        for _ in range(settings.max_iterations):
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:  # interval exhausted at float resolution
                break
            r_mid = residual(mid)
            if abs(r_mid) < settings.tolerance:
                return mid
            if np.sign(r_mid) == np.sign(r_lo):
                lo, r_lo = mid, r_mid
            else:
                hi = mid
        raise SolverError(
            f"bisection did not reach |residual| < {settings.tolerance} within "
            f"{settings.max_iterations} iterations", residual=float(r_mid))

    if method == "damped":
        if not 0 < damping <= 1:
            raise ValueError(f"damping must lie in (0, 1], got {damping}")
        x = hi if start is None else float(start)
        r = residual(x)
        for _ in range(settings.max_iterations):
            if abs(r) < settings.tolerance:
                return x
            x = min(max(x - damping * r, lo), hi)
            r = residual(x)
        if abs(r) < settings.tolerance:
            return x
        raise SolverError(
            f"damped iteration did not reach |residual| < {settings.tolerance} within "
            f"{settings.max_iterations} iterations", residual=float(r))

    raise ValueError(f"unknown method {method!r}")


def efficiency_mf(profile, alpha: float) -> float:
    """Matched-filter efficiency 1 / (1 + alpha * mean(Gamma))."""
    snr = _profile(profile)
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    return 1.0 / (1.0 + alpha * float(np.mean(snr)))


def efficiency_de(alpha: float) -> float:
    """Decorrelator efficiency 1 - alpha, defined for alpha < 1."""
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    if alpha >= 1:
        raise InfeasibleLoadError(
            f"decorrelator requires load alpha < 1, got alpha={alpha}")
    return 1.0 - alpha


def efficiency_mmse(profile, alpha: float,
                    settings: FixedPointSettings = DEFAULT_SETTINGS) -> float:
    """MMSE efficiency: the unique eta in (0, 1] solving
    1/eta = 1 + alpha * mean(Gamma / (1 + eta * Gamma)).

    Solved by bisection; the residual above is positive for eta below the
    root and negative above it, so the bracket (0, 1] always works.
    """
    snr = _profile(profile)
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")

    def residual(eta):
        return 1.0 / eta - 1.0 - alpha * float(np.mean(snr / (1.0 + eta * snr)))

    return solve_scalar_fixed_point(residual, (1e-12, 1.0), settings)


@functools.lru_cache(maxsize=8)
def _hermgauss(n: int):
    nodes, weights = np.polynomial.hermite.hermgauss(n)
    return nodes, weights


def _io_gaussian_mean(eta: float, snr: np.ndarray, nodes, weights) -> float:
    # mean over users of Gamma * (1 - E_z tanh(eta*Gamma - z*sqrt(eta*Gamma))),
    # z standard normal, via Gauss-Hermite after z = sqrt(2)*t
    x = eta * snr
    z = sqrt(2.0) * nodes
    arg = x[:, None] - z[None, :] * np.sqrt(x)[:, None]
    integrals = (np.tanh(arg) @ weights) / sqrt(np.pi)
    return float(np.mean(snr * (1.0 - integrals)))


def efficiency_io(profile, alpha: float,
                  settings: FixedPointSettings = DEFAULT_SETTINGS) -> float:
    """Individually-optimal-detector efficiency (binary inputs).

    Solves 1/eta = 1 + alpha * mean(Gamma * (1 - E_z tanh(eta*Gamma -
    z*sqrt(eta*Gamma)))) with the Gaussian integral evaluated by
    Gauss-Hermite quadrature, via damped fixed-point iteration from eta = 1.
    The equation may admit several solutions at high SNR and load; the
    iteration from 1 picks one deterministically.
    """
    snr = _profile(profile)
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    nodes, weights = _hermgauss(settings.quadrature_nodes)

    def residual(eta):
        return eta - 1.0 / (1.0 + alpha * _io_gaussian_mean(eta, snr, nodes, weights))

    return solve_scalar_fixed_point(residual, (0.0, 1.0), settings,
                                    method="damped", damping=0.5, start=1.0)


def efficiency_mmse_equal_power(gamma_star: float, alpha: float) -> tuple[float, float]:
    """Closed-form MMSE efficiency when every user holds the same target SIR.

    Returns (eta, Gamma_star) with Gamma_star = gamma_star / (1 - alpha *
    gamma_star / (1 + gamma_star)); the pair satisfies eta * Gamma_star =
    gamma_star. Requires alpha < 1 + 1/gamma_star.
    """
    if not gamma_star > 0:
        raise ValueError(f"gamma_star must be positive, got {gamma_star}")
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    if alpha >= 1.0 + 1.0 / gamma_star:
        raise InfeasibleLoadError(
            f"equal-power MMSE requires alpha < 1 + 1/gamma_star = "
            f"{1.0 + 1.0 / gamma_star:.6g}, got alpha={alpha}")
    gamma_ss = gamma_star / (1.0 - alpha * gamma_star / (1.0 + gamma_star))
    half_inv = 1.0 / (2.0 * gamma_ss)
    eta = ((1.0 - alpha) / 2.0 - half_inv
           + sqrt(((1.0 - alpha) / 2.0) ** 2
                  + (1.0 + alpha) / (2.0 * gamma_ss) + half_inv ** 2))
    return eta, gamma_ss


def receiver_efficiency(profile, alpha: float, receiver: ReceiverKind,
                        settings: FixedPointSettings = DEFAULT_SETTINGS) -> float:
    """Efficiency of ``receiver`` on the given empirical SNR profile."""
    if receiver is ReceiverKind.MF:
        return efficiency_mf(profile, alpha)
    if receiver is ReceiverKind.DE:
        return efficiency_de(alpha)
    if receiver is ReceiverKind.MMSE:
        return efficiency_mmse(profile, alpha, settings)
    if receiver is ReceiverKind.IO:
        return efficiency_io(profile, alpha, settings)
    raise ValueError(f"unsupported receiver kind: {receiver!r}")
