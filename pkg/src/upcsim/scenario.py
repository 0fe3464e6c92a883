"""Experiment configuration: users, channel gains, SIR targets, SNR bookkeeping.

All quantities are kept in linear scale internally (powers in Watts, SIR/SNR
as plain ratios); dB conversion happens only at I/O boundaries.
"""

import enum
import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


class ReceiverKind(enum.Enum):
    """Uplink detector family handled by the simulator."""

    MF = "mf"       # matched filter
    DE = "de"       # decorrelator
    MMSE = "mmse"   # linear MMSE detector
    IO = "io"       # individually optimal detector (binary inputs)


@dataclass(frozen=True)
class Scenario:
    """Immutable description of one uplink configuration.

    ``channel_gains`` and ``target_sirs`` are length-K arrays; ``target_sirs``
    is per-user even when all entries are equal. The load ``alpha`` is always
    derived as K/N so it can never drift from the stored dimensions.
    """

    num_users: int
    processing_gain: int
    noise_power: float
    channel_gains: np.ndarray
    target_sirs: np.ndarray
    receiver: ReceiverKind

    def __post_init__(self):
        if self.num_users < 1:
            raise ConfigError(f"num_users must be >= 1, got {self.num_users}")
        if self.processing_gain < 1:
            raise ConfigError(f"processing_gain must be >= 1, got {self.processing_gain}")
        if not self.noise_power > 0:
            raise ConfigError(f"noise_power must be positive, got {self.noise_power}")
        gains = np.asarray(self.channel_gains, dtype=float).copy()
        targets = np.asarray(self.target_sirs, dtype=float).copy()
        if gains.shape != (self.num_users,):
            raise ConfigError(
                f"channel_gains must have shape ({self.num_users},), got {gains.shape}")
        if targets.shape != (self.num_users,):
            raise ConfigError(
                f"target_sirs must have shape ({self.num_users},), got {targets.shape}")
        if not np.all(gains > 0):
            raise ConfigError("all channel gains must be positive")
        if not np.all(targets > 0):
            raise ConfigError("all target SIRs must be positive")
        gains.flags.writeable = False
        targets.flags.writeable = False
        object.__setattr__(self, "channel_gains", gains)
        object.__setattr__(self, "target_sirs", targets)
        if not isinstance(self.receiver, ReceiverKind):
            raise ConfigError(f"receiver must be a ReceiverKind, got {self.receiver!r}")

    @property
    def alpha(self) -> float:
        """System load K/N."""
        return self.num_users / self.processing_gain


def channel_gain(distance_m: float, path_loss_constant: float = 0.1,
                 path_loss_exponent: float = 4.0) -> float:
    """Distance-based power gain ``constant * d**(-exponent)``."""
    if not distance_m > 0:
        raise ValueError(f"distance must be positive, got {distance_m}")
    return path_loss_constant * distance_m ** (-path_loss_exponent)


def snr_from_power(powers, scenario: Scenario) -> np.ndarray:
    """Received SNR per user, Gamma_k = p_k h_k / sigma^2."""
    p = np.asarray(powers, dtype=float)
    if p.shape != (scenario.num_users,):
        raise ValueError(
            f"power vector must have shape ({scenario.num_users},), got {p.shape}")
    if np.any(p < 0):
        raise ValueError("powers must be nonnegative")
    return p * scenario.channel_gains / scenario.noise_power


_TOP_LEVEL_KEYS = {
    "num_users", "processing_gain", "noise_power_watts", "target_sir_linear",
    "receiver", "gains", "distance_model",
}
_DISTANCE_KEYS = {"base_m", "step_m", "constant", "exponent"}


def _as_int(value, name: str) -> int:
    if isinstance(value, bool) or int(value) != value:
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    return int(value)


def build_scenario(config: dict) -> Scenario:
    """Build a validated Scenario from a configuration mapping.

    The schema (also in docs/scenario.schema.json): integer ``num_users`` and
    ``processing_gain``, positive ``noise_power_watts``, ``target_sir_linear``
    as a scalar or length-K array, ``receiver`` in {"mf","de","mmse","io"},
    and exactly one of ``gains`` (length-K array) or ``distance_model`` with
    keys base_m, step_m, constant, exponent (user k sits at base_m + k*step_m
    meters, k = 1..K).
    """
    if not isinstance(config, dict):
        raise ConfigError(f"configuration must be a mapping, got {type(config).__name__}")
    unknown = set(config) - _TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    missing = {"num_users", "processing_gain", "noise_power_watts",
               "target_sir_linear", "receiver"} - set(config)
    if missing:
        raise ConfigError(f"missing configuration keys: {sorted(missing)}")

    num_users = _as_int(config["num_users"], "num_users")
    processing_gain = _as_int(config["processing_gain"], "processing_gain")
    if num_users < 1:
        raise ConfigError(f"num_users must be >= 1, got {num_users}")
    if processing_gain < 1:
        raise ConfigError(f"processing_gain must be >= 1, got {processing_gain}")

    noise_power = float(config["noise_power_watts"])
    if not noise_power > 0:
        raise ConfigError(f"noise_power_watts must be positive, got {noise_power}")

    target = config["target_sir_linear"]
    if np.isscalar(target):
        targets = np.full(num_users, float(target))
    else:
        targets = np.asarray(target, dtype=float)
        if targets.shape != (num_users,):
            raise ConfigError(
                f"target_sir_linear must be a scalar or length-{num_users} array")

    receiver_name = str(config["receiver"]).lower()
    try:
        receiver = ReceiverKind(receiver_name)
    except ValueError:
        raise ConfigError(
            f"receiver must be one of {[r.value for r in ReceiverKind]}, "
            f"got {config['receiver']!r}") from None

    has_gains = "gains" in config
    has_model = "distance_model" in config
    if has_gains == has_model:
        raise ConfigError("exactly one of 'gains' or 'distance_model' is required")
    if has_gains:
        gains = np.asarray(config["gains"], dtype=float)
        if gains.shape != (num_users,):
            raise ConfigError(f"gains must be a length-{num_users} array")
    else:
        model = config["distance_model"]
        if not isinstance(model, dict) or set(model) != _DISTANCE_KEYS:
            raise ConfigError(
                f"distance_model must have exactly the keys {sorted(_DISTANCE_KEYS)}")
        base = float(model["base_m"])
        step = float(model["step_m"])
        distances = base + step * np.arange(1, num_users + 1, dtype=float)
        if np.any(distances <= 0):
            raise ConfigError("distance_model produces non-positive distances")
        gains = np.array([
            channel_gain(d, float(model["constant"]), float(model["exponent"]))
            for d in distances
        ])

    return Scenario(num_users=num_users, processing_gain=processing_gain,
                    noise_power=noise_power, channel_gains=gains,
                    target_sirs=targets, receiver=receiver)


def scenario_config(scenario: Scenario) -> dict:
    """Serialize a Scenario back to a configuration mapping (round-trips)."""
    return {
        "num_users": scenario.num_users,
        "processing_gain": scenario.processing_gain,
        "noise_power_watts": scenario.noise_power,
        "target_sir_linear": [float(x) for x in scenario.target_sirs],
        "receiver": scenario.receiver.value,
        "gains": [float(x) for x in scenario.channel_gains],
    }


def load_scenario(path) -> Scenario:
    """Read a JSON configuration file and build the Scenario."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            config = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"configuration file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"configuration file {path} is not valid JSON: {exc}") from None
    return build_scenario(config)
