import numpy as np
import pytest

from upcsim import ReceiverKind, Scenario, build_scenario

# Reference configuration used across the suite: 8 users, spreading factor 32,
# noise 1.6e-14 W, common target SIR 6.4, distance-model gains 0.1 * d^-4 with
# d_k = 100 + 10k meters.
REFERENCE_CONFIG = {
    "num_users": 8,
    "processing_gain": 32,
    "noise_power_watts": 1.6e-14,
    "target_sir_linear": 6.4,
    "receiver": "de",
    "distance_model": {"base_m": 100.0, "step_m": 10.0, "constant": 0.1,
                       "exponent": 4.0},
}


def reference_scenario(receiver: str = "de") -> Scenario:
    config = dict(REFERENCE_CONFIG)
    config["receiver"] = receiver
    return build_scenario(config)


def flat_scenario(num_users: int, processing_gain: int, gamma_star: float,
                  receiver: ReceiverKind, noise_power: float = 1.0) -> Scenario:
    """Unit-gain scenario; received SNR equals transmit power / noise."""
    return Scenario(num_users=num_users, processing_gain=processing_gain,
                    noise_power=noise_power, channel_gains=np.ones(num_users),
                    target_sirs=np.full(num_users, gamma_star), receiver=receiver)


@pytest.fixture
def reference_config_file(tmp_path):
    import json

    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(REFERENCE_CONFIG))
    return path
