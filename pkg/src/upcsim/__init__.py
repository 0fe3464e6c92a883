"""Large-system power control simulator for CDMA multiuser detectors.

Implements the unified power-control iteration driven by large-system
multiuser efficiency (matched filter, decorrelator, MMSE, and
individually-optimal receivers), exact finite-size SIR oracles on random
spreading matrices, the measured-SIR baseline update, and the statistical
approximations of the SIR deviation around the target.
"""

from .analysis import (DeltaBand, EmpiricalCdf, MonteCarloReport, Table1Cell,
                       de_sir_pdf, default_trials, empirical_cdf,
                       mmse_sir_variance_c, monte_carlo_p_delta, p_delta_de,
                       p_delta_mmse, sir_samples, steady_state_snr, table1)
from .cli import ExperimentSpec, TableData, emit, main, run_experiment
from .efficiency import (DEFAULT_SETTINGS, FixedPointSettings, efficiency_de,
                         efficiency_io, efficiency_mf, efficiency_mmse,
                         efficiency_mmse_equal_power, receiver_efficiency,
                         solve_scalar_fixed_point)
from .errors import (ConfigError, InfeasibleLoadError, SingularGramError,
                     SolverError, UpcsimError)
from .finite import (GRAM_CONDITION_LIMIT, RngSpec, ber_from_sir,
                     random_spreading, sir_based_update, sir_de, sir_mf,
                     sir_mmse)
from .scenario import (ReceiverKind, Scenario, build_scenario, channel_gain,
                       load_scenario, scenario_config, snr_from_power)
from .upc import (DEFAULT_UPC_SETTINGS, PropertyReport, PropertyViolation,
                  UpcSettings, UpcStep, UpcTrace, check_standard_interference,
                  feasibility, interference_map, upc_run)

__version__ = "0.1.0"
