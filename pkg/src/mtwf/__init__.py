"""Energy-efficient allocation of hybrid bursty services in two-way multi-relay OFDM.

Pipeline: bursty demands become sum-rate constraints (``traffic``), each
subcarrier picks a relay (``relayselect``), a genetic search assigns
subcarriers to services (``assign``) and per-service two-way water filling
sets the rates (``waterfill``). ``baselines`` holds the comparison schemes,
``bench`` the Monte Carlo runner and ``queuesim`` a queue simulator that
checks the bursty-to-Poisson reduction.
"""

from .assign import GaConfig, InfeasibleError, esga_optimize, exhaustive_oracle
from .bench import Scenario, ServiceDemand, run_scenario, run_trial, sweep
from .channel import ChannelRealization, generate
from .relayselect import select_relays
from .traffic import BurstyServiceSpec, DirectionTraffic, InstabilityError, sum_rate_constraint
from .waterfill import allocate_service, mtwf_allocation

__version__ = "0.1.0"

__all__ = [
    "BurstyServiceSpec",
    "ChannelRealization",
    "DirectionTraffic",
    "GaConfig",
    "InfeasibleError",
    "InstabilityError",
    "Scenario",
    "ServiceDemand",
    "allocate_service",
    "esga_optimize",
    "exhaustive_oracle",
    "generate",
    "mtwf_allocation",
    "run_scenario",
    "run_trial",
    "select_relays",
    "sum_rate_constraint",
    "sweep",
]
