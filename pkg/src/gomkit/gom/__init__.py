"""Gesture Operational Model: topology, fitting, likelihood and simulation."""
from .io import dumps, loads, system_from_dict, system_to_dict
from .model import (GomModel, GomSystem, design, fit, fit_equation, hold_model, kalman_loglik,
                    loglik_oracle, one_step_predict, simulate)
from .topology import (DEFAULT_CHAINS, DEFAULT_SENSORS, AssumptionTag, ChainSpec,
                       GomTopology, Limb, build_topology)

__all__ = [
    "AssumptionTag", "ChainSpec", "DEFAULT_CHAINS", "DEFAULT_SENSORS", "GomModel",
    "GomSystem", "GomTopology", "Limb", "build_topology", "design", "dumps", "fit", "fit_equation",
    "hold_model", "kalman_loglik", "loads", "loglik_oracle", "one_step_predict",
    "simulate", "system_from_dict", "system_to_dict",
]
