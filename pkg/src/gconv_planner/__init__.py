"""Cost modeling and group-size planning for grouped convolution."""

from .blueprints import BlueprintId, generate, variant_table
from .calibration import CalibrationError, EnergyProxyRegressor, FitReport, MeasurementRecord, calibrate
from .core import CostBreakdown, Diagnostic, LayerSpec, NetworkSpec, ValidationError, layer_cost, network_cost, validate
from .planner import (
    EnergyModelParams,
    GroupingStrategy,
    balanced_groups,
    constant_G_derivation,
    energy_proxy,
    network_energy,
    plan,
    round_to_valid,
)

__all__ = [
    "BlueprintId", "CalibrationError", "CostBreakdown", "Diagnostic", "EnergyModelParams",
    "EnergyProxyRegressor", "FitReport", "GroupingStrategy", "LayerSpec", "MeasurementRecord",
    "NetworkSpec", "ValidationError", "balanced_groups", "calibrate", "constant_G_derivation",
    "energy_proxy", "generate", "layer_cost", "network_cost", "network_energy", "plan",
    "round_to_valid", "validate", "variant_table",
]
