"""Fuzzy (Takagi-Sugeno) diagnostics for network traffic anomalies."""
from .fuzzy import (InferenceResult, LinguisticVariable, RuleBase, TNorm, TriangularMF, TSRule,
                    ZeroActivation, evaluate, firing_strength, membership, rule_output)
from .rulebook import (ActionLevel, ModuleKind, action_from_severity, build_rulebase,
                       default_intensity_variable, default_time_variable, load_rulebase, save_rulebase)

__version__ = "0.1.0"
