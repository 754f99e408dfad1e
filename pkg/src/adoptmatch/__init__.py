"""Equilibrium solver for family-driven vs caseworker-driven adoption search."""

from .model import Agent, Instance, MatchingCorrespondence, Regime, StrategyProfile, matching_correspondence, validate_instance
from .utilities import UtilityVector, WelfareReport, better_count, beta, utilities, welfare
from .strategies import BestResponse, ThresholdProfile, best_response, induce_cs_profile, induce_fs_profile, induce_profile, is_equilibrium
from .equilibrium import EquilibriumResult, Side, solve_equilibrium, t_map
from .gen import generate_instance, paper_instance

__version__ = "0.1.0"
