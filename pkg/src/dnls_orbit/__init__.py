"""Orbital stability of derivative-NLS solitons via the Backlund transformation."""
from .field import Grid, GridField, MatrixField, VectorField, l2_norm, read_field, write_field
from .soliton import SolitonParams, SpectralParam, soliton_family, soliton_field
from .evolve import EvolverConfig, conserved, evolve, evolve_to
from .lax import zero_curvature_residual
from .spectral import EigenResult, evans_function, find_eigenvalue
from .backlund import bt_down, bt_forward, bt_up, match_coefficients, predict_modulation
from .jost import JostSolution, jost_evolve, jost_initial
from .harness import (ExperimentConfig, StabilityRecord, load_config, orbital_distance,
                      run_pipeline, sweep)

__all__ = [
    "Grid", "GridField", "VectorField", "MatrixField", "l2_norm", "read_field", "write_field",
    "SpectralParam", "SolitonParams", "soliton_field", "soliton_family",
    "EvolverConfig", "evolve", "evolve_to", "conserved", "zero_curvature_residual",
    "EigenResult", "evans_function", "find_eigenvalue",
    "bt_forward", "bt_down", "bt_up", "match_coefficients", "predict_modulation",
    "JostSolution", "jost_initial", "jost_evolve",
    "ExperimentConfig", "StabilityRecord", "load_config", "orbital_distance",
    "run_pipeline", "sweep",
]
