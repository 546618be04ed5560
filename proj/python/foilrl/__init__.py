"""Airfoil shape optimization with PPO, transfer learning and a PSO baseline."""

from ._core import (
    NUM_PARAMS,
    Checkpoint,
    Env,
    FoilrlError,
    InvalidParams,
    default_config,
    evaluate,
    fit_cst,
    fit_file,
    geometry,
    max_thickness,
    naca4,
    pso,
    solve,
    time_reduction,
    train,
)

__all__ = [
    "NUM_PARAMS",
    "Checkpoint",
    "Env",
    "FoilrlError",
    "InvalidParams",
    "default_config",
    "evaluate",
    "fit_cst",
    "fit_file",
    "geometry",
    "max_thickness",
    "naca4",
    "pso",
    "solve",
    "time_reduction",
    "train",
]
