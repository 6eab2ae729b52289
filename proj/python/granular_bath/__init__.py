"""Granular gas in a thermal bath: particle simulation, kernel checks and spectral gaps."""

from ._core import (
    ContractViolation,
    InputError,
    IoError,
    NumericalError,
    gamma_alpha_p,
    gap_lower_bound,
    kernel_k,
    l1_distance,
    moments,
    run_experiment,
    sample_initial,
    sigma,
    simulate,
    spectral_gap,
    steps,
    tail_order,
    theta_sharp,
)

__all__ = [
    "ContractViolation",
    "InputError",
    "IoError",
    "NumericalError",
    "gamma_alpha_p",
    "gap_lower_bound",
    "kernel_k",
    "l1_distance",
    "moments",
    "run_experiment",
    "sample_initial",
    "sigma",
    "simulate",
    "spectral_gap",
    "steps",
    "tail_order",
    "theta_sharp",
]
