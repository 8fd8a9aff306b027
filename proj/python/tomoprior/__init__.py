"""SART reconstruction with clamp, TV and learned generator priors."""

from ._tomoprior import (
    DataError,
    InvalidInput,
    apply_poisson_noise,
    back_project,
    forward_project,
    generator_forward,
    make_generator_file,
    mse,
    psnr,
    random_phantom,
    reconstruct,
    rotate90,
    run_cli,
    scenario_preset,
    shepp_logan,
    simulate_scenario,
    ssim,
    tv_value,
    weights_descriptor,
)

__all__ = [
    "DataError",
    "InvalidInput",
    "apply_poisson_noise",
    "back_project",
    "forward_project",
    "generator_forward",
    "make_generator_file",
    "mse",
    "psnr",
    "random_phantom",
    "reconstruct",
    "rotate90",
    "run_cli",
    "scenario_preset",
    "shepp_logan",
    "simulate_scenario",
    "ssim",
    "tv_value",
    "weights_descriptor",
]
