"""Built-in experiment configurations.

Each preset pins a (scale function, domain, experiment) triple with grids
sized so the default run finishes in minutes on one core.  Presets whose
scale function is a pure power take the exponent as a parameter.
"""

from __future__ import annotations

from .config import ExperimentConfig
from .errors import ConfigError
from .geometry import Domain
from .scalefn import ScaleFunction


def stable_ball_d2(alpha: float = 1.0) -> ExperimentConfig:
    """Killed-kernel boundary decay in the unit disc."""
    return ExperimentConfig(
        experiment="verify-dhke",
        phi=ScaleFunction.power(alpha),
        domain=Domain.ball((0.0, 0.0), 1.0),
        t_grid=(0.5,),
        x_grid=((0.0, 0.0),),
        depths=(0.64, 0.32, 0.16, 0.08),
        n_paths=400_000,
    )


def stable_halfspace_d1(alpha: float = 1.0) -> ExperimentConfig:
    """Survival probability versus starting depth over a flat wall."""
    return ExperimentConfig(
        experiment="verify-survival",
        phi=ScaleFunction.power(alpha),
        domain=Domain.half_space(1),
        t_grid=(1.0,),
        depths=(0.01, 0.04, 0.16, 0.64),
        n_paths=20_000,
    )


def powerlog_ball_d2() -> ExperimentConfig:
    """Principal eigenvalue fit in the disc for a log-perturbed exponent."""
    return ExperimentConfig(
        experiment="fit-eigenvalue",
        phi=ScaleFunction.power_log(1.0, 0.5),
        domain=Domain.ball((0.0, 0.0), 1.0),
        t_grid=(0.15, 0.19, 0.23, 0.27, 0.31, 0.35),
        x_grid=((0.0, 0.0), (0.3, 0.0), (0.0, -0.5)),
        n_paths=20_000,
    )


def stable_free_d2(alpha: float = 1.0) -> ExperimentConfig:
    """Whole-space kernel versus the Fourier oracle on a 5x5 target grid."""
    ys = tuple((float(a), float(b))
               for a in (-2.0, -1.0, 0.0, 1.0, 2.0)
               for b in (-2.0, -1.0, 0.0, 1.0, 2.0))
    return ExperimentConfig(
        experiment="verify-free-kernel",
        phi=ScaleFunction.power(alpha),
        domain=Domain.full_space(2),
        t_grid=(1.0,),
        x_grid=((0.0, 0.0),),
        y_grid=ys,
        n_paths=200_000,
        ratio_ceiling=1.5,
        box_halfwidth=0.25,
    )


def stable_ball_d1_exit(alpha: float = 1.0) -> ExperimentConfig:
    """Mean exit time of an interval from three starting points."""
    return ExperimentConfig(
        experiment="verify-exit",
        phi=ScaleFunction.power(alpha),
        domain=Domain.ball((0.0,), 1.0),
        x_grid=((0.0,), (0.5,), (0.75,)),
        n_paths=20_000,
    )


def stable_ball_d1_green(alpha: float = 1.0) -> ExperimentConfig:
    """Occupation density of an interval against the closed-form shape."""
    return ExperimentConfig(
        experiment="verify-green",
        phi=ScaleFunction.power(alpha),
        domain=Domain.ball((0.0,), 1.0),
        x_grid=((0.0,),),
        y_grid=((0.6,), (0.8,), (0.9,), (0.95,)),
        n_paths=60_000,
    )


def halfspace_dgamma() -> ExperimentConfig:
    """Corner-path clearance at level 1 over a flat wall."""
    return ExperimentConfig(
        experiment="check-dgamma",
        phi=ScaleFunction.power(1.0),
        domain=Domain.half_space(2),
        gamma=1.0,
        n_paths=1000,
    )


def ball_dgamma() -> ExperimentConfig:
    """Corner-path clearance at level 1/2 in the disc."""
    return ExperimentConfig(
        experiment="check-dgamma",
        phi=ScaleFunction.power(1.0),
        domain=Domain.ball((0.0, 0.0), 1.0),
        gamma=0.5,
        n_paths=1000,
    )


def stable_generator(alpha: float = 1.0) -> ExperimentConfig:
    """Principal-value generator on the boundary-harmonic power profile."""
    return ExperimentConfig(
        experiment="generator-identity",
        phi=ScaleFunction.power(alpha),
        domain=Domain.half_space(1),
        x_grid=((0.1,), (0.3,), (1.0,), (3.0,), (10.0,)),
        n_paths=100,
    )


def powerlog_validate() -> ExperimentConfig:
    """Weak-scaling certification of a log-perturbed exponent."""
    return ExperimentConfig(
        experiment="validate-scalefn",
        phi=ScaleFunction.power_log(1.0, 0.5),
        domain=Domain.full_space(1),
        n_paths=100,
    )


PRESETS = {
    "stable-ball-d2": stable_ball_d2,
    "stable-halfspace-d1": stable_halfspace_d1,
    "powerlog-ball-d2": powerlog_ball_d2,
    "stable-free-d2": stable_free_d2,
    "stable-ball-d1-exit": stable_ball_d1_exit,
    "stable-ball-d1-green": stable_ball_d1_green,
    "halfspace-dgamma": halfspace_dgamma,
    "ball-dgamma": ball_dgamma,
    "stable-generator": stable_generator,
    "powerlog-validate": powerlog_validate,
}


def preset_names() -> tuple[str, ...]:
    return tuple(PRESETS)


def get_preset(name: str, **params) -> ExperimentConfig:
    try:
        builder = PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None
    try:
        return builder(**params)
    except TypeError as e:
        raise ConfigError(f"preset {name}: {e}") from e


def describe_presets() -> list[tuple[str, str, str]]:
    """(name, experiment, one-line description) rows for the catalog."""
    rows = []
    for name, builder in PRESETS.items():
        cfg = builder()
        rows.append((name, cfg.experiment, (builder.__doc__ or "").strip()))
    return rows
