import copy

import ml_collections as mlc

from src.errors import ConfigError


def enforce_config_constraints(config):
    def string_to_setting(s):
        path = s.split('.')
        setting = config
        for p in path:
            setting = setting.get(p)

        return setting

    # (setting, lower, upper): lower < value <= upper
    bounded_settings = [
        ("radial_ode.rel_tol", 0.0, 1e-3),
        ("radial_ode.abs_tol", 0.0, 1e-3),
        ("emden_fowler.rel_tol", 0.0, 1e-3),
        ("emden_fowler.abs_tol", 0.0, 1e-3),
        ("parabolic.cfl_safety", 0.0, 1.0),
        ("emden_fowler.separatrix_fraction", 0.0, 1.0),
    ]

    for option, lower, upper in bounded_settings:
        value = string_to_setting(option)
        if not lower < value <= upper:
            raise ConfigError(f"{option}={value} must lie in ({lower}, {upper}]")

    if config.radial_ode.startup_radius >= config.radial_ode.log_switch_radius:
        raise ConfigError("radial_ode.startup_radius must be smaller than radial_ode.log_switch_radius")

    if config.emden_fowler.richardson_seed >= config.emden_fowler.seed_distance:
        raise ConfigError("emden_fowler.richardson_seed must be smaller than emden_fowler.seed_distance")

    if config.emden_fowler.decay_window[0] < 1e3 * config.emden_fowler.seed_distance:
        raise ConfigError("emden_fowler.decay_window must start at least 1e3 seed distances above the seed")

    if config.intersections.refine_factor < 2:
        raise ConfigError("intersections.refine_factor must be at least 2")


def lab_config(name="default"):
    c = copy.deepcopy(config)
    if name == "default":
        pass
    elif name == "fast":
        # Looser tolerances for smoke runs; oracles in the test-suite assume "default".
        c.radial_ode.rel_tol = 1e-8
        c.radial_ode.abs_tol = 1e-10
        c.emden_fowler.rel_tol = 1e-10
        c.emden_fowler.abs_tol = 1e-12
        c.intersections.points_per_decade = 2000
        c.parabolic.progress = False
    elif name == "precise":
        c.radial_ode.rel_tol = 1e-12
        c.radial_ode.abs_tol = 1e-14
        c.radial_ode.log_max_step = 0.02
        c.intersections.points_per_decade = 20000
    else:
        raise ConfigError(f"Unknown lab config preset: {name}")

    enforce_config_constraints(c)

    return c


critical_rel_tol = mlc.FieldReference(1e-12, field_type=float)
root_tol = mlc.FieldReference(1e-12, field_type=float)

config = mlc.ConfigDict(
    {
        "exponents": {
            # p is routed to the critical code paths when |p - p_S| <= tol * p_S
            "critical_rel_tol": critical_rel_tol,
        },
        "radial_ode": {
            "rel_tol": 1e-10,
            "abs_tol": 1e-12,
            # series startup on [0, startup_radius]
            "startup_radius": 1e-4,
            # beyond this radius the profile is integrated in cylinder variables
            "log_switch_radius": 1.0,
            "log_max_step": 0.05,
            "grid_points": 2001,
            "error_probe_factor": 10.0,
            "root_tol": root_tol,
            "residual_nodes": 16,
        },
        "intersections": {
            "points_per_decade": 10000,
            "refine_factor": 10,
            "tangency_ratio": 1e-3,
            "transversal_factor": 10.0,
            "origin_offset": 1e-6,
            "root_tol": root_tol,
            "initial_search_radius": 10.0,
            "max_search_radius": 1e6,
        },
        "emden_fowler": {
            "rel_tol": 1e-12,
            "abs_tol": 1e-14,
            # periodic orbits with m < separatrix_fraction * v_star are refused
            "separatrix_fraction": 1e-3,
            "max_half_period": 500.0,
            "newton_polish_steps": 2,
            "samples_per_period": 2000,
            "transform_samples": 20001,
            "seed_distance": 1e-8,
            "richardson_seed": 1e-9,
            "seed_tolerance": 1e-6,
            "heteroclinic_max_horizon": 5000.0,
            # backward horizon in units of the inverse spiral rate at L
            "heteroclinic_efolds": 45.0,
            # the orbit is followed forward for growth / (N-2); the unstable direction gains e^growth on it
            "heteroclinic_forward_growth": 15.0,
            # fitted well above both seeds, so the slope is not the seed direction read back
            "decay_window": (1e-3, 1e-2),
            "critical_rel_tol": critical_rel_tol,
        },
        "supersolution": {
            "continuity_tol": 1e-10,
            "quadrature_nodes": 8,
            "snap_tol": 1e-12,
        },
        "parabolic": {
            "cfl_safety": 0.9,
            "ceiling": 1e6,
            "order_tol": 1e-12,
            "confinement_tol": 1e-10,
            "checkpoints": 11,
            "progress": False,
        },
        "doubling": {
            "triangle_tol": 1e-12,
        },
        "cli": {
            "out_dir_env": "LIOUVILLE_LAB_OUT_DIR",
            "default_out_dir": "outputs",
            "float_format": "%.17g",
        },
    }
)
