from pathlib import Path
from typing import Any, Mapping, Optional

import hydra
import numpy as np
import pandas as pd
from omegaconf import DictConfig, OmegaConf

from src.errors import ConfigError, DomainError
from src.exponents import ProblemParams, phi_infinity
from src.mesh import RadialMesh, uniform_annulus, uniform_ball
from src.parabolic import ConstantBoundary, ParabolicState, SweepSchedule, sampled_state
from src.radial_ode import integrate_regular
from src.supersolution import build_z_lambda
from src.utils import pylogger

log = pylogger.ContextLogger(__name__)


def _plain(cfg: Any) -> Mapping[str, Any]:
    if cfg is None:
        return {}
    if isinstance(cfg, DictConfig):
        return OmegaConf.to_container(cfg, resolve=True)
    return dict(cfg)


def instantiate_problem(cfg: Any) -> ProblemParams:
    """Builds ProblemParams from a config with ``dim`` (or ``N``) and ``p``."""
    cfg = _plain(cfg)
    N = cfg.get("dim", cfg.get("N"))
    if N is None or "p" not in cfg:
        raise ConfigError("problem config needs `dim` and `p`")
    return ProblemParams(N=int(N), p=float(cfg["p"]))


def instantiate_mesh(mesh_cfg: Any, N: int) -> RadialMesh:
    """Instantiates a mesh from config.

    A config with ``_target_`` is handed to Hydra with the dimension filled in; otherwise ``R``,
    ``nodes`` and an optional ``inner`` radius select a uniform ball or annulus.

    :param mesh_cfg: A DictConfig (or mapping) with the mesh settings.
    :param N: The space dimension.
    :return: The instantiated mesh.
    """
    if isinstance(mesh_cfg, DictConfig) and "_target_" in mesh_cfg:
        log.info(f"Instantiating mesh <{mesh_cfg._target_}>")
        return hydra.utils.instantiate(mesh_cfg, N=N)
    cfg = _plain(mesh_cfg)
    try:
        R, nodes = float(cfg["R"]), int(cfg["nodes"])
    except KeyError as ex:
        raise ConfigError(f"mesh config lacks {ex}") from ex
    inner = float(cfg.get("inner") or 0.0)
    return uniform_annulus(N, inner, R, nodes) if inner > 0.0 else uniform_ball(N, R, nodes)


def instantiate_schedule(schedule_cfg: Any) -> SweepSchedule:
    """Instantiates a sweep schedule, by Hydra ``_target_`` or as a geometric schedule."""
    if isinstance(schedule_cfg, DictConfig) and "_target_" in schedule_cfg:
        log.info(f"Instantiating schedule <{schedule_cfg._target_}>")
        return hydra.utils.instantiate(schedule_cfg)
    cfg = _plain(schedule_cfg)
    try:
        return SweepSchedule.geometric(
            float(cfg["lam_start"]), float(cfg["lam_end"]), int(cfg["count"]), float(cfg["horizon"])
        )
    except KeyError as ex:
        raise ConfigError(f"schedule config lacks {ex}") from ex


def _initial_values(params: ProblemParams, mesh: RadialMesh, cfg: Mapping[str, Any]):
    kind = cfg.get("kind", "zero")
    nodes = mesh.nodes
    if kind == "zero":
        return np.zeros(mesh.size)
    if kind == "barrier_fraction":
        z = np.asarray(build_z_lambda(params, float(cfg.get("lam", 1.0)))(nodes))
        cap = cfg.get("cap")
        if cap is not None:
            z = np.minimum(z, float(cap))
        return float(cfg.get("fraction", 1.0)) * z
    if kind == "profile_multiple":
        profile = integrate_regular(params, mesh.R)
        return float(cfg.get("factor", 1.0)) * np.asarray(profile(nodes))
    if kind == "singular":
        if mesh.is_ball:
            raise DomainError("singular initial data need an annulus mesh")
        return float(cfg.get("fraction", 1.0)) * phi_infinity(params, nodes)
    if kind == "csv":
        path = cfg.get("path")
        if not path:
            raise ConfigError("csv initial data need a `path`")
        try:
            frame = pd.read_csv(Path(path))
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as ex:
            raise ConfigError(f"cannot read initial data {path}: {ex}") from ex
        if not {"r", "u"} <= set(frame.columns):
            raise ConfigError(f"{path} must have columns r and u")
        try:
            frame = frame.sort_values("r")
            r, u = frame["r"].to_numpy(float), frame["u"].to_numpy(float)
        except (TypeError, ValueError) as ex:
            raise ConfigError(f"{path} holds non-numeric r or u values") from ex
        if r.size == 0 or not (np.all(np.isfinite(r)) and np.all(np.isfinite(u))):
            raise ConfigError(f"{path} needs finite r and u values")
        if r[0] > nodes[0] or r[-1] < nodes[-1]:
            raise DomainError(f"{path} covers [{r[0]}, {r[-1]}], the mesh needs [{nodes[0]}, {nodes[-1]}]")
        return np.interp(nodes, r, u)
    raise ConfigError(f"unknown initial kind {kind!r}")


def _boundaries(params: ProblemParams, mesh: RadialMesh, cfg: Mapping[str, Any]):
    kind = cfg.get("kind", "zero")
    ends = (mesh.inner, mesh.R)
    if kind == "zero":
        values = (0.0, 0.0)
    elif kind == "constant":
        values = (float(cfg.get("value", 0.0)),) * 2
    elif kind == "barrier":
        z = build_z_lambda(params, float(cfg.get("lam", 1.0)))
        values = tuple(float(cfg.get("fraction", 1.0)) * float(z(r)) for r in ends)
    elif kind == "singular":
        if mesh.is_ball:
            raise DomainError("singular boundary data need an annulus mesh")
        values = tuple(float(cfg.get("fraction", 1.0)) * float(phi_infinity(params, r)) for r in ends)
    elif kind == "schedule":
        raise ConfigError("the `schedule` boundary belongs to sweeps")
    else:
        raise ConfigError(f"unknown boundary kind {kind!r}")
    inner = None if mesh.is_ball else ConstantBoundary(values[0])
    return ConstantBoundary(values[1]), inner


def instantiate_state(
    params: ProblemParams,
    mesh: RadialMesh,
    initial_cfg: Any,
    boundary_cfg: Optional[Any] = None,
    reaction: bool = True,
) -> ParabolicState:
    """Samples the configured initial data on ``mesh`` and attaches constant Dirichlet data.

    Initial kinds: zero, barrier_fraction (fraction * min(z_λ, cap)), profile_multiple (factor * Φ),
    singular (fraction * φ∞, annulus only) and csv (columns r, u, interpolated onto the nodes).
    Boundary kinds: zero, constant, barrier (fraction * z_λ at the mesh ends) and singular.
    """
    initial_cfg, boundary_cfg = _plain(initial_cfg), _plain(boundary_cfg)
    values = _initial_values(params, mesh, initial_cfg)
    boundary, inner = _boundaries(params, mesh, boundary_cfg)
    log.info(f"Instantiating state <initial={initial_cfg.get('kind', 'zero')}, boundary={boundary_cfg.get('kind', 'zero')}>")
    return sampled_state(
        params,
        mesh,
        lambda _: values,
        boundary=boundary,
        inner_boundary=inner,
        reaction=reaction,
    )
