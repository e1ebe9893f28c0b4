from typing import Any, Dict

from omegaconf import OmegaConf

from src.utils import pylogger

log = pylogger.ContextLogger(__name__)


def log_run_parameters(object_dict: Dict[str, Any]) -> Dict[str, Any]:
    """Collects the parameters of a run so they can be saved next to its outputs.

    Additionally records:
        - Number of mesh nodes and the smallest spacing
        - The schedule's λ range, for sweeps

    :param object_dict: A dictionary containing the following objects:
        - `"cfg"`: A DictConfig object containing the main config.
        - `"params"`: The ProblemParams of the run.
        - `"mesh"`: The RadialMesh.
        - `"schedule"`: (Optional) The SweepSchedule.
    :return: The collected parameters.
    """
    cfg = OmegaConf.to_container(object_dict["cfg"], resolve=False)
    params = object_dict["params"]
    mesh = object_dict["mesh"]

    hparams: Dict[str, Any] = {
        "problem": {"N": params.N, "p": params.p},
        "mesh/nodes": mesh.size,
        "mesh/R": mesh.R,
        "mesh/inner": mesh.inner,
        "mesh/h_min": mesh.h_min,
    }
    for key in ("initial", "boundary", "horizon", "checkpoints", "ceiling", "task_name", "tags", "seed"):
        hparams[key] = cfg.get(key)

    schedule = object_dict.get("schedule")
    if schedule is not None:
        hparams["schedule/lam_start"] = float(schedule.lambdas[0])
        hparams["schedule/lam_end"] = float(schedule.lambdas[-1])
        hparams["schedule/checkpoints"] = int(schedule.lambdas.size)

    log.info(f"Run parameters: N={params.N}, p={params.p:g}, {mesh.size} nodes on [{mesh.inner:g}, {mesh.R:g}]")
    return hparams
