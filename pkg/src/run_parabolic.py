from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import hydra
import rootutils
from omegaconf import DictConfig

rootutils.setup_root(__file__, indicator=".project-root", pythonpath=True)
# ------------------------------------------------------------------------------------ #
# the setup_root above is equivalent to:
# - adding project root dir to PYTHONPATH
#       (so you don't need to force user to install project as a package)
#       (necessary before importing any local modules e.g. `from src import utils`)
# - setting up PROJECT_ROOT environment variable
#       (which is used as a base for paths in "configs/paths/default.yaml")
#       (this way all filepaths are the same no matter where you run the code)
# - loading environment variables from ".env" in root dir
# ------------------------------------------------------------------------------------ #
from src.parabolic import evolve, sweep
from src.utils.instantiators import instantiate_mesh, instantiate_problem, instantiate_schedule, instantiate_state
from src.utils.io_utils import write_csv, write_json
from src.utils.logging_utils import log_run_parameters
from src.utils.pylogger import ContextLogger
from src.utils.rich_utils import print_metrics
from src.utils.utils import extras, metric_value, task_wrapper, timing

log = ContextLogger(__name__)


@task_wrapper
def run(cfg: DictConfig) -> Tuple[Dict[str, Any], Dict[str, Any]]:
    """Runs an evolution or a sweep described by a composed config and saves its outputs.

    This method is wrapped in optional @task_wrapper decorator, that controls the behavior during
    failure. Useful for multiruns, saving info about the crash, etc.

    :param cfg: A DictConfig configuration composed by Hydra.
    :return: A tuple with metrics and dict with all instantiated objects.
    """
    params = instantiate_problem(cfg.problem)
    mesh = instantiate_mesh(cfg.mesh, params.N)
    reaction = bool(cfg.problem.get("reaction", True))
    output_dir = Path(cfg.paths.output_dir)

    object_dict: Dict[str, Any] = {"cfg": cfg, "params": params, "mesh": mesh}

    if cfg.task == "evolve":
        state = instantiate_state(params, mesh, cfg.initial, cfg.boundary, reaction=reaction)
        hparams = log_run_parameters(object_dict)
        with timing(f"evolution over horizon {cfg.horizon}"):
            trajectory = evolve(
                state,
                cfg.horizon,
                dt=cfg.get("dt", "auto"),
                checkpoints=cfg.checkpoints,
                ceiling=cfg.ceiling,
                progress=cfg.get("progress"),
            )
        report = trajectory.to_json()
        metric_dict = {
            "final_sup": float(trajectory.sup_norms[-1]) if trajectory.sup_norms.size else float("nan"),
            "blew_up": trajectory.blew_up,
        }
    elif cfg.task == "sweep":
        state = instantiate_state(params, mesh, cfg.initial, reaction=reaction)
        schedule = instantiate_schedule(cfg.schedule)
        object_dict["schedule"] = schedule
        hparams = log_run_parameters(object_dict)
        with timing(f"sweep over {schedule.lambdas.size} checkpoints"):
            sweep_report = sweep(state, schedule, boundary=cfg.boundary.kind, progress=cfg.get("progress"))
        trajectory = sweep_report.trajectory
        report = sweep_report.to_json()
        metric_dict = {
            "final_sup": sweep_report.final_sup,
            "completed": sweep_report.completed,
            "sup_ratio": sweep_report.final_sup / sweep_report.initial_sup if sweep_report.initial_sup else 0.0,
        }
        if not sweep_report.completed:
            log.warning(f"sweep stopped: {sweep_report.first_failure}")
    else:
        raise ValueError(f"Unknown task <cfg.task={cfg.task}>! Use `evolve` or `sweep`.")

    object_dict["trajectory"] = trajectory
    write_csv(output_dir / "trajectory.csv", trajectory.to_frame())
    write_json(output_dir / "report.json", report)
    write_json(output_dir / "parameters.json", hparams)

    return metric_dict, object_dict


@hydra.main(version_base="1.3", config_path="../configs", config_name="evolve.yaml")
def main(cfg: DictConfig) -> Optional[float]:
    """Main entry point for evolutions and sweeps.

    :param cfg: DictConfig configuration composed by Hydra.
    :return: Optional[float] with optimized metric value.
    """
    # apply extra utilities (warnings, numpy float errors, config tree)
    extras(cfg)

    metric_dict, _ = run(cfg)
    if cfg.extras.get("print_metrics"):
        print_metrics(metric_dict, title=f"{cfg.task_name} N={cfg.problem.dim} p={cfg.problem.p}")

    # the value hydra-based multiruns optimize over
    return metric_value(metric_dict, cfg.get("optimized_metric"))


if __name__ == "__main__":
    main()
