import contextlib
import time
import warnings
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np
from omegaconf import DictConfig

from src.errors import ConfigError, Error, ValidationError
from src.utils import pylogger, rich_utils
from src.utils.io_utils import write_json

log = pylogger.ContextLogger(__name__)


def extras(cfg: DictConfig) -> None:
    """Applies the optional run utilities of ``cfg.extras`` before the task starts.

    Utilities:
        - Ignoring python warnings
        - Choosing how numpy reports floating point overflow and invalid values
        - Rich config printing

    :param cfg: A DictConfig object containing the config tree.
    """
    if not cfg.get("extras"):
        log.warning("Extras config not found! <cfg.extras=null>")
        return

    if cfg.extras.get("ignore_warnings"):
        log.info("Disabling python warnings! <cfg.extras.ignore_warnings=True>")
        warnings.filterwarnings("ignore")

    float_errors = cfg.extras.get("float_errors")
    if float_errors:
        # blow-up detection relies on the sup-norm ceiling, not on overflow warnings
        np.seterr(over=float_errors, invalid=float_errors)
        log.info(f"numpy floating point errors set to '{float_errors}'")

    if cfg.extras.get("print_config"):
        log.info("Printing config tree with Rich! <cfg.extras.print_config=True>")
        rich_utils.print_config_tree(cfg, resolve=True, save_to_file=True)


def task_wrapper(task_func: Callable) -> Callable:
    """Decorates a Hydra task so that failures leave a machine readable trace in the run folder.

    On a lab error the wrapper writes ``failure.json`` (error class, family and message) next to
    the run's other outputs before re-raising. The output dir is logged either way, so failed
    members of a multirun can be found.

    :param task_func: The task function to be wrapped, returning ``(metric_dict, object_dict)``.
    :return: The wrapped task function.
    """

    def wrap(cfg: DictConfig) -> Tuple[Dict[str, Any], Dict[str, Any]]:
        try:
            return task_func(cfg=cfg)
        except Error as ex:
            family = "validation" if isinstance(ex, ValidationError) else "numerical"
            log.exception(f"{type(ex).__name__} ({family})")
            write_json(
                Path(cfg.paths.output_dir) / "failure.json",
                {"error": type(ex).__name__, "family": family, "message": str(ex)},
            )
            raise
        except Exception:
            log.exception("")
            raise
        finally:
            log.info(f"Output dir: {cfg.paths.output_dir}")

    return wrap


def metric_value(metric_dict: Dict[str, Any], metric_name: Optional[str]) -> Optional[float]:
    """Returns the metric a Hydra multirun optimizes over, as a float.

    Boolean outcomes (``blew_up``, ``completed``) come back as 0.0 or 1.0.

    :param metric_dict: Metrics reported by the task.
    :param metric_name: The ``optimized_metric`` of the config, or ``None``.
    :return: The value, or ``None`` when no metric is named.
    """
    if not metric_name:
        return None
    if metric_name not in metric_dict:
        raise ConfigError(f"optimized_metric '{metric_name}' is not reported; available: {sorted(metric_dict)}")
    value = float(metric_dict[metric_name])
    log.info(f"{metric_name}={value:g}")
    return value


@contextlib.contextmanager
def timing(msg: str):
    log.info("Started %s", msg)
    tic = time.perf_counter()
    yield
    toc = time.perf_counter()
    log.info("Finished %s in %.3f seconds", msg, toc - tic)
