from pathlib import Path
from typing import Any, Mapping, Sequence

import rich
import rich.syntax
import rich.table
import rich.tree
from omegaconf import DictConfig, OmegaConf

from src.utils import pylogger

log = pylogger.ContextLogger(__name__)

GROUP_ORDER = ("problem", "mesh", "initial", "boundary", "schedule", "paths", "extras")


def print_config_tree(
    cfg: DictConfig,
    print_order: Sequence[str] = GROUP_ORDER,
    resolve: bool = False,
    save_to_file: bool = False,
) -> None:
    """Renders a composed run config as a Rich tree, one branch per config group.

    Groups named in `print_order` come first; the remaining top-level keys follow in config order.

    :param cfg: A DictConfig composed by Hydra.
    :param print_order: Groups rendered first. Default is the problem -> extras order of ``GROUP_ORDER``.
    :param resolve: Whether to resolve interpolations before rendering. Default is ``False``.
    :param save_to_file: Whether to also write the tree to ``config_tree.log`` in the run's output dir.
    """
    missing = [group for group in print_order if group not in cfg]
    if missing:
        log.debug(f"Groups absent from this run config: {', '.join(missing)}")
    ordered = [group for group in print_order if group in cfg]
    ordered += [key for key in cfg if key not in ordered]

    tree = rich.tree.Tree("CONFIG", style="dim", guide_style="dim")
    for key in ordered:
        node = cfg[key]
        text = OmegaConf.to_yaml(node, resolve=resolve) if isinstance(node, DictConfig) else str(node)
        tree.add(key, style="dim", guide_style="dim").add(rich.syntax.Syntax(text, "yaml"))

    rich.print(tree)
    if save_to_file:
        with open(Path(cfg.paths.output_dir, "config_tree.log"), "w") as file:
            rich.print(tree, file=file)


def print_metrics(metric_dict: Mapping[str, Any], title: str = "run summary") -> None:
    """Prints the scalar outcome of a run as a two-column Rich table.

    :param metric_dict: Metric name to value.
    :param title: Table caption.
    """
    table = rich.table.Table(title=title, show_header=False)
    table.add_column("metric", style="bold")
    table.add_column("value", justify="right")
    for name, value in metric_dict.items():
        table.add_row(name, f"{value:.6g}" if isinstance(value, float) else str(value))
    rich.print(table)
