from src.utils.pylogger import ContextLogger
from src.utils.rich_utils import print_config_tree, print_metrics
from src.utils.utils import extras, metric_value, task_wrapper, timing
