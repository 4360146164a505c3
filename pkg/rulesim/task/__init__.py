from typing import Dict, Type

from ..util import ConfigurationError
from .batch import TrialBatch
from .task import TaskSpec, epoch_steps
from .context import ContextIntegrationTask, gen_context_task
from .reach import ReachTask, gen_reach_task
from .average import trial_average

TASKS: Dict[str, Type[TaskSpec]] = {
    task.kind: task for task in [ContextIntegrationTask, ReachTask]
}


def make_task(config_dict: Dict) -> TaskSpec:
    config_dict = dict(config_dict or {})
    kind = config_dict.pop("kind", ReachTask.kind)
    if kind not in TASKS:
        raise ConfigurationError(f"unknown task kind {kind!r}, choose from {sorted(TASKS)}")
    return TASKS[kind].from_config_dict(config_dict)
