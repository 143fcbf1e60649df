"""Experiment protocol: catalogs, evaluation, the suite runner and plot-data export.

The suite and export modules are imported on demand (``pourskill.harness.suite``)
because they depend on the GSSP module, which itself samples tasks from here.
"""
from .catalog import DEFAULT_CATALOG, ContainerCatalog, generate_practice_tasks, task_band
from .config import SuiteConfig, load_config
from .evaluate import Evaluation, ExperimentReport, evaluate, evaluate_tasks, seed_stream

__all__ = [
    "DEFAULT_CATALOG",
    "ContainerCatalog",
    "Evaluation",
    "ExperimentReport",
    "SuiteConfig",
    "evaluate",
    "evaluate_tasks",
    "generate_practice_tasks",
    "load_config",
    "seed_stream",
    "task_band",
]
