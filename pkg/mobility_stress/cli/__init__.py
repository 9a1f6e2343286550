from .config import PipelineConfig, dump_config, load_config
from .pipeline import PipelineResult, run_pipeline

__all__ = [
    "PipelineConfig",
    "PipelineResult",
    "dump_config",
    "load_config",
    "run_pipeline",
]
