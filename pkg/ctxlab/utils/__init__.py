from .logger import console_handler
from .logging_config import setup_run_logging
from .workers import WorkerPool

__all__ = ["console_handler", "setup_run_logging", "WorkerPool"]
