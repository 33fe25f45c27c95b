import logging
from pathlib import Path

from .logger import console_handler

RUN_LOG = "run.log"


def setup_run_logging(out_dir: str | Path, level: int = logging.INFO):
    """Attach console and file handlers for one run.

    The file handler writes ``run.log`` inside ``out_dir``; metrics are written
    separately and never go through logging.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_file = out_dir / RUN_LOG

    file_handler = logging.FileHandler(log_file)
    file_handler.setLevel(level)
    file_handler.setFormatter(logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s'))

    run_logger = logging.getLogger('ctxlab')
    run_logger.setLevel(level)

    # Remove any existing handlers to avoid duplicates
    for handler in list(run_logger.handlers):
        handler.close()
    run_logger.handlers.clear()

    run_logger.addHandler(file_handler)
    run_logger.addHandler(console_handler(level))

    # Prevent propagation to root logger to avoid duplicate logs
    run_logger.propagate = False

    return str(log_file), run_logger
