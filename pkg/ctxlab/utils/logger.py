import logging
import sys
from typing import Literal

from colorama import Fore, Style

CONSOLE_FORMAT = "%(levelprefix)s [%(asctime)s] %(component)s: %(message)s"


def console_handler(level: int = logging.INFO) -> logging.StreamHandler:
    """A stderr handler with coloured level names."""
    handler = logging.StreamHandler()
    handler.setLevel(level)
    handler.setFormatter(DefaultFormatter(CONSOLE_FORMAT, datefmt="%H:%M:%S"))
    return handler


class ColourizedFormatter(logging.Formatter):
    """
    Console formatter for ctxlab runs.

    * ``%(levelprefix)s`` is the level name and a colon, coloured on a
      terminal and padded to a fixed width.
    * ``%(component)s`` is the logger name without the ``ctxlab.`` prefix,
      e.g. ``lm.trainer``.
    """

    level_name_colors = {
        logging.DEBUG: Fore.CYAN,
        logging.INFO: Fore.GREEN,
        logging.WARNING: Fore.YELLOW,
        logging.ERROR: Fore.RED,
        logging.CRITICAL: Fore.LIGHTRED_EX,
    }
    prefix_width = 9

    def __init__(
        self,
        fmt: str | None = None,
        datefmt: str | None = None,
        style: Literal["%", "{", "$"] = "%",
        use_colors: bool | None = None,
    ):
        self.use_colors = use_colors if use_colors is not None else self.should_use_colors()
        super().__init__(fmt=fmt, datefmt=datefmt, style=style)

    def color_level_name(self, level_name: str, level_no: int) -> str:
        color = self.level_name_colors.get(level_no)
        if color is None:
            return level_name
        return f"{color}{level_name}{Style.RESET_ALL}"

    def should_use_colors(self) -> bool:
        return sys.stdout.isatty()

    def formatMessage(self, record: logging.LogRecord) -> str:
        padding = " " * max(0, self.prefix_width - len(record.levelname) - 1)
        name = self.color_level_name(record.levelname, record.levelno) if self.use_colors else record.levelname
        record.levelprefix = f"{name}:{padding}"
        record.component = record.name.removeprefix("ctxlab.")
        return super().formatMessage(record)


class DefaultFormatter(ColourizedFormatter):
    def should_use_colors(self) -> bool:
        return sys.stderr.isatty()
