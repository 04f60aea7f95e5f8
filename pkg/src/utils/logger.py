import logging
import sys
from datetime import datetime
from pathlib import Path

from ..config import settings

PACKAGE_LOGGER = "src"

_CONSOLE_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
_FILE_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s"


def _configure_package_logger() -> logging.Logger:
    """Handlers live on the package logger only; module loggers propagate to it"""
    root = logging.getLogger(PACKAGE_LOGGER)
    if root.handlers:
        return root
    root.setLevel(logging.DEBUG)
    root.propagate = False

    # stderr keeps stdout free for data
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(getattr(logging, settings.log_level.upper()))
    console_handler.setFormatter(logging.Formatter(_CONSOLE_FORMAT, datefmt="%Y-%m-%d %H:%M:%S"))
    root.addHandler(console_handler)

    # RABI_LOG_DIR= (empty) disables the daily log file
    if settings.log_dir:
        log_dir = Path(settings.log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)
        log_file = log_dir / f"rabi_lab_{datetime.now().strftime('%Y%m%d')}.log"
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(logging.Formatter(_FILE_FORMAT, datefmt="%Y-%m-%d %H:%M:%S"))
        root.addHandler(file_handler)
    return root


def setup_logger(name: str) -> logging.Logger:
    """
    Logger for a module of the lab

    Args:
        name: module __name__; names outside the package get their own child

    Returns:
        Logger whose records reach the console and the daily log file
    """
    _configure_package_logger()
    if name != PACKAGE_LOGGER and not name.startswith(f"{PACKAGE_LOGGER}."):
        name = f"{PACKAGE_LOGGER}.{name}"
    return logging.getLogger(name)
