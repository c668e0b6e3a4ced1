"""Logging setup for dilframe runs: console, a daily-rotated DEBUG file, numerical warnings."""

import logging
from logging.handlers import TimedRotatingFileHandler
from pathlib import Path

from dilframe.config import LoggingConfig

LOG_FILE = "dilframe.log"

# Loggers that receive the run handlers; py.warnings carries numpy/scipy RuntimeWarnings
_TARGETS = ("dilframe", "py.warnings")

# [2026-02-13 10:30:00] [INFO] [MainProcess] [dilframe.frames] message
_FORMAT = "[%(asctime)s] [%(levelname)s] [%(processName)s] [%(name)s] %(message)s"


def prune_logs(log_dir: Path, max_total_bytes: int) -> list[Path]:
    """
    Keep the newest dilframe.log* files that fit in max_total_bytes and delete the rest.

    The newest file always survives, however large. Returns the deleted paths.
    """
    newest_first = sorted(
        log_dir.glob(LOG_FILE + "*"), key=lambda p: p.stat().st_mtime, reverse=True
    )
    kept_bytes = 0
    deleted = []
    for i, path in enumerate(newest_first):
        size = path.stat().st_size
        if i > 0 and kept_bytes + size > max_total_bytes:
            path.unlink()
            deleted.append(path)
        else:
            kept_bytes += size
    return deleted


def _detach(logger: logging.Logger) -> None:
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()


def setup_logging(config: LoggingConfig) -> None:
    """
    Install the run handlers on the dilframe and py.warnings loggers.

    The console shows config.level; the file under config.dir always records DEBUG (each
    Φ evaluation, each CG solve). Python warnings raised by numpy and scipy, such as
    overflow in a quadrature integrand or ARPACK non-convergence, are routed into the same
    handlers. Calling it again replaces the handlers of the previous call.
    """
    log_dir = Path(config.dir)
    log_dir.mkdir(parents=True, exist_ok=True)
    prune_logs(log_dir, config.max_total_mb * 1024 * 1024)

    formatter = logging.Formatter(_FORMAT, datefmt="%Y-%m-%d %H:%M:%S")
    console = logging.StreamHandler()
    console.setLevel(getattr(logging, config.level.upper(), logging.INFO))
    console.setFormatter(formatter)
    file_handler = TimedRotatingFileHandler(
        log_dir / LOG_FILE,
        when="midnight",
        backupCount=config.keep_days,
        encoding="utf-8",
    )
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(formatter)

    logging.captureWarnings(True)
    for name in _TARGETS:
        target = logging.getLogger(name)
        _detach(target)
        target.setLevel(logging.DEBUG)
        target.addHandler(console)
        target.addHandler(file_handler)
