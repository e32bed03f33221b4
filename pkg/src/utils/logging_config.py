import os
import logging
import logging.handlers
from pathlib import Path

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_FILE = "moment_lab.log"


def setup_logging(log_dir: str = "logs") -> Path:
    """Console (stderr) plus a midnight-rotated file; returns the log file path.

    LOG_LEVEL sets the level and LAB_LOG_DIR moves the file. numpy RuntimeWarnings
    (overflow, invalid values) are routed through the `py.warnings` logger so they
    land in the file next to the experiment that raised them.
    """
    log_path = Path(os.getenv("LAB_LOG_DIR", log_dir))
    log_path.mkdir(parents=True, exist_ok=True)
    level = getattr(logging, os.getenv("LOG_LEVEL", "INFO").upper(), logging.INFO)
    formatter = logging.Formatter(LOG_FORMAT)

    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)
        handler.close()

    # stderr, so stdout stays machine-readable
    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    log_file = log_path / LOG_FILE
    file_handler = logging.handlers.TimedRotatingFileHandler(
        filename=log_file,
        when="midnight",
        interval=1,
        backupCount=7,
        encoding="utf-8",
    )
    file_handler.setLevel(level)
    file_handler.setFormatter(formatter)
    root_logger.addHandler(file_handler)

    logging.captureWarnings(True)
    logging.getLogger("asyncio").setLevel(logging.WARNING)

    logging.info(f"Logging initialized at {logging.getLevelName(level)} level, file {log_file}")
    return log_file
