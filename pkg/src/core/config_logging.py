import copy
import logging.config
from typing import Optional

LOGGING_CONFIG = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "default": {
            "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        },
        "detailed": {
            "format": "%(asctime)s - %(name)s - %(levelname)s - %(module)s:%(lineno)d - %(message)s",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "default",
            "level": "INFO",
            "stream": "ext://sys.stderr",
        },
    },
    "loggers": {
        "src": {
            "handlers": ["console"],
            "level": "DEBUG",
            "propagate": False,
        }
    },
    "root": {
        "handlers": ["console"],
        "level": "WARNING",
    },
}

FILE_HANDLER = {
    "class": "logging.handlers.RotatingFileHandler",
    "formatter": "detailed",
    "maxBytes": 1024 * 1024 * 5,
    "backupCount": 2,
    "level": "DEBUG",
}


def build_logging_config(
    level: str = "INFO", quiet: bool = False, log_file: Optional[str] = None
) -> dict:
    config = copy.deepcopy(LOGGING_CONFIG)
    config["handlers"]["console"]["level"] = "WARNING" if quiet else level.upper()
    if log_file:
        config["handlers"]["file"] = {**FILE_HANDLER, "filename": log_file}
        config["loggers"]["src"]["handlers"].append("file")
        config["root"]["handlers"].append("file")
    return config


def setup_logging(
    level: str = "INFO", quiet: bool = False, log_file: Optional[str] = None
) -> None:
    logging.config.dictConfig(build_logging_config(level, quiet, log_file))
