import logging
import sys

from pythonjsonlogger import jsonlogger

LOG_FIELDS = "%(asctime)s %(levelname)s %(name)s %(message)s %(module)s %(funcName)s %(lineno)d"


def configure_logging(level: str = "INFO") -> None:
    """Install the JSON stderr handler on the root logger.

    Called once by the CLI. Library modules only ever create module loggers.
    """
    formatter = jsonlogger.JsonFormatter(
        LOG_FIELDS,
        rename_fields={"asctime": "timestamp", "levelname": "level"},
    )
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(formatter)

    root_logger = logging.getLogger()
    for existing in list(root_logger.handlers):
        root_logger.removeHandler(existing)
    root_logger.addHandler(handler)
    root_logger.setLevel(level.upper())
