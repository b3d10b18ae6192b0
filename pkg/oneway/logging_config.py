"""
Logging configuration for oneway.

Log records go to stderr; stdout is reserved for reports.
"""

import logging
import sys

LOG_FORMATS = {
    "simple": "%(levelname)s: %(message)s",
    "detailed": (
        "%(asctime)s - %(name)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s"
    ),
    "json": (
        '{"timestamp": "%(asctime)s", "logger": "%(name)s", '
        '"level": "%(levelname)s", "file": "%(filename)s", '
        '"line": %(lineno)d, "message": "%(message)s"}'
    ),
}

# numpy and hypothesis only matter when something goes wrong.
_QUIET = ("numpy", "hypothesis")


def setup_logging(level: str = "INFO", format_style: str = "simple") -> None:
    """
    Set up logging for the oneway package.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        format_style: One of LOG_FORMATS ('simple', 'detailed', 'json')
    """
    numeric_level = getattr(logging, level.upper(), logging.INFO)
    log_format = LOG_FORMATS.get(format_style, LOG_FORMATS["simple"])

    logging.basicConfig(
        level=numeric_level,
        format=log_format,
        datefmt="%Y-%m-%d %H:%M:%S",
        stream=sys.stderr,
        force=True,
    )
    logging.getLogger("oneway").setLevel(numeric_level)

    for name in _QUIET:
        logging.getLogger(name).setLevel(logging.WARNING)
