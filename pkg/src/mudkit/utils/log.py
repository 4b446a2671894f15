"""Console logging in the ``[LEVEL] message`` style used across mudkit."""
import logging
import sys

_FORMAT = "[%(levelname)s] %(message)s"
_ROOT = "mudkit"


def get_logger(name: str) -> logging.Logger:
    """Return a logger under the package namespace."""
    short = name.split("mudkit.", 1)[-1] if "mudkit." in name else name
    return logging.getLogger(f"{_ROOT}.{short}")


def configure_logging(verbose: bool = False) -> None:
    """Send package logs to stderr; stdout is reserved for CSV output."""
    logger = logging.getLogger(_ROOT)
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    for handler in logger.handlers:
        if getattr(handler, "_mudkit", False):
            # sys.stderr may have been swapped since the last call
            handler.setStream(sys.stderr)
            return
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(_FORMAT))
    handler._mudkit = True
    logger.addHandler(handler)
