import logging
from .config import DEBUG, DEBUG_LOG_PATH

_ROOT_NAME = "edge_ann"
_CONFIGURED = False
_FILE_HANDLER = None


def _enable_debug_file(root: logging.Logger) -> None:
    global _FILE_HANDLER
    if _FILE_HANDLER is not None:
        return
    _FILE_HANDLER = logging.FileHandler(DEBUG_LOG_PATH, mode="w")
    _FILE_HANDLER.setLevel(logging.DEBUG)
    _FILE_HANDLER.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s %(message)s"))
    root.addHandler(_FILE_HANDLER)
    root.setLevel(logging.DEBUG)


def get_logger(name=_ROOT_NAME, debug: bool = None):
    """Return a logger under the package logger, configuring handlers once.

    The package logger writes warnings to stderr and, when debug is on, every
    record to edge_ann_debug.log. Passing debug=True later (the CLI's --debug)
    adds the file handler to an already configured logger.
    """
    global _CONFIGURED
    if debug is None:
        debug = DEBUG

    root = logging.getLogger(_ROOT_NAME)

    if not _CONFIGURED:
        root.setLevel(logging.INFO)

        # Avoid adding duplicate handlers in interactive runs
        if not root.handlers:
            ch = logging.StreamHandler()
            ch.setLevel(logging.WARNING)
            ch.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
            root.addHandler(ch)
        _CONFIGURED = True

    if debug:
        _enable_debug_file(root)

    if name == _ROOT_NAME or name.startswith(_ROOT_NAME + "."):
        return logging.getLogger(name)
    return root.getChild(name)
