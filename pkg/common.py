import os
import logging
from dotenv import load_dotenv

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class CoatError(Exception):
    """Base class for every error raised by the agreement-tree packages."""


class SchemaError(CoatError):
    pass


class ConsistencyError(CoatError):
    pass


class ParseError(CoatError):
    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class PairingError(CoatError):
    pass


class EstimationError(CoatError):
    pass


class DegenerateError(CoatError):
    pass


class UntestableError(CoatError):
    pass


class ConfigError(CoatError):
    pass


class RoutingError(CoatError):
    pass


# errors a user can fix by changing flags or inputs, as opposed to data
# that cannot be analysed
USAGE_ERRORS = (ConfigError, SchemaError)


def load_env():
    load_dotenv()
    return os.getenv("COAT_LOG_LEVEL", "WARNING")


def configure_logging(level=None):
    level = level or load_env()
    logging.basicConfig(level=level.upper() if isinstance(level, str) else level, format=LOG_FORMAT)
    logging.getLogger("joblib").setLevel(logging.WARNING)
