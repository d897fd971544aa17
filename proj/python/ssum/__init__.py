from ._ssum import *  # noqa: F401,F403
from ._ssum import SsumError, ConfigError  # noqa: F401
