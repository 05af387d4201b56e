"""Python access to the ra_lab C++ core."""

import json as _json

from ._core import *  # noqa: F401,F403
from ._core import config_defaults as _config_defaults


def defaults():
    """Flat default configuration as a dict."""
    return _json.loads(_config_defaults())
