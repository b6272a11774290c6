"""Python access to the kinfrac numerical core."""

import json as _json

from ._core import *  # noqa: F401,F403
from ._core import RESULTS_HEADER, run_sweep as _run_sweep

RESULTS_COLUMNS = tuple(RESULTS_HEADER.split(","))


def sweep(config=None, out=None):
    """Run a sigma sweep; `config` is a dict with the CLI's configuration schema."""
    return _run_sweep(_json.dumps(config or {}), None if out is None else str(out))
