"""Nonlinear Born series and inverse Born series on the unit disk."""

import json as _json

from ._core import *  # noqa: F401,F403
from ._core import (
    config_defaults as _config_defaults,
    config_hash as _config_hash,
    run_bounds as _run_bounds,
    run_forward as _run_forward,
    run_reconstruct as _run_reconstruct,
)


def default_config():
    """Default experiment configuration as a dict."""
    return _json.loads(_config_defaults())


def config_hash(config):
    return _config_hash(_json.dumps(config))


def run_forward(config):
    """Forward run; returns (data, bounds, exit_code) and writes the run directory."""
    return _run_forward(_json.dumps(config))


def run_reconstruct(config, data_dir=None):
    return _run_reconstruct(_json.dumps(config), None if data_dir is None else str(data_dir))


def run_bounds(config, data_dir=None):
    return _run_bounds(_json.dumps(config), None if data_dir is None else str(data_dir))
