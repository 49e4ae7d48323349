"""Finite realizations of coarse L2-cohomology computations."""

import json
from pathlib import Path

from ._core import Error, __version__
from . import _core

__all__ = ["Error", "__version__", "run_scenario", "run_file", "coboundary", "harmonic", "sweep"]


def _dump(obj):
    return "" if obj is None else json.dumps(obj)


def run_scenario(scenario, base_dir=".", jobs=1, cache_dir=None, tuple_cap=None):
    """Run a scenario dict. Returns (report, exit_code, diagnostics)."""
    out = json.loads(_core.run_scenario_json(json.dumps(scenario), str(base_dir), jobs,
                                             None if cache_dir is None else str(cache_dir), tuple_cap))
    return out["report"], out["exit_code"], out["diagnostics"]


def run_file(path, **kwargs):
    path = Path(path)
    return run_scenario(json.loads(path.read_text()), base_dir=path.parent, **kwargs)


def coboundary(group, degree, scale, window=None):
    """COO triplets of the coboundary d^degree at the given scale."""
    return _core.coboundary_coo(json.dumps(group), _dump(window), degree, scale)


def harmonic(group, degree, scale, window=None, tolerance=1e-8):
    return _core.harmonic(json.dumps(group), _dump(window), degree, scale, tolerance)


def sweep(group, degree, scale, radii):
    return _core.sweep(json.dumps(group), degree, scale, list(radii))
