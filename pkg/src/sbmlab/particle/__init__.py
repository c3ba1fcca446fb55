"""Branching-particle engine with compiled core and pure-Python fallback.

The compiled extension implements the hot per-step loop; if it is missing
(source checkout without a build step) the pure-Python reference engine
takes over.  Both implement the identical protocol documented in
:mod:`sbmlab.particle.reference` and produce bit-identical trajectories, so
the fallback differs only in speed (see benchmarks/bench_engine.py).
"""

from .reference import run_replicate_python

try:
    from ._core import run_replicate_compiled

    _HAVE_COMPILED = True
except ImportError:
    run_replicate_compiled = None
    _HAVE_COMPILED = False

from ..errors import ConfigError


def backend_name() -> str:
    """Name of the engine selected by default."""
    return "compiled" if _HAVE_COMPILED else "python"


def get_engine(requested: str = "auto"):
    """Resolve an engine callable; returns (callable, name)."""
    if requested == "auto":
        requested = backend_name()
    if requested == "compiled":
        if not _HAVE_COMPILED:
            raise ConfigError("compiled engine requested but not built")
        return run_replicate_compiled, "compiled"
    if requested == "python":
        return run_replicate_python, "python"
    raise ConfigError(f"unknown backend {requested!r}")


from .params import Observables, SimParams, branch_probability  # noqa: E402
from .simulate import (  # noqa: E402
    MartingalePath,
    PathSample,
    SimulationResult,
    Snapshot,
    TrajectoryRecord,
    fluctuation_observable,
    martingale_path,
    occupation_density,
    pair_with,
    simulate,
)

__all__ = [
    "Observables",
    "SimParams",
    "branch_probability",
    "backend_name",
    "get_engine",
    "MartingalePath",
    "PathSample",
    "SimulationResult",
    "Snapshot",
    "TrajectoryRecord",
    "fluctuation_observable",
    "martingale_path",
    "occupation_density",
    "pair_with",
    "simulate",
]
