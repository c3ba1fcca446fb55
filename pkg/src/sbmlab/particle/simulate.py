"""Replicate orchestration and observable extraction for the particle engine.

simulate() fans replicates out to a thread pool (the compiled engine
releases the GIL); results land in replicate-indexed slots, so the output is
a pure function of (seed, params) regardless of thread count.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError
from ..kernels import ModelParams, TestFunction, lebesgue_pairing
from .. import rng
from . import get_engine, backend_name
from .params import Observables, SimParams, branch_probability, pack_functions

__all__ = [
    "PathSample",
    "Snapshot",
    "TrajectoryRecord",
    "SimulationResult",
    "simulate",
    "pair_with",
    "occupation_density",
    "fluctuation_observable",
    "martingale_path",
]


@dataclass
class PathSample:
    """Time-gridded scalar observable with replicate and seed provenance."""

    times: np.ndarray
    values: np.ndarray
    observable_id: str
    replicate_id: int
    seed_used: int

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise ContractError("times and values must align")
        if np.any(np.diff(self.times) <= 0.0):
            raise ContractError("times must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ContractError("values must be finite")


@dataclass
class Snapshot:
    """Branching-system and coupled-baseline positions at one record time."""

    time: float
    positions: np.ndarray
    baseline_positions: np.ndarray
    mass: float


@dataclass
class TrajectoryRecord:
    """Per-replicate record: snapshots plus dt-resolution accumulators."""

    replicate_id: int
    seed_used: int
    record_times: np.ndarray
    n_initial: int
    mass: float
    pair_branch: np.ndarray
    pair_base: np.ndarray
    occupation: np.ndarray
    occupation_maxdev: np.ndarray
    mart_m: np.ndarray
    mart_qv: np.ndarray
    events: np.ndarray
    births: np.ndarray
    deaths: np.ndarray
    alive: np.ndarray
    snapshots: list | None
    event_log: np.ndarray | None
    pair_ids: list = field(default_factory=list)
    occupation_points: list = field(default_factory=list)
    martingale_ids: list = field(default_factory=list)
    model: ModelParams | None = None

    def snapshot_at(self, t: float) -> Snapshot:
        if self.snapshots is None:
            raise ContractError("snapshots were not stored for this run")
        idx = int(np.argmin(np.abs(self.record_times - t)))
        if abs(self.record_times[idx] - t) > 1e-9:
            raise ContractError(f"no snapshot at t={t}")
        branch, base = self.snapshots[idx]
        return Snapshot(float(self.record_times[idx]), branch, base, self.mass)


@dataclass
class SimulationResult:
    params: SimParams
    model: ModelParams
    observables: Observables
    replicates: list
    backend: str
    wall_time: float


def _function_id(f: TestFunction) -> str:
    return f.to_json()


def simulate(
    params: SimParams, model: ModelParams, observables: Observables | None = None
) -> SimulationResult:
    """Run the branching-particle approximation with its coupled baseline.

    Initial state: Poisson(2 L N) particles uniform on [c-L, c+L], mass 1/N
    each, approximating Lebesgue measure restricted to the window.  Motion
    is exact Brownian stepping; branching is critical binary inside the
    mollified catalyst window with per-step probability
    q = N (sigma^2/k^2) dt / (2 eps).
    """
    observables = observables or Observables()
    observables.require_occupation_at(model.c)
    params.validate_against(model, observables)

    engine, engine_name = get_engine(params.backend)
    pair_pack = pack_functions(observables.pair_functions)
    mart_functions = []
    for f, af in zip(observables.martingale_functions, observables.martingale_generators):
        mart_functions.extend([f, af])
    mart_pack = pack_functions(mart_functions)
    occ_z = np.asarray(observables.occupation_points, dtype=float)
    record_steps = params.record_steps()
    record_times = record_steps * params.dt

    q = branch_probability(params, model)
    args = dict(
        master_seed=params.seed,
        c=model.c,
        big_l=params.window_halfwidth,
        n_per_unit=params.particles_per_unit,
        dt=params.dt,
        sqrt_dt=math.sqrt(params.dt),
        eps=params.eps,
        eps_occ=params.eps_occ,
        q=q,
        q_half=0.5 * q,
        n_steps=params.n_steps,
        record_steps=record_steps,
        pair_pack=pair_pack,
        mart_pack=mart_pack,
        occ_z=occ_z,
        cap_factor=params.population_cap_factor,
        store_snapshots=params.store_snapshots,
        record_events=params.record_events,
    )

    t0 = time.perf_counter()
    slots = [None] * params.replicates

    def run_one(r):
        slots[r] = engine(replicate_index=r, **args)

    if params.threads > 1 and params.replicates > 1:
        with ThreadPoolExecutor(max_workers=params.threads) as pool:
            list(pool.map(run_one, range(params.replicates)))
    else:
        for r in range(params.replicates):
            run_one(r)
    wall = time.perf_counter() - t0

    pair_ids = [_function_id(f) for f in observables.pair_functions]
    mart_ids = [_function_id(f) for f in observables.martingale_functions]
    records = []
    for r, raw in enumerate(slots):
        snapshots = raw["snapshots"]
        records.append(
            TrajectoryRecord(
                replicate_id=r,
                seed_used=rng.replicate_key(params.seed, r),
                record_times=record_times,
                n_initial=raw["n_initial"],
                mass=params.mass,
                pair_branch=raw["pair_branch"],
                pair_base=raw["pair_base"],
                occupation=raw["occupation"],
                occupation_maxdev=raw["occupation_maxdev"],
                mart_m=raw["mart_m"],
                mart_qv=raw["mart_qv"],
                events=raw["events"],
                births=raw["births"],
                deaths=raw["deaths"],
                alive=raw["alive"],
                snapshots=snapshots,
                event_log=raw["event_log"],
                pair_ids=pair_ids,
                occupation_points=list(observables.occupation_points),
                martingale_ids=mart_ids,
                model=model,
            )
        )
    return SimulationResult(params, model, observables, records, engine_name, wall)


# ---------------------------------------------------------------------------
# Observable operations
# ---------------------------------------------------------------------------


def pair_with(snapshot: Snapshot, f: TestFunction) -> float:
    """<X, f> = mass * sum f(x_i) over the snapshot's particles."""
    if len(snapshot.positions) == 0:
        return 0.0
    return snapshot.mass * float(np.sum(f(snapshot.positions)))


def _require_index(haystack, needle, what):
    try:
        return haystack.index(needle)
    except ValueError:
        raise ContractError(f"{what} was not registered with the simulation") from None


def occupation_density(traj: TrajectoryRecord, z: float) -> PathSample:
    """Occupation-density path y_t(z) accumulated at dt resolution."""
    zi = _require_index([float(p) for p in traj.occupation_points], float(z),
                        f"occupation point z={z}")
    return PathSample(
        times=traj.record_times,
        values=traj.occupation[:, zi],
        observable_id=f"occupation@z={z:g}",
        replicate_id=traj.replicate_id,
        seed_used=traj.seed_used,
    )


def fluctuation_observable(
    traj: TrajectoryRecord, f: TestFunction, k: int, raw: bool = False
) -> PathSample:
    """Centered fluctuation pairing k (<X_t, f> - baseline).

    The default estimator subtracts the coupled non-branching baseline,
    cancelling initial-sampling and root-motion noise exactly; raw=True
    subtracts <lambda, f> instead (validation mode, far noisier).
    """
    fi = _require_index(traj.pair_ids, _function_id(f), "pair function")
    if raw:
        centered = traj.pair_branch[:, fi] - lebesgue_pairing(f)
    else:
        centered = traj.pair_branch[:, fi] - traj.pair_base[:, fi]
    return PathSample(
        times=traj.record_times,
        values=float(k) * centered,
        observable_id=("raw" if raw else "coupled") + f"-fluctuation:k={k}",
        replicate_id=traj.replicate_id,
        seed_used=traj.seed_used,
    )


@dataclass
class MartingalePath:
    """Martingale path with realized and predicted quadratic variation."""

    m: PathSample
    realized_qv: PathSample
    predicted_qv: PathSample


def martingale_path(traj: TrajectoryRecord, f: TestFunction) -> MartingalePath:
    """M_t(f) = <X_t,f> - <X_0,f> - int_0^t <X_s, Af> ds and its QV.

    The compensator Riemann sum and the realized quadratic variation
    sum((dM)^2) are accumulated inside the engine at dt resolution; the
    predicted quadratic variation is (sigma^2/k^2) f(c)^2 y_t(c) from the
    replicate's own occupation clock.
    """
    mi = _require_index(traj.martingale_ids, _function_id(f), "martingale function")
    model = traj.model
    zi = _require_index(
        [float(p) for p in traj.occupation_points], float(model.c),
        "occupation point at the catalyst",
    )
    fc = float(f(model.c))
    predicted = model.sigma2_eff * fc * fc * traj.occupation[:, zi]
    common = dict(replicate_id=traj.replicate_id, seed_used=traj.seed_used)
    return MartingalePath(
        m=PathSample(traj.record_times, traj.mart_m[:, mi],
                     "martingale", **common),
        realized_qv=PathSample(traj.record_times, traj.mart_qv[:, mi],
                               "realized-qv", **common),
        predicted_qv=PathSample(traj.record_times, predicted,
                                "predicted-qv", **common),
    )
