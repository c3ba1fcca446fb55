"""Pure-Python branching-particle engine (reference implementation).

This is the executable definition of the simulation protocol.  The compiled
engine in ``_core.pyx`` must reproduce it bit for bit; the equivalence test
drives both on the same seeds and compares every recorded array exactly.

Protocol (one replicate, replicate key R = replicate_key(master, r)):

* Initialization.  n0 ~ Poisson(2 L N) from stream substream(R, TAG_INIT, 0);
  root i in 0..n0-1 starts at (c - L) + 2L * uniform53(P, i) with P =
  substream(R, TAG_INIT, 1), carries particle id pid = i and mass 1/N.
* Streams.  Particle pid draws motion from substream(R, TAG_PARTICLE, 2 pid)
  and branching decisions from substream(R, TAG_PARTICLE, 2 pid + 1).
  Offspring allocate pid = n0 + birth_counter in birth order, so the second
  offspring's streams are keyed by the cumulative birth-event counter; the
  first offspring is the parent continuing its own streams.
* Step j (state at time j dt -> (j+1) dt).  Every branching particle moves
  by sqrt(dt) * standard_normal(motion_key, j << STEP_STRIDE_SHIFT), in
  array order; the baseline copies of the roots move with the identical
  draws and never branch.  Then, sweeping the array in order, a particle at
  post-move position x with |x - c| < eps draws u = uniform53(branch_key, j)
  once: u < q/2 is a birth (parent survives, one offspring appended after
  the sweep at the parent position), q/2 <= u < q is a death.  Dead
  particles are removed by stable compaction, then offspring are appended
  in event order.
* Accumulators (updated on the post-step state): occupation densities by
  trapezoid over window counts, martingale compensators by left Riemann
  sums, realized quadratic variation by summed squared increments.

All floating-point update expressions are written in the exact same
operand order in both engines, and the compiled engine is built with FMA
contraction disabled, so agreement is exact, not approximate.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ExplosionError
from .. import rng

__all__ = ["run_replicate_python"]


def _eval_function(offsets, coeffs, degrees, centers, factors, fi, x):
    """f_i(x) summed over its terms; Horner then Gaussian factor."""
    total = 0.0
    for term in range(offsets[fi], offsets[fi + 1]):
        deg = degrees[term]
        acc = coeffs[term][deg]
        for k in range(deg - 1, -1, -1):
            acc = acc * x + coeffs[term][k]
        dx = x - centers[term]
        total += acc * math.exp(dx * dx * factors[term])
    return total


def run_replicate_python(
    master_seed,
    replicate_index,
    c,
    big_l,
    n_per_unit,
    dt,
    sqrt_dt,
    eps,
    eps_occ,
    q,
    q_half,
    n_steps,
    record_steps,
    pair_pack,
    mart_pack,
    occ_z,
    cap_factor,
    store_snapshots,
    record_events,
):
    """Run one replicate; returns a dict of recorded arrays.

    All scalar floats (q, q_half, sqrt_dt, ...) are precomputed by the
    caller so both engines receive identical bits.
    """
    rep_key = rng.replicate_key(master_seed, replicate_index)
    init_key = rng.substream(rep_key, rng.TAG_INIT, 0)
    pos_key = rng.substream(rep_key, rng.TAG_INIT, 1)

    n0 = rng.poisson(init_key, 2.0 * big_l * n_per_unit)
    cap = int(cap_factor * n0) + 16
    if n0 > cap:
        raise ExplosionError(f"initial population {n0} already exceeds cap {cap}")

    lo = c - big_l
    pos = []
    motion_keys = []
    branch_keys = []
    for i in range(n0):
        pos.append(lo + 2.0 * big_l * rng.uniform53(pos_key, i))
        motion_keys.append(rng.substream(rep_key, rng.TAG_PARTICLE, 2 * i))
        branch_keys.append(rng.substream(rep_key, rng.TAG_PARTICLE, 2 * i + 1))
    base_pos = list(pos)
    base_keys = list(motion_keys)

    n_pair = len(pair_pack[0]) - 1
    n_mart = (len(mart_pack[0]) - 1) // 2
    n_z = len(occ_z)
    n_rec = len(record_steps)

    out_pair_branch = np.zeros((n_rec, n_pair))
    out_pair_base = np.zeros((n_rec, n_pair))
    out_occ = np.zeros((n_rec, n_z))
    out_maxdev = np.zeros((n_rec, n_z))
    out_mart_m = np.zeros((n_rec, n_mart))
    out_mart_qv = np.zeros((n_rec, n_mart))
    out_events = np.zeros(n_rec, dtype=np.int64)
    out_births = np.zeros(n_rec, dtype=np.int64)
    out_deaths = np.zeros(n_rec, dtype=np.int64)
    out_alive = np.zeros(n_rec, dtype=np.int64)
    snapshots = [] if store_snapshots else None
    event_log = [] if record_events else None

    # occupation state
    occ_denom = [n_per_unit * 2.0 * eps_occ] * n_z
    occ_y = [0.0] * n_z
    occ_maxdev = [0.0] * n_z
    occ_prev = [0.0] * n_z
    half_dt = 0.5 * dt

    def window_density(z, denom):
        count = 0
        for x in pos:
            if abs(x - z) < eps_occ:
                count += 1
        return count / denom

    for zi in range(n_z):
        occ_prev[zi] = window_density(occ_z[zi], occ_denom[zi])

    # martingale state
    def pairing(pack, fi, positions):
        acc = 0.0
        offsets, coeffs, degrees, centers, factors = pack
        for x in positions:
            acc += _eval_function(offsets, coeffs, degrees, centers, factors, fi, x)
        return acc / n_per_unit

    mart_pf = [pairing(mart_pack, 2 * mi, pos) for mi in range(n_mart)]
    mart_paf = [pairing(mart_pack, 2 * mi + 1, pos) for mi in range(n_mart)]
    mart_m = [0.0] * n_mart
    mart_qv = [0.0] * n_mart

    births = 0
    deaths = 0

    rec_i = 0

    def record(step_time):
        nonlocal rec_i
        for fi in range(n_pair):
            out_pair_branch[rec_i, fi] = pairing(pair_pack, fi, pos)
            out_pair_base[rec_i, fi] = pairing(pair_pack, fi, base_pos)
        for zi in range(n_z):
            out_occ[rec_i, zi] = occ_y[zi]
            out_maxdev[rec_i, zi] = occ_maxdev[zi]
        for mi in range(n_mart):
            out_mart_m[rec_i, mi] = mart_m[mi]
            out_mart_qv[rec_i, mi] = mart_qv[mi]
        out_events[rec_i] = births + deaths
        out_births[rec_i] = births
        out_deaths[rec_i] = deaths
        out_alive[rec_i] = len(pos)
        if store_snapshots:
            snapshots.append(
                (np.array(pos, dtype=float), np.array(base_pos, dtype=float))
            )
        rec_i += 1

    if record_steps[0] == 0:
        record(0.0)

    shift = rng.STEP_STRIDE_SHIFT
    for j in range(n_steps):
        # motion: branching system, then baseline, each in array order
        for i in range(len(pos)):
            z = rng.standard_normal(motion_keys[i], j << shift)
            pos[i] = pos[i] + sqrt_dt * z
        for i in range(n0):
            z = rng.standard_normal(base_keys[i], j << shift)
            base_pos[i] = base_pos[i] + sqrt_dt * z

        # branching sweep on post-move positions
        dead = set()
        offspring = []  # (position, pid) in event order
        for i in range(len(pos)):
            if abs(pos[i] - c) < eps:
                u = rng.uniform53(branch_keys[i], j)
                if u < q:
                    if u < q_half:
                        pid = n0 + births
                        births += 1
                        offspring.append((pos[i], pid))
                        if record_events:
                            event_log.append((j, pos[i], 1))
                    else:
                        deaths += 1
                        dead.add(i)
                        if record_events:
                            event_log.append((j, pos[i], -1))
        if dead:
            keep = [i for i in range(len(pos)) if i not in dead]
            pos = [pos[i] for i in keep]
            motion_keys = [motion_keys[i] for i in keep]
            branch_keys = [branch_keys[i] for i in keep]
        for x, pid in offspring:
            pos.append(x)
            motion_keys.append(rng.substream(rep_key, rng.TAG_PARTICLE, 2 * pid))
            branch_keys.append(rng.substream(rep_key, rng.TAG_PARTICLE, 2 * pid + 1))

        if len(pos) > cap:
            raise ExplosionError(
                f"population {len(pos)} exceeded cap {cap} at step {j}"
            )

        # occupation trapezoid on the post-step state
        for zi in range(n_z):
            d = window_density(occ_z[zi], occ_denom[zi])
            occ_y[zi] = occ_y[zi] + half_dt * (occ_prev[zi] + d)
            occ_prev[zi] = d
            dev = abs(occ_y[zi] - (j + 1) * dt)
            if dev > occ_maxdev[zi]:
                occ_maxdev[zi] = dev

        # martingale increments on the post-step state
        for mi in range(n_mart):
            pf_new = pairing(mart_pack, 2 * mi, pos)
            paf_new = pairing(mart_pack, 2 * mi + 1, pos)
            dm = pf_new - mart_pf[mi] - dt * mart_paf[mi]
            mart_m[mi] = mart_m[mi] + dm
            mart_qv[mi] = mart_qv[mi] + dm * dm
            mart_pf[mi] = pf_new
            mart_paf[mi] = paf_new

        if rec_i < n_rec and record_steps[rec_i] == j + 1:
            record((j + 1) * dt)

    return {
        "n_initial": n0,
        "pair_branch": out_pair_branch,
        "pair_base": out_pair_base,
        "occupation": out_occ,
        "occupation_maxdev": out_maxdev,
        "mart_m": out_mart_m,
        "mart_qv": out_mart_qv,
        "events": out_events,
        "births": out_births,
        "deaths": out_deaths,
        "alive": out_alive,
        "snapshots": snapshots,
        "event_log": (
            np.asarray(event_log, dtype=float).reshape(-1, 3)
            if record_events
            else None
        ),
    }
