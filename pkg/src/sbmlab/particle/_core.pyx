# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled branching-particle engine.

Implements the protocol documented in sbmlab.particle.reference bit for bit
(see that module's docstring).  Two engine-level optimizations change
nothing observable:

* The coupled baseline shares storage with the branching system: a root
  lineage (original particle continuing through first-offspring branches)
  has exactly the baseline trajectory, because branch events do not displace
  particles and the first offspring continues the parent's motion stream.
  When a root lineage dies its baseline twin keeps diffusing as a "ghost".
  Baseline pairings are reassembled in original root order before summing,
  so the floating-point reduction order matches the reference engine.
* The ziggurat tables are imported from sbmlab.rng at module load, so both
  engines read identical bits.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, fabs
from libc.stdint cimport int64_t, uint64_t

from .. import rng as _pyrng
from ..errors import ExplosionError

cnp.import_array()

cdef double[257] ZIG_X
cdef double[256] ZIG_RATIO
cdef double[257] ZIG_F
cdef double ZIG_R = _pyrng.ZIG_R
cdef int STEP_SHIFT = _pyrng.STEP_STRIDE_SHIFT
cdef double TWO_NEG53 = 2.0 ** -53

cdef uint64_t GOLDEN_C = 0x9E3779B97F4A7C15
cdef uint64_t MIX_A = 0xBF58476D1CE4E5B9
cdef uint64_t MIX_B = 0x94D049BB133111EB
cdef uint64_t TAG_PARTICLE_C = 2
cdef uint64_t TAG_INIT_C = 3

cdef int _i
for _i in range(257):
    ZIG_X[_i] = _pyrng._ZIG_X[_i]
    ZIG_F[_i] = _pyrng._ZIG_F[_i]
for _i in range(256):
    ZIG_RATIO[_i] = _pyrng._ZIG_RATIO[_i]


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * MIX_A
    z = (z ^ (z >> 27)) * MIX_B
    return z ^ (z >> 31)


cdef inline uint64_t raw64(uint64_t key, uint64_t n) noexcept nogil:
    return mix64(key + (n + 1) * GOLDEN_C)


cdef inline uint64_t substream(uint64_t key, uint64_t tag, uint64_t index) noexcept nogil:
    return mix64(key ^ mix64(tag * GOLDEN_C + index))


cdef inline double uniform53(uint64_t key, uint64_t n) noexcept nogil:
    return <double>(raw64(key, n) >> 11) * TWO_NEG53


cdef inline double standard_normal(uint64_t key, uint64_t base) noexcept nogil:
    cdef uint64_t n = base
    cdef uint64_t bits
    cdef int i, sign
    cdef double u, val, xw, u1, u2, xt, yt
    while True:
        bits = raw64(key, n)
        n += 1
        i = <int>(bits & 0xFF)
        sign = <int>((bits >> 8) & 0x1)
        u = <double>(bits >> 11) * TWO_NEG53
        if u < ZIG_RATIO[i]:
            val = u * ZIG_X[i]
            return -val if sign else val
        if i == 0:
            while True:
                u1 = <double>(raw64(key, n) >> 11) * TWO_NEG53
                u2 = <double>(raw64(key, n + 1) >> 11) * TWO_NEG53
                n += 2
                if u1 == 0.0 or u2 == 0.0:
                    continue
                xt = -log(u1) / ZIG_R
                yt = -log(u2)
                if yt + yt >= xt * xt:
                    val = ZIG_R + xt
                    return -val if sign else val
        else:
            xw = u * ZIG_X[i]
            u2 = <double>(raw64(key, n) >> 11) * TWO_NEG53
            n += 1
            if ZIG_F[i] + u2 * (ZIG_F[i + 1] - ZIG_F[i]) < exp(-0.5 * xw * xw):
                return -xw if sign else xw


cdef int64_t poisson_count(uint64_t key, double mean) noexcept nogil:
    """Chunked Knuth inverse-product Poisson, mirroring sbmlab.rng.poisson."""
    cdef uint64_t n = 0
    cdef int64_t total = 0, count
    cdef double remaining = mean, chunk, limit, prod
    while remaining > 0.0:
        chunk = remaining if remaining <= 500.0 else 500.0
        remaining -= chunk
        limit = exp(-chunk)
        prod = 1.0
        count = -1
        while prod > limit:
            prod *= uniform53(key, n)
            n += 1
            count += 1
        total += count
    return total


cdef inline double eval_function(
    const int64_t* offsets,
    const double* coeffs,
    int coeff_stride,
    const int64_t* degrees,
    const double* centers,
    const double* factors,
    int fi,
    double x,
) noexcept nogil:
    cdef double total = 0.0, acc, dx
    cdef int64_t term, k, deg
    for term in range(offsets[fi], offsets[fi + 1]):
        deg = degrees[term]
        acc = coeffs[term * coeff_stride + deg]
        for k in range(deg - 1, -1, -1):
            acc = acc * x + coeffs[term * coeff_stride + k]
        dx = x - centers[term]
        total += acc * exp(dx * dx * factors[term])
    return total


cdef void do_record(
    int rec_i,
    int64_t n_alive,
    int64_t n_ghost,
    int64_t n0,
    double n_per,
    double[::1] pos,
    int64_t[::1] rid,
    double[::1] gpos,
    int64_t[::1] grid_ids,
    double[::1] scratch,
    int n_pair,
    int64_t[::1] pair_off,
    double[:, ::1] pair_coeff,
    int pair_stride,
    int64_t[::1] pair_deg,
    double[::1] pair_ctr,
    double[::1] pair_fac,
    int n_z,
    double[:, ::1] occv,
    int n_mart,
    double[:, ::1] mstate,
    int64_t births,
    int64_t deaths,
    double[:, ::1] v_pair_branch,
    double[:, ::1] v_pair_base,
    double[:, ::1] v_occ,
    double[:, ::1] v_maxdev,
    double[:, ::1] v_mart_m,
    double[:, ::1] v_mart_qv,
    int64_t[::1] v_events,
    int64_t[::1] v_births,
    int64_t[::1] v_deaths,
    int64_t[::1] v_alive,
    snapshots,
    bint store_snapshots,
):
    cdef int fi, zi, mi
    cdef int64_t p, g
    cdef double acc
    for fi in range(n_pair):
        acc = 0.0
        for p in range(n_alive):
            acc += eval_function(&pair_off[0], &pair_coeff[0, 0], pair_stride,
                                 &pair_deg[0], &pair_ctr[0], &pair_fac[0],
                                 fi, pos[p])
        v_pair_branch[rec_i, fi] = acc / n_per
        # baseline: scatter into original root order, then sum in that order
        for p in range(n_alive):
            if rid[p] >= 0:
                scratch[rid[p]] = eval_function(
                    &pair_off[0], &pair_coeff[0, 0], pair_stride,
                    &pair_deg[0], &pair_ctr[0], &pair_fac[0], fi, pos[p])
        for g in range(n_ghost):
            scratch[grid_ids[g]] = eval_function(
                &pair_off[0], &pair_coeff[0, 0], pair_stride,
                &pair_deg[0], &pair_ctr[0], &pair_fac[0], fi, gpos[g])
        acc = 0.0
        for p in range(n0):
            acc += scratch[p]
        v_pair_base[rec_i, fi] = acc / n_per
    for zi in range(n_z):
        v_occ[rec_i, zi] = occv[zi, 1]
        v_maxdev[rec_i, zi] = occv[zi, 2]
    for mi in range(n_mart):
        v_mart_m[rec_i, mi] = mstate[mi, 2]
        v_mart_qv[rec_i, mi] = mstate[mi, 3]
    v_events[rec_i] = births + deaths
    v_births[rec_i] = births
    v_deaths[rec_i] = deaths
    v_alive[rec_i] = n_alive
    if store_snapshots:
        branch_copy = np.asarray(pos[:n_alive]).copy()
        base_copy = np.empty(n0)
        for p in range(n_alive):
            if rid[p] >= 0:
                base_copy[rid[p]] = pos[p]
        for g in range(n_ghost):
            base_copy[grid_ids[g]] = gpos[g]
        snapshots.append((branch_copy, base_copy))


def run_replicate_compiled(
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
    """Compiled twin of run_replicate_python; same arguments, same results."""
    cdef uint64_t rep_key = _pyrng.replicate_key(master_seed, replicate_index)
    cdef uint64_t init_key = substream(rep_key, TAG_INIT_C, 0)
    cdef uint64_t pos_key = substream(rep_key, TAG_INIT_C, 1)

    cdef double c_ = c, big_l_ = big_l, n_per = n_per_unit
    cdef double dt_ = dt, sqrt_dt_ = sqrt_dt, eps_ = eps, eps_occ_ = eps_occ
    cdef double q_ = q, q_half_ = q_half
    cdef int64_t n_steps_ = n_steps
    cdef bint store_snapshots_ = bool(store_snapshots)
    cdef bint record_events_ = bool(record_events)

    cdef int64_t n0 = poisson_count(init_key, 2.0 * big_l_ * n_per)
    cdef int64_t cap = <int64_t>(cap_factor * n0) + 16
    if n0 > cap:
        raise ExplosionError(
            f"initial population {n0} already exceeds cap {cap}"
        )

    # particle state
    cdef int64_t alloc = cap + 16
    pos_arr = np.empty(alloc, dtype=np.float64)
    mkey_arr = np.empty(alloc, dtype=np.uint64)
    bkey_arr = np.empty(alloc, dtype=np.uint64)
    rid_arr = np.empty(alloc, dtype=np.int64)
    gpos_arr = np.empty(max(n0, 1), dtype=np.float64)
    gkey_arr = np.empty(max(n0, 1), dtype=np.uint64)
    grid_arr = np.empty(max(n0, 1), dtype=np.int64)
    off_pos_arr = np.empty(alloc, dtype=np.float64)
    off_pid_arr = np.empty(alloc, dtype=np.int64)
    dead_arr = np.zeros(alloc, dtype=np.uint8)
    scratch_arr = np.zeros(max(n0, 1), dtype=np.float64)

    cdef double[::1] pos = pos_arr
    cdef uint64_t[::1] mkey = mkey_arr
    cdef uint64_t[::1] bkey = bkey_arr
    cdef int64_t[::1] rid = rid_arr
    cdef double[::1] gpos = gpos_arr
    cdef uint64_t[::1] gkey = gkey_arr
    cdef int64_t[::1] grid_ids = grid_arr
    cdef double[::1] off_pos = off_pos_arr
    cdef int64_t[::1] off_pid = off_pid_arr
    cdef unsigned char[::1] dead = dead_arr
    cdef double[::1] scratch = scratch_arr

    cdef int64_t i
    cdef double lo = c_ - big_l_
    for i in range(n0):
        pos[i] = lo + 2.0 * big_l_ * uniform53(pos_key, i)
        mkey[i] = substream(rep_key, TAG_PARTICLE_C, 2 * i)
        bkey[i] = substream(rep_key, TAG_PARTICLE_C, 2 * i + 1)
        rid[i] = i
    cdef int64_t n_alive = n0
    cdef int64_t n_ghost = 0

    # packed observable functions
    po, pc, pd, pm, pf = pair_pack
    mo, mc, md, mm, mf = mart_pack
    pair_off_arr = np.ascontiguousarray(po, dtype=np.int64)
    pair_coeff_arr = np.ascontiguousarray(pc, dtype=np.float64)
    pair_deg_arr = np.ascontiguousarray(pd, dtype=np.int64)
    pair_ctr_arr = np.ascontiguousarray(pm, dtype=np.float64)
    pair_fac_arr = np.ascontiguousarray(pf, dtype=np.float64)
    mart_off_arr = np.ascontiguousarray(mo, dtype=np.int64)
    mart_coeff_arr = np.ascontiguousarray(mc, dtype=np.float64)
    mart_deg_arr = np.ascontiguousarray(md, dtype=np.int64)
    mart_ctr_arr = np.ascontiguousarray(mm, dtype=np.float64)
    mart_fac_arr = np.ascontiguousarray(mf, dtype=np.float64)
    occ_z_arr = np.ascontiguousarray(occ_z, dtype=np.float64)
    rec_arr = np.ascontiguousarray(record_steps, dtype=np.int64)

    cdef int64_t[::1] pair_off = pair_off_arr
    cdef double[:, ::1] pair_coeff = pair_coeff_arr
    cdef int64_t[::1] pair_deg = pair_deg_arr
    cdef double[::1] pair_ctr = pair_ctr_arr
    cdef double[::1] pair_fac = pair_fac_arr
    cdef int64_t[::1] mart_off = mart_off_arr
    cdef double[:, ::1] mart_coeff = mart_coeff_arr
    cdef int64_t[::1] mart_deg = mart_deg_arr
    cdef double[::1] mart_ctr = mart_ctr_arr
    cdef double[::1] mart_fac = mart_fac_arr
    cdef double[::1] occ_zv = occ_z_arr
    cdef int64_t[::1] rec_steps = rec_arr

    cdef int n_pair = pair_off.shape[0] - 1
    cdef int n_mart = (mart_off.shape[0] - 1) // 2
    cdef int n_z = occ_zv.shape[0]
    cdef int n_rec = rec_steps.shape[0]
    cdef int pair_stride = pair_coeff.shape[1]
    cdef int mart_stride = mart_coeff.shape[1]

    # outputs
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
    cdef double[:, ::1] v_pair_branch = out_pair_branch
    cdef double[:, ::1] v_pair_base = out_pair_base
    cdef double[:, ::1] v_occ = out_occ
    cdef double[:, ::1] v_maxdev = out_maxdev
    cdef double[:, ::1] v_mart_m = out_mart_m
    cdef double[:, ::1] v_mart_qv = out_mart_qv
    cdef int64_t[::1] v_events = out_events
    cdef int64_t[::1] v_births = out_births
    cdef int64_t[::1] v_deaths = out_deaths
    cdef int64_t[::1] v_alive = out_alive

    snapshots = [] if store_snapshots_ else None
    event_list = [] if record_events_ else None

    # accumulator state; occ columns: denom, y, maxdev, prev density
    occ_state = np.zeros((max(n_z, 1), 4))
    cdef double[:, ::1] occv = occ_state
    cdef double half_dt = 0.5 * dt_
    # mart columns: pf, paf, m, qv
    mart_state = np.zeros((max(n_mart, 1), 4))
    cdef double[:, ::1] mstate = mart_state

    cdef int64_t births = 0, deaths = 0
    cdef int rec_i = 0
    cdef int64_t j, p, w, nb_dead, nb_off, pid, count
    cdef int zi, mi
    cdef double z, u, d, acc, pf_new, paf_new, dm, dev
    cdef uint64_t stepbase
    cdef bint exploded = False
    cdef int64_t explode_step = -1

    for zi in range(n_z):
        occv[zi, 0] = n_per * 2.0 * eps_occ_
        count = 0
        for p in range(n_alive):
            if fabs(pos[p] - occ_zv[zi]) < eps_occ_:
                count += 1
        occv[zi, 3] = count / occv[zi, 0]
    for mi in range(n_mart):
        acc = 0.0
        for p in range(n_alive):
            acc += eval_function(&mart_off[0], &mart_coeff[0, 0], mart_stride,
                                 &mart_deg[0], &mart_ctr[0], &mart_fac[0],
                                 2 * mi, pos[p])
        mstate[mi, 0] = acc / n_per
        acc = 0.0
        for p in range(n_alive):
            acc += eval_function(&mart_off[0], &mart_coeff[0, 0], mart_stride,
                                 &mart_deg[0], &mart_ctr[0], &mart_fac[0],
                                 2 * mi + 1, pos[p])
        mstate[mi, 1] = acc / n_per

    if n_rec > 0 and rec_steps[0] == 0:
        do_record(rec_i, n_alive, n_ghost, n0, n_per, pos, rid, gpos, grid_ids,
                  scratch, n_pair, pair_off, pair_coeff, pair_stride, pair_deg,
                  pair_ctr, pair_fac, n_z, occv, n_mart, mstate, births, deaths,
                  v_pair_branch, v_pair_base, v_occ, v_maxdev, v_mart_m,
                  v_mart_qv, v_events, v_births, v_deaths, v_alive, snapshots,
                  store_snapshots_)
        rec_i += 1

    with nogil:
        for j in range(n_steps_):
            stepbase = (<uint64_t>j) << STEP_SHIFT
            # motion: branching system (shared roots included), then ghosts
            for p in range(n_alive):
                z = standard_normal(mkey[p], stepbase)
                pos[p] = pos[p] + sqrt_dt_ * z
            for p in range(n_ghost):
                z = standard_normal(gkey[p], stepbase)
                gpos[p] = gpos[p] + sqrt_dt_ * z

            # branching sweep on post-move positions
            nb_dead = 0
            nb_off = 0
            for p in range(n_alive):
                if fabs(pos[p] - c_) < eps_:
                    u = uniform53(bkey[p], j)
                    if u < q_:
                        if u < q_half_:
                            pid = n0 + births
                            births += 1
                            off_pos[nb_off] = pos[p]
                            off_pid[nb_off] = pid
                            nb_off += 1
                            if record_events_:
                                with gil:
                                    event_list.append((j, pos[p], 1.0))
                        else:
                            deaths += 1
                            dead[p] = 1
                            nb_dead += 1
                            if record_events_:
                                with gil:
                                    event_list.append((j, pos[p], -1.0))
            if nb_dead > 0:
                w = 0
                for p in range(n_alive):
                    if dead[p]:
                        dead[p] = 0
                        if rid[p] >= 0:
                            gpos[n_ghost] = pos[p]
                            gkey[n_ghost] = mkey[p]
                            grid_ids[n_ghost] = rid[p]
                            n_ghost += 1
                    else:
                        if w != p:
                            pos[w] = pos[p]
                            mkey[w] = mkey[p]
                            bkey[w] = bkey[p]
                            rid[w] = rid[p]
                        w += 1
                n_alive = w
            if nb_off > 0:
                if n_alive + nb_off > cap:
                    exploded = True
                    explode_step = j
                    break
                for p in range(nb_off):
                    pos[n_alive] = off_pos[p]
                    mkey[n_alive] = substream(rep_key, TAG_PARTICLE_C,
                                              2 * <uint64_t>off_pid[p])
                    bkey[n_alive] = substream(rep_key, TAG_PARTICLE_C,
                                              2 * <uint64_t>off_pid[p] + 1)
                    rid[n_alive] = -1
                    n_alive += 1

            # occupation trapezoid on the post-step state
            for zi in range(n_z):
                count = 0
                for p in range(n_alive):
                    if fabs(pos[p] - occ_zv[zi]) < eps_occ_:
                        count += 1
                d = count / occv[zi, 0]
                occv[zi, 1] = occv[zi, 1] + half_dt * (occv[zi, 3] + d)
                occv[zi, 3] = d
                dev = fabs(occv[zi, 1] - (j + 1) * dt_)
                if dev > occv[zi, 2]:
                    occv[zi, 2] = dev

            # martingale increments on the post-step state
            for mi in range(n_mart):
                acc = 0.0
                for p in range(n_alive):
                    acc += eval_function(&mart_off[0], &mart_coeff[0, 0],
                                         mart_stride, &mart_deg[0],
                                         &mart_ctr[0], &mart_fac[0],
                                         2 * mi, pos[p])
                pf_new = acc / n_per
                acc = 0.0
                for p in range(n_alive):
                    acc += eval_function(&mart_off[0], &mart_coeff[0, 0],
                                         mart_stride, &mart_deg[0],
                                         &mart_ctr[0], &mart_fac[0],
                                         2 * mi + 1, pos[p])
                paf_new = acc / n_per
                dm = pf_new - mstate[mi, 0] - dt_ * mstate[mi, 1]
                mstate[mi, 2] = mstate[mi, 2] + dm
                mstate[mi, 3] = mstate[mi, 3] + dm * dm
                mstate[mi, 0] = pf_new
                mstate[mi, 1] = paf_new

            if rec_i < n_rec and rec_steps[rec_i] == j + 1:
                with gil:
                    do_record(rec_i, n_alive, n_ghost, n0, n_per, pos, rid,
                              gpos, grid_ids, scratch, n_pair, pair_off,
                              pair_coeff, pair_stride, pair_deg, pair_ctr,
                              pair_fac, n_z, occv, n_mart, mstate, births,
                              deaths, v_pair_branch, v_pair_base, v_occ,
                              v_maxdev, v_mart_m, v_mart_qv, v_events,
                              v_births, v_deaths, v_alive, snapshots,
                              store_snapshots_)
                    rec_i += 1

    if exploded:
        raise ExplosionError(
            f"population exceeded cap {cap} at step {explode_step}"
        )

    return {
        "n_initial": int(n0),
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
            np.asarray(event_list, dtype=float).reshape(-1, 3)
            if record_events_
            else None
        ),
    }
