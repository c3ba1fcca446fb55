"""Counter-based random number generation shared by every simulation backend.

All Monte Carlo components draw their randomness through the stateless
primitives defined here, so that a trajectory is a pure function of
``(master seed, replicate index)`` no matter which engine executes it or how
replicates are scheduled across threads.

The generator is the splitmix64 recurrence used as a counter-based hash.
Output ``n`` of the stream with 64-bit key ``k`` is::

    raw64(k, n) = mix64((k + (n + 1) * GOLDEN) mod 2**64)

where ``GOLDEN = 0x9E3779B97F4A7C15`` and ``mix64`` is the splitmix64
finalizer::

    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27;  z *= 0x94D049BB133111EB
    z ^= z >> 31

Derived streams use ``substream(key, tag, index) = mix64(key ^ mix64((tag *
GOLDEN + index) mod 2**64))``.  The tag constants are part of the public
reproducibility contract (see the engine protocol in
:mod:`sbmlab.particle.reference`).

Normal variates come from a 256-layer ziggurat whose accept path uses only
integer arithmetic, one table lookup, one float compare and one multiply.
These operations are exactly rounded under IEEE-754, so the compiled engine
and the pure-Python engine produce bit-identical streams.  The rare wedge and
tail branches call libm ``exp``/``log`` (``math.exp``/``math.log`` on the
Python side), which resolve to the same C library functions.
"""

import math

__all__ = [
    "GOLDEN",
    "MASK64",
    "TAG_REPLICATE",
    "TAG_PARTICLE",
    "TAG_INIT",
    "TAG_OU",
    "mix64",
    "raw64",
    "substream",
    "replicate_key",
    "uniform53",
    "standard_normal",
    "poisson",
    "ziggurat_tables",
    "ZIG_LAYERS",
]

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB

# Stream tags (reproducibility contract).
TAG_REPLICATE = 1  # replicate_key(master, r)
TAG_PARTICLE = 2   # per-particle motion/branch streams, index 2*pid / 2*pid+1
TAG_INIT = 3       # initial Poisson count and uniform positions
TAG_OU = 4         # driving noise of the limit-process sampler

# Counter stride reserved per time step for normal draws; the ziggurat
# consumes a variable number of raw words and retries stay inside the stride
# with overwhelming probability (rejection rate is ~1.2% per word).
STEP_STRIDE_SHIFT = 6


def mix64(z: int) -> int:
    """splitmix64 finalizer on a 64-bit word."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX_A) & MASK64
    z = ((z ^ (z >> 27)) * _MIX_B) & MASK64
    return z ^ (z >> 31)


def raw64(key: int, n: int) -> int:
    """n-th 64-bit output of the stream with the given key."""
    return mix64((key + ((n + 1) * GOLDEN)) & MASK64)


def substream(key: int, tag: int, index: int) -> int:
    """Derive the key of an independent child stream."""
    return mix64(key ^ mix64((tag * GOLDEN + index) & MASK64))


def replicate_key(master_seed: int, replicate_index: int) -> int:
    """Seed of one replicate; replicates are embarrassingly parallel."""
    return substream(master_seed & MASK64, TAG_REPLICATE, replicate_index)


def uniform53(key: int, n: int) -> float:
    """Uniform in [0, 1) with 53 random bits."""
    return (raw64(key, n) >> 11) * 2.0 ** -53


# ---------------------------------------------------------------------------
# Ziggurat tables for the standard normal.
# ---------------------------------------------------------------------------

ZIG_LAYERS = 256


def _zig_closure(r: float) -> tuple[float, list[float]]:
    """Layer abscissas implied by base-strip boundary r; returns (gap, x).

    gap is f(x_last)+v/x_last - 1 and must vanish for a valid table.
    """
    f_r = math.exp(-0.5 * r * r)
    tail = math.sqrt(0.5 * math.pi) * math.erfc(r / math.sqrt(2.0))
    v = r * f_r + tail
    x = [0.0] * (ZIG_LAYERS + 1)
    x[1] = r
    x[0] = v / f_r  # virtual width of the base strip (tail folded in)
    for i in range(2, ZIG_LAYERS):
        arg = v / x[i - 1] + math.exp(-0.5 * x[i - 1] * x[i - 1])
        if arg >= 1.0:
            return 1.0, x
        x[i] = math.sqrt(-2.0 * math.log(arg))
    x[ZIG_LAYERS] = 0.0
    gap = v / x[ZIG_LAYERS - 1] + math.exp(-0.5 * x[ZIG_LAYERS - 1] ** 2) - 1.0
    return gap, x


def ziggurat_tables():
    """Build (x, ratio, f) tables used by both engines.

    x[i] is the right edge of layer i (x[0] is the virtual base-strip width),
    ratio[i] = x[i+1]/x[i] is the fast accept threshold and f[i] =
    exp(-x[i]^2/2).  The base-strip boundary R solves the area closure
    condition; bisection pins it to full double precision.
    """
    lo, hi = 3.0, 4.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        gap, _ = _zig_closure(mid)
        # too-small r makes the strip area v too large and overshoots f(0)=1
        if gap > 0.0:
            lo = mid
        else:
            hi = mid
    # hi side: recursion completes (no overshoot), residual gap ~ 1 ulp
    r = hi
    _, x = _zig_closure(r)
    ratio = [x[i + 1] / x[i] for i in range(ZIG_LAYERS)]
    f = [math.exp(-0.5 * x[i] * x[i]) for i in range(ZIG_LAYERS + 1)]
    return x, ratio, f, r


_ZIG_X, _ZIG_RATIO, _ZIG_F, ZIG_R = ziggurat_tables()


def standard_normal(key: int, base: int) -> float:
    """One N(0,1) variate from counters base, base+1, ... of the stream.

    The consumption pattern is deterministic; callers reserve a stride of
    2**STEP_STRIDE_SHIFT counters per draw.
    """
    n = base
    while True:
        bits = raw64(key, n)
        n += 1
        i = bits & 0xFF
        sign = (bits >> 8) & 0x1
        u = (bits >> 11) * 2.0 ** -53
        if u < _ZIG_RATIO[i]:
            val = u * _ZIG_X[i]
            return -val if sign else val
        if i == 0:
            # tail beyond R: Marsaglia's exponential rejection
            while True:
                u1 = (raw64(key, n) >> 11) * 2.0 ** -53
                u2 = (raw64(key, n + 1) >> 11) * 2.0 ** -53
                n += 2
                if u1 == 0.0 or u2 == 0.0:
                    continue
                xt = -math.log(u1) / ZIG_R
                yt = -math.log(u2)
                if yt + yt >= xt * xt:
                    val = ZIG_R + xt
                    return -val if sign else val
        else:
            xw = u * _ZIG_X[i]
            u2 = (raw64(key, n) >> 11) * 2.0 ** -53
            n += 1
            if _ZIG_F[i] + u2 * (_ZIG_F[i + 1] - _ZIG_F[i]) < math.exp(-0.5 * xw * xw):
                return -xw if sign else xw


def poisson(key: int, mean: float) -> int:
    """Poisson variate by chunked inverse products (exact, backend-portable).

    Splits the mean into chunks of at most 500 so exp(-chunk) stays normal,
    then runs Knuth's product loop per chunk.  Counter consumption equals the
    total number of uniforms drawn, starting at 0.
    """
    if mean < 0.0:
        raise ValueError("poisson mean must be >= 0")
    n = 0
    total = 0
    remaining = mean
    while remaining > 0.0:
        chunk = remaining if remaining <= 500.0 else 500.0
        remaining -= chunk
        limit = math.exp(-chunk)
        prod = 1.0
        count = -1
        while prod > limit:
            prod *= uniform53(key, n)
            n += 1
            count += 1
        total += count
    return total
