"""Gillespie path kernels: a numba version looping per path and a numpy version vectorized across paths.

Randomness is counter-based: path ``k`` of master seed ``s`` draws its
``c``-th uniform as ``splitmix64(key(s, k) + (c + 1) * GOLDEN)``, so every
path is reproducible in isolation and both backends consume identical
streams.  Each event uses two counters: holding time, then destination.
"""

import numpy as np

from ._accel import njit, prange, default_backend

GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_TWO53 = 2.0**-53


def event_table(rates, kill):
    """Cumulative rate table ``(n, n+1)``: jumps to 0..n-1, then killing in column n."""
    n = rates.shape[0]
    inc = np.zeros((n, n + 1))
    inc[:, :n] = rates
    np.fill_diagonal(inc[:, :n], 0.0)
    inc[:, n] = kill
    cum = np.cumsum(inc, axis=1)
    last = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        pos = np.nonzero(inc[i] > 0)[0]
        if pos.size:
            last[i] = pos[-1]
    return cum, last


# ---------------------------------------------------------------- numpy path

def _mix_np(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def path_keys(seed, paths):
    paths = np.asarray(paths, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix_np(np.uint64(seed) + np.uint64(GOLDEN) * (paths + np.uint64(1)))


def uniforms(keys, counters):
    with np.errstate(over="ignore"):
        c = np.asarray(counters, dtype=np.uint64) + np.uint64(1)
        z = _mix_np(keys + np.uint64(GOLDEN) * c)
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO53


def simulate_numpy(cum, last, Vw, Fw, Vo, Go, t, x0, seed, offset, n_paths):
    n = cum.shape[0]
    keys = path_keys(seed, np.arange(offset, offset + n_paths, dtype=np.uint64))
    R = cum[:, n]
    state = np.full(n_paths, x0, dtype=np.int64)
    clock = np.zeros(n_paths)
    counter = np.zeros(n_paths, dtype=np.int64)
    Aw = np.zeros(n_paths)
    Ao = np.zeros(n_paths)
    jumps = np.zeros(n_paths, dtype=np.int64)
    occ = np.zeros((n_paths, n))
    alive = np.ones(n_paths, dtype=bool)
    active = np.arange(n_paths)

    while active.size:
        s = state[active]
        rate = R[s]
        idle = rate <= 0.0
        u1 = uniforms(keys[active], 2 * counter[active])
        with np.errstate(divide="ignore"):
            tau = np.where(idle, np.inf, -np.log(u1) / np.where(idle, 1.0, rate))
        remaining = t - clock[active]
        done = clock[active] + tau >= t
        dt = np.where(done, remaining, tau)
        occ[active, s] += dt
        Aw[active] += Vw[s] * dt
        Ao[active] += Vo[s] * dt

        go = active[~done]
        sg = s[~done]
        clock[go] += tau[~done]
        target = uniforms(keys[go], 2 * counter[go] + 1) * R[sg]
        dest = np.sum(cum[sg] <= target[:, None], axis=1)
        bad = dest > n
        dest[bad] = last[sg[bad]]
        counter[go] += 1
        killed = dest == n
        alive[go[killed]] = False
        state[go[killed]] = -1
        mv = go[~killed]
        src, dst = sg[~killed], dest[~killed]
        Aw[mv] += Fw[src, dst]
        Ao[mv] += Go[src, dst]
        jumps[mv] += 1
        state[mv] = dst
        active = mv
    return alive, Aw, Ao, state, jumps, occ


# ---------------------------------------------------------------- numba path

@njit(cache=True)
def _mix_nb(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _uniform_nb(key, c):
    z = _mix_nb(key + np.uint64(GOLDEN) * np.uint64(c + 1))
    return (np.float64(z >> np.uint64(11)) + 0.5) * _TWO53


@njit(cache=True, parallel=True)
def _simulate_nb(cum, last, Vw, Fw, Vo, Go, t, x0, seed, offset, n_paths):
    n = cum.shape[0]
    alive = np.ones(n_paths, dtype=np.bool_)
    Aw = np.zeros(n_paths)
    Ao = np.zeros(n_paths)
    endpoint = np.empty(n_paths, dtype=np.int64)
    jumps = np.zeros(n_paths, dtype=np.int64)
    occ = np.zeros((n_paths, n))
    for k in prange(n_paths):
        key = _mix_nb(seed + np.uint64(GOLDEN) * (offset + np.uint64(k) + np.uint64(1)))
        s = x0
        clock = 0.0
        c = 0
        aw = 0.0
        ao = 0.0
        nj = 0
        while True:
            rate = cum[s, n]
            if rate <= 0.0:
                dt = t - clock
                occ[k, s] += dt
                aw += Vw[s] * dt
                ao += Vo[s] * dt
                break
            tau = -np.log(_uniform_nb(key, 2 * c)) / rate
            if clock + tau >= t:
                dt = t - clock
                occ[k, s] += dt
                aw += Vw[s] * dt
                ao += Vo[s] * dt
                break
            occ[k, s] += tau
            aw += Vw[s] * tau
            ao += Vo[s] * tau
            clock += tau
            target = _uniform_nb(key, 2 * c + 1) * rate
            c += 1
            d = 0
            while d <= n and cum[s, d] <= target:
                d += 1
            if d > n:
                d = last[s]
            if d == n:
                alive[k] = False
                s = -1
                break
            aw += Fw[s, d]
            ao += Go[s, d]
            nj += 1
            s = d
        endpoint[k] = s
        Aw[k] = aw
        Ao[k] = ao
        jumps[k] = nj
    return alive, Aw, Ao, endpoint, jumps, occ


def simulate_numba(cum, last, Vw, Fw, Vo, Go, t, x0, seed, offset, n_paths):
    return _simulate_nb(
        cum, last, Vw, Fw, Vo, Go, float(t), np.int64(x0), np.uint64(seed), np.uint64(offset), np.int64(n_paths)
    )


def simulate(rates, kill, Vw, Fw, Vo, Go, t, x0, seed, n_paths, offset=0, backend=None):
    """Simulate ``n_paths`` independent paths from ``x0`` up to time ``t``.

    Returns ``(alive, A_weight, A_obs, endpoint, n_jumps, occupation)``
    with ``endpoint == -1`` for killed paths.
    """
    backend = backend or default_backend()
    cum, last = event_table(np.asarray(rates, float), np.asarray(kill, float))
    args = (
        cum,
        last,
        np.ascontiguousarray(Vw, float),
        np.ascontiguousarray(Fw, float),
        np.ascontiguousarray(Vo, float),
        np.ascontiguousarray(Go, float),
        float(t),
        int(x0),
        int(seed) & 0xFFFFFFFFFFFFFFFF,
        int(offset),
        int(n_paths),
    )
    if backend == "numba":
        return simulate_numba(*args)
    if backend == "numpy":
        return simulate_numpy(*args)
    raise ValueError(f"unknown backend {backend!r}")
