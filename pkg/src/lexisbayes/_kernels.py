"""Compiled inner loops of the Metropolis-within-Gibbs sampler.

All random numbers are drawn by the caller (numpy ``Generator``) and passed
in, so the kernels are deterministic functions of their inputs.

``eps`` holds standard normal proposal increments and ``logu`` log-uniforms,
both shaped ``(2, T, A)`` per sweep: index 0 for x moves, 1 for z moves.
"""
import math

from numba import njit, prange

LOG_RATE_LIMIT = 50.0


@njit(cache=True, nogil=True, inline="always")
def _update_x(x, z, y, n, mu0, gamma_x, scale_x, eps, logu, acc_x, t, j):
    T, A = x.shape
    xo = x[t, j]
    nsum = 0.0
    deg = 0
    for dt in range(-1, 2):
        s = t + dt
        if s < 0 or s >= T:
            continue
        for dj in range(-1, 2):
            i = j + dj
            if (dt == 0 and dj == 0) or i < 0 or i >= A:
                continue
            nsum += x[s, i]
            deg += 1
    xn = xo + scale_x[t, j] * eps[0, t, j]
    dh = 0.5 * gamma_x * (deg * (xn * xn - xo * xo) - 2.0 * nsum * (xn - xo))
    if n[t, j] > 0.0:
        eta = xn + z[t, j]
        if abs(eta) > LOG_RATE_LIMIT:
            return
        dh += mu0 * n[t, j] * (math.exp(eta) - math.exp(xo + z[t, j])) - y[t, j] * (xn - xo)
    if logu[0, t, j] < -dh:
        x[t, j] = xn
        acc_x[t, j] += 1


@njit(cache=True, nogil=True, inline="always")
def _update_z(x, z, y, n, mu0, gamma_z, scale_z, eps, logu, acc_z, t, j):
    zo = z[t, j]
    zn = zo + scale_z[t, j] * eps[1, t, j]
    dh = 0.5 * gamma_z * (zn * zn - zo * zo)
    if n[t, j] > 0.0:
        eta = x[t, j] + zn
        if abs(eta) > LOG_RATE_LIMIT:
            return
        dh += mu0 * n[t, j] * (math.exp(eta) - math.exp(x[t, j] + zo)) - y[t, j] * (zn - zo)
    if logu[1, t, j] < -dh:
        z[t, j] = zn
        acc_z[t, j] += 1


@njit(cache=True, nogil=True)
def sweep(x, z, y, n, mu0, gamma_x, gamma_z, scale_x, scale_z, eps, logu, acc_x, acc_z):
    """One row-major pass; x then z at every knot. Mutates x, z and the tallies."""
    T, A = x.shape
    for t in range(T):
        for j in range(A):
            _update_x(x, z, y, n, mu0, gamma_x, scale_x, eps, logu, acc_x, t, j)
            _update_z(x, z, y, n, mu0, gamma_z, scale_z, eps, logu, acc_z, t, j)


@njit(cache=True, parallel=True)
def colored_sweep(x, z, y, n, mu0, gamma_x, gamma_z, scale_x, scale_z, eps, logu, acc_x, acc_z):
    """Four parity classes in turn; knots inside a class share no edge and run in parallel."""
    T, A = x.shape
    for p in range(2):
        for q in range(2):
            rows = (T - p + 1) // 2
            for r in prange(rows):
                t = p + 2 * r
                for j in range(q, A, 2):
                    _update_x(x, z, y, n, mu0, gamma_x, scale_x, eps, logu, acc_x, t, j)
                    _update_z(x, z, y, n, mu0, gamma_z, scale_z, eps, logu, acc_z, t, j)


@njit(cache=True, nogil=True)
def pair_energy(x):
    T, A = x.shape
    total = 0.0
    for t in range(T):
        for j in range(A):
            v = x[t, j]
            if j + 1 < A:
                d = x[t, j + 1] - v
                total += d * d
            if t + 1 < T:
                d = x[t + 1, j] - v
                total += d * d
                if j + 1 < A:
                    d = x[t + 1, j + 1] - v
                    total += d * d
                if j >= 1:
                    d = x[t + 1, j - 1] - v
                    total += d * d
    return total


@njit(cache=True, nogil=True)
def sum_squares(z):
    total = 0.0
    for v in z.ravel():
        total += v * v
    return total


@njit(cache=True, nogil=True)
def run_window(x, z, gam, y, n, mu0, scale_x, scale_z, eps, logu, gdraw, beta_x, beta_z,
               update_gamma, acc_x, acc_z, keep, sum_x, sum_z, trace, pos,
               probe_t, probe_j, probe_x, probe_z):
    """Run ``eps.shape[0]`` full iterations (sweep + Gibbs step).

    ``gam`` is a length-2 array ``[gamma_x, gamma_z]`` updated in place.
    ``gdraw`` holds standard-gamma variates with the conditional shapes; a
    Gamma(shape, rate) draw is ``gdraw / rate``. Iterations flagged in
    ``keep`` are accumulated into the running sums and traces starting at
    row ``pos``. Returns the next free trace row.
    """
    for w in range(eps.shape[0]):
        sweep(x, z, y, n, mu0, gam[0], gam[1], scale_x, scale_z, eps[w], logu[w], acc_x, acc_z)
        if update_gamma:
            gam[0] = gdraw[w, 0] / (beta_x + 0.5 * pair_energy(x))
            gam[1] = gdraw[w, 1] / (beta_z + 0.5 * sum_squares(z))
        if keep[w]:
            sum_x += x
            sum_z += z
            trace[pos, 0] = gam[0]
            trace[pos, 1] = gam[1]
            for k in range(probe_t.shape[0]):
                probe_x[pos, k] = x[probe_t[k], probe_j[k]]
                probe_z[pos, k] = z[probe_t[k], probe_j[k]]
            pos += 1
    return pos
