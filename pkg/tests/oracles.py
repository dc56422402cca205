"""Independent reference computations used to freeze expected values.

Nothing here imports the package under test.
"""
import math

import numpy as np


def quadrature_means_two_knots(y, n, mu0, gamma_x, gamma_z, lo=-3.0, hi=3.0, step=0.05):
    """Posterior means of (x1, x2, z1, z2) on two neighbouring knots by brute-force 4-D grid sums.

    Unnormalised log density:
    sum_i [y_i (x_i + z_i) - mu0 n_i exp(x_i + z_i)] - gamma_x/2 (x1 - x2)^2
    - gamma_z/2 (z1^2 + z2^2).
    """
    g = np.arange(lo, hi + step / 2, step)
    x2 = g[:, None, None]
    z1 = g[None, :, None]
    z2 = g[None, None, :]
    log_terms = []
    for x1 in g:
        lp = (y[0] * (x1 + z1) - mu0 * n[0] * np.exp(x1 + z1)
              + y[1] * (x2 + z2) - mu0 * n[1] * np.exp(x2 + z2)
              - 0.5 * gamma_x * (x1 - x2) ** 2
              - 0.5 * gamma_z * (z1 ** 2 + z2 ** 2))
        log_terms.append(lp)
    # Two passes to keep exp() in range.
    peak = max(float(lp.max()) for lp in log_terms)
    total = 0.0
    acc = np.zeros(4)
    for x1, lp in zip(g, log_terms):
        w = np.exp(lp - peak)
        s = w.sum()
        total += s
        acc[0] += x1 * s
        acc[1] += (w * x2).sum()
        acc[2] += (w * z1).sum()
        acc[3] += (w * z2).sum()
    return acc / total


def straight_line_log_posterior(x, z, gamma_x, gamma_z, y, n, mu0, edges, alpha=(0.01, 0.01),
                                beta=(0.01, 0.01)):
    """Scalar-loop joint log posterior with the per-site double-counted neighbour sum.

    ``edges`` maps each site index to its neighbour indices (symmetric).
    """
    N = len(x)
    total = 0.0
    for k in range(N):
        if n[k] > 0:
            total += y[k] * (x[k] + z[k]) - mu0 * n[k] * math.exp(x[k] + z[k])
        total -= gamma_x / 2 * sum((x[k] - x[m]) ** 2 / 2 for m in edges[k])
        total -= gamma_z / 2 * z[k] ** 2
    total += -beta[0] * gamma_x + (alpha[0] - 1 + N / 2) * math.log(gamma_x)
    total += -beta[1] * gamma_z + (alpha[1] - 1 + N / 2) * math.log(gamma_z)
    return total


def king_pairs(T, A):
    """Undirected king-move pairs on a T x A grid by exhaustive enumeration."""
    pairs = set()
    for t in range(T):
        for j in range(A):
            for s in range(T):
                for i in range(A):
                    if (t, j) != (s, i) and abs(t - s) <= 1 and abs(j - i) <= 1:
                        pairs.add(frozenset([(t, j), (s, i)]))
    return pairs
