# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled batch game kernel: fused universal-portfolio betting rounds.

Mirrors the semantics of ``_pykernels.up_game_batch`` (normalised node
weights, posterior-mean bet, coin-bet payoff, -inf saturation) in a single
pass per round with no temporaries. Games are independent, so slices of the
batch can be processed by separate threads with the GIL released.
"""

import numpy as np

cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport INFINITY, log

from ..betting import lambda_grid, quadrature_coefficients
from ..errors import DegeneratePosterior

cnp.import_array()


cdef int _run_game(const double* xs, double mu, const double* grid,
                   double* w, int n_nodes, int n_rounds,
                   double* bets, double* logw) noexcept nogil:
    """Run one game in place; returns the 1-based round of posterior death, or 0."""
    cdef int t, k
    cdef double num, den, bet, dx, payoff, wealth, f
    wealth = 0.0
    for t in range(n_rounds):
        num = 0.0
        for k in range(n_nodes):
            num += w[k] * grid[k]
        bet = num
        dx = xs[t] - mu
        payoff = 1.0 + bet * dx
        if payoff <= 0.0:
            wealth = -INFINITY
        elif wealth != -INFINITY:
            wealth += log(payoff)
        bets[t] = bet
        logw[t] = wealth
        den = 0.0
        for k in range(n_nodes):
            f = 1.0 + grid[k] * dx
            if f < 0.0:
                f = 0.0
            w[k] *= f
            den += w[k]
        if den <= 0.0:
            return t + 1
        for k in range(n_nodes):
            w[k] /= den
    return 0


def up_game_batch(xs, mus, int n_nodes, int threads=1):
    """Run one universal-portfolio coin-betting game per row of ``xs``.

    Returns ``(bets, log_wealth)`` of shape ``(G, n)``.
    """
    cdef cnp.ndarray[double, ndim=2, mode="c"] xs_c = np.ascontiguousarray(xs, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1, mode="c"] mus_c = np.ascontiguousarray(mus, dtype=np.float64)
    cdef int n_games = xs_c.shape[0]
    cdef int n_rounds = xs_c.shape[1]
    if mus_c.shape[0] != n_games:
        raise ValueError("mus must have one entry per game")

    grids_np = np.empty((n_games, n_nodes))
    for g in range(n_games):
        grids_np[g] = lambda_grid(mus_c[g], n_nodes)
    w_np = np.broadcast_to(quadrature_coefficients(n_nodes), (n_games, n_nodes)).copy()
    w_np /= w_np.sum(axis=1, keepdims=True)

    cdef cnp.ndarray[double, ndim=2, mode="c"] grids = np.ascontiguousarray(grids_np)
    cdef cnp.ndarray[double, ndim=2, mode="c"] w = np.ascontiguousarray(w_np)
    cdef cnp.ndarray[double, ndim=2, mode="c"] bets = np.empty((n_games, n_rounds))
    cdef cnp.ndarray[double, ndim=2, mode="c"] logw = np.empty((n_games, n_rounds))
    cdef cnp.ndarray[int, ndim=1, mode="c"] died = np.zeros(n_games, dtype=np.intc)

    cdef int i
    cdef int nthreads = threads if threads > 0 else 1
    if nthreads > 1:
        for i in prange(n_games, nogil=True, num_threads=nthreads, schedule="static"):
            died[i] = _run_game(&xs_c[i, 0], mus_c[i], &grids[i, 0], &w[i, 0],
                                n_nodes, n_rounds, &bets[i, 0], &logw[i, 0])
    else:
        with nogil:
            for i in range(n_games):
                died[i] = _run_game(&xs_c[i, 0], mus_c[i], &grids[i, 0], &w[i, 0],
                                    n_nodes, n_rounds, &bets[i, 0], &logw[i, 0])

    if died.any():
        g = int(np.flatnonzero(died)[0])
        raise DegeneratePosterior(f"game {g}: posterior wiped out at round {int(died[g])}")
    return np.asarray(bets), np.asarray(logw)
