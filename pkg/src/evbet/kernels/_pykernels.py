"""Pure-numpy implementation of the batch game kernels.

Semantics contract shared with the compiled kernel: per game g with target
mean mu[g], quadrature nodes span I_mu with Simpson coefficients folded into
the initial weights; each round bets the posterior mean, scores the coin-bet
payoff of the bet, then multiplies node weights by their own payoffs. Weights
are renormalised by their sum every round, which leaves the bets invariant
and prevents under/overflow over long horizons.
"""

from __future__ import annotations

import numpy as np

from ..betting import lambda_grid, quadrature_coefficients
from ..errors import DegeneratePosterior


def up_game_batch(xs: np.ndarray, mus: np.ndarray, n_nodes: int, threads: int = 1):
    """Run one universal-portfolio coin-betting game per row of ``xs``.

    Returns ``(bets, log_wealth)`` of shape ``(G, n)``; ``log_wealth`` is the
    running sum of log payoffs with -inf saturation after a zero payoff.
    """
    xs = np.ascontiguousarray(xs, dtype=float)
    mus = np.ascontiguousarray(mus, dtype=float)
    n_games, n_rounds = xs.shape
    if mus.shape != (n_games,):
        raise ValueError("mus must have one entry per game")

    grids = np.empty((n_games, n_nodes))
    for g in range(n_games):
        grids[g] = lambda_grid(mus[g], n_nodes)
    w = np.broadcast_to(quadrature_coefficients(n_nodes), grids.shape).copy()
    w /= w.sum(axis=1, keepdims=True)

    bets = np.empty((n_games, n_rounds))
    log_wealth = np.empty((n_games, n_rounds))
    wealth = np.zeros(n_games)

    for t in range(n_rounds):
        bet = (w * grids).sum(axis=1)  # w rows are kept normalised to sum 1
        dx = xs[:, t] - mus
        payoff = np.maximum(1.0 + bet * dx, 0.0)
        with np.errstate(divide="ignore"):
            wealth = wealth + np.log(payoff)
        bets[:, t] = bet
        log_wealth[:, t] = wealth
        factors = np.maximum(1.0 + grids * dx[:, None], 0.0)
        w *= factors
        s = w.sum(axis=1, keepdims=True)
        if not (s > 0.0).all():
            dead = int(np.argmin(s[:, 0]))
            raise DegeneratePosterior(f"game {dead}: posterior wiped out at round {t + 1}")
        w /= s

    return bets, log_wealth
