"""Confidence sequences for the mean by gridwise sequential testing.

One independent game per candidate mean on a grid; after each observation the
confidence set collects the grid points whose game wealth has not crossed
``log(1/delta)``. The headline output is the interval hull of the surviving
points (wealth need not be quasi-convex in the candidate mean round by
round). With running intersection enabled the reported sets are the
intersection over all rounds so far, hence nested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .game import BatchGameResult, run_games_batch


def default_mu_grid(m: int = 99) -> np.ndarray:
    """``m`` equispaced candidate means strictly inside (0, 1)."""
    if m < 1:
        raise ValueError("grid needs at least one point")
    return np.arange(1, m + 1) / (m + 1.0)


class ConfidenceState:
    """Per-candidate games sharing one data stream.

    Strategies are cloned fresh per grid point; each observation advances all
    games by one round. Kept deliberately simple: the batch path in
    ``run_cs_batch`` is the high-throughput equivalent.
    """

    def __init__(self, mu_grid, strategy_factory, delta: float, running_intersect: bool = False):
        self.mu_grid = np.asarray(mu_grid, dtype=float)
        if self.mu_grid.ndim != 1 or not ((self.mu_grid > 0) & (self.mu_grid < 1)).all():
            raise ValueError("mu grid must be a 1-d array inside (0, 1)")
        self.delta = float(delta)
        self.running_intersect = running_intersect
        self.strategies = [strategy_factory(mu) for mu in self.mu_grid]
        self.threshold = math.log(1.0 / delta)
        self.log_wealth: list[np.ndarray] = []  # one (M,) row per round
        self._wealth = np.zeros(len(self.mu_grid))
        self._ever_out = np.zeros(len(self.mu_grid), dtype=bool)
        self._ever_out_rows: list[np.ndarray] = []

    @property
    def rounds(self) -> int:
        return len(self.log_wealth)

    def in_set(self, n: int) -> np.ndarray:
        """Membership mask of the confidence set after round ``n``."""
        if n == 0:
            return np.ones(len(self.mu_grid), dtype=bool)
        if self.running_intersect:
            return ~self._ever_out_rows[n - 1]
        return self.log_wealth[n - 1] <= self.threshold


def cs_update(state: ConfidenceState, x: float) -> ConfidenceState:
    """Advance every per-candidate game by one observation."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x={x} outside [0, 1]")
    lams = np.array([s.bet() for s in state.strategies])
    payoffs = np.maximum(1.0 + lams * (x - state.mu_grid), 0.0)
    with np.errstate(divide="ignore"):
        state._wealth = state._wealth + np.log(payoffs)
    for s in state.strategies:
        s.observe(x)
    state.log_wealth.append(state._wealth.copy())
    state._ever_out |= state._wealth > state.threshold
    state._ever_out_rows.append(state._ever_out.copy())
    return state


def cs_interval(state: ConfidenceState, n: int) -> tuple[float, float, int]:
    """Interval hull and size of the confidence set after round ``n``."""
    if n > state.rounds:
        raise ValueError(f"round {n} not played yet (have {state.rounds})")
    mask = state.in_set(n)
    alive = int(mask.sum())
    if alive == 0:
        return math.nan, math.nan, 0
    pts = state.mu_grid[mask]
    return float(pts.min()), float(pts.max()), alive


@dataclass(frozen=True)
class CsResult:
    """Full confidence-sequence trace over a data stream."""

    mu_grid: np.ndarray
    delta: float
    running_intersect: bool
    games: BatchGameResult
    in_set: np.ndarray  # (rounds, M) booleans

    def interval(self, n: int) -> tuple[float, float, int]:
        mask = self.in_set[n - 1] if n >= 1 else np.ones(len(self.mu_grid), dtype=bool)
        alive = int(mask.sum())
        if alive == 0:
            return math.nan, math.nan, 0
        pts = self.mu_grid[mask]
        return float(pts.min()), float(pts.max()), alive

    def intervals(self) -> list[tuple[int, float, float, int]]:
        return [(n, *self.interval(n)) for n in range(1, self.in_set.shape[0] + 1)]


def run_cs_batch(
    mu_grid,
    xs,
    strategy: str,
    delta: float,
    running_intersect: bool = False,
) -> CsResult:
    """Run the whole grid of games over one stream via the batch kernel."""
    mu_grid = np.asarray(mu_grid, dtype=float)
    xs = np.asarray(xs, dtype=float)
    tiled = np.broadcast_to(xs, (len(mu_grid), len(xs)))
    games = run_games_batch(mu_grid, tiled, strategy, delta)
    threshold = math.log(1.0 / delta)
    in_set = (games.log_wealth <= threshold).T.copy()
    if running_intersect:
        np.logical_and.accumulate(in_set, axis=0, out=in_set)
    return CsResult(
        mu_grid=mu_grid,
        delta=delta,
        running_intersect=running_intersect,
        games=games,
        in_set=in_set,
    )
