"""Multi-round coin-bets, e-processes, and the tree-based validity auditor.

The sequential mean hypothesis has a finite skeleton: measures whose
conditional laws are two-point mean-``mu`` measures. A depth-``T`` instance is
a full binary tree with one straddling pair per node; a bounded stopping time
acts on it as a pruned-tree mask. The stopped expectation of a payoff
sequence is a weighted sum over the mask's frontier, with the branch weights
``W(a,b) = (b-mu)/(b-a)``. Auditing an e-process means maximising that
stopped expectation over trees and masks: any value above 1 is a concrete
refutation; staying at or below 1 over the searched family is heuristic
certification.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .domain import SampleSpace, two_point_weight
from .errors import DepthTooLarge, OutOfRange
from .evariables import TabulatedEVariable, bet_bounds, beta_interval, check_evariable

MAX_MASK_DEPTH = 5
MAX_AUDIT_DEPTH = 4
MAX_EXHAUSTIVE = 200_000
STRADDLE_TOL = 1e-9


@dataclass(frozen=True)
class MultiRoundCoinBet:
    """Product of per-round coin-bets with history-dependent fractions.

    ``tables[t-1]`` maps each (t-1)-tuple of grid points to the fraction bet
    at round ``t``; the empty tuple keys the first round.
    """

    mu: float
    tables: tuple

    def __post_init__(self):
        lo, hi = bet_bounds(self.mu)
        for t, table in enumerate(self.tables, start=1):
            for prefix, lam in table.items():
                if len(prefix) != t - 1:
                    raise ValueError(f"round {t} table keyed by {len(prefix)}-tuples")
                if not lo <= lam <= hi:
                    raise OutOfRange(f"lambda={lam} at round {t} outside I_mu=[{lo}, {hi}]")

    @property
    def horizon(self) -> int:
        return len(self.tables)

    def lam(self, t: int, prefix) -> float:
        return self.tables[t - 1][tuple(prefix)]

    def value(self, xs) -> float:
        xs = tuple(xs)
        if len(xs) != self.horizon:
            raise ValueError(f"expected {self.horizon} observations, got {len(xs)}")
        out = 1.0
        for t, x in enumerate(xs, start=1):
            out *= max(1.0 + self.lam(t, xs[: t - 1]) * (x - self.mu), 0.0)
        return out


def eval_multiround(e: MultiRoundCoinBet, xs) -> float:
    return e.value(xs)


@dataclass(frozen=True)
class StoppingMask:
    """Pruned binary tree: ``children`` is None at a stopped node."""

    children: tuple["StoppingMask", "StoppingMask"] | None = None

    @property
    def is_stop(self) -> bool:
        return self.children is None

    @property
    def depth(self) -> int:
        if self.children is None:
            return 0
        return 1 + max(c.depth for c in self.children)

    def label(self) -> str:
        if self.children is None:
            return "s"
        return "(" + self.children[0].label() + self.children[1].label() + ")"


STOP = StoppingMask()


def full_mask(depth: int) -> StoppingMask:
    if depth == 0:
        return STOP
    child = full_mask(depth - 1)
    return StoppingMask((child, child))


def enumerate_masks(depth: int) -> list[StoppingMask]:
    """All pruned trees of depth at most ``depth``; grows as f(T)=1+f(T-1)^2."""
    if depth > MAX_MASK_DEPTH:
        raise DepthTooLarge(f"mask enumeration capped at depth {MAX_MASK_DEPTH}")
    if depth < 0:
        raise ValueError("depth must be non-negative")
    masks = [STOP]
    for _ in range(depth):
        masks = [STOP] + [StoppingMask((l, r)) for l in masks for r in masks]
    return masks


@dataclass(frozen=True)
class TreeHypothesis:
    """Heap-ordered straddling pairs defining one two-point branching tree."""

    mu: float
    pairs: tuple[tuple[float, float], ...]

    def __post_init__(self):
        n = len(self.pairs)
        if n == 0 or n & (n + 1):  # must be 2^depth - 1
            raise ValueError(f"{n} pairs do not form a full binary tree")
        for a, b in self.pairs:
            if not (a - STRADDLE_TOL <= self.mu <= b + STRADDLE_TOL):
                raise ValueError(f"pair ({a}, {b}) does not straddle mu={self.mu}")

    @property
    def depth(self) -> int:
        return (len(self.pairs) + 1).bit_length() - 1

    def weight(self, node: int) -> float:
        a, b = self.pairs[node]
        return two_point_weight(a, b, self.mu)


def _payoff_fn(payoffs):
    """Normalise payoff input: an e-process-like object or per-depth callables."""
    if hasattr(payoffs, "value"):
        return payoffs.value
    seq = list(payoffs)
    return lambda prefix: seq[len(prefix)](prefix)


def tree_expectation(d: TreeHypothesis, mask: StoppingMask, payoffs) -> float:
    """Stopped expectation ``E_Q[f_tau]`` of the pruned tree ``(d, mask)``.

    ``payoffs`` is either an object with ``.value(prefix)`` or a sequence of
    per-depth callables ``f_t``. Weight-zero branches are never evaluated, so
    a degenerate ``(mu, mu)`` node routes all mass to its first child.
    """
    if mask.depth > d.depth:
        raise ValueError(f"mask depth {mask.depth} exceeds tree depth {d.depth}")
    value = _payoff_fn(payoffs)

    def walk(node: int, prefix: tuple, m: StoppingMask) -> float:
        if m.is_stop:
            return float(value(prefix))
        a, b = d.pairs[node]
        w = d.weight(node)
        out = 0.0
        if w > 0.0:
            out += w * walk(2 * node + 1, prefix + (a,), m.children[0])
        if w < 1.0:
            out += (1.0 - w) * walk(2 * node + 2, prefix + (b,), m.children[1])
        return out

    return walk(0, (), mask)


@dataclass(frozen=True)
class EProcess:
    """Rule assigning a non-negative value to every prefix up to ``max_depth``."""

    mu: float
    evaluator: object  # callable, tuple -> float
    max_depth: int
    space: SampleSpace | None = None

    def __post_init__(self):
        e0 = self.value(())
        if e0 > 1.0 + 1e-12:
            raise ValueError(f"initial value {e0} exceeds 1")

    def value(self, prefix) -> float:
        prefix = tuple(prefix)
        if len(prefix) > self.max_depth:
            raise ValueError(f"prefix longer than max depth {self.max_depth}")
        v = float(self.evaluator(prefix))
        if v < 0.0 or math.isnan(v):
            raise ValueError(f"e-process value {v} at {prefix} is not non-negative")
        return v

    def scale_at(self, depth: int, factor: float) -> "EProcess":
        base = self.evaluator
        return EProcess(
            mu=self.mu,
            evaluator=lambda p: (factor if len(p) == depth else 1.0) * base(p),
            max_depth=self.max_depth,
            space=self.space,
        )


def coinbet_eprocess(bet: MultiRoundCoinBet, space: SampleSpace | None = None) -> EProcess:
    """Wealth process of a multi-round coin-bet (a martingale, hence an e-process)."""

    def value(prefix):
        out = 1.0
        for t, x in enumerate(prefix, start=1):
            out *= max(1.0 + bet.lam(t, prefix[: t - 1]) * (x - bet.mu), 0.0)
        return out

    return EProcess(mu=bet.mu, evaluator=value, max_depth=bet.horizon, space=space)


def constant_eprocess(mu: float, level: float = 1.0, max_depth: int = 8) -> EProcess:
    return EProcess(mu=mu, evaluator=lambda p: level, max_depth=max_depth)


def eprocess_from_tables(mu: float, tables: dict, space: SampleSpace | None = None) -> EProcess:
    """E-process given by explicit per-prefix values.

    ``tables`` maps tuples of grid points (the empty tuple included) to
    values; the maximum key length sets the depth.
    """
    values = {tuple(k): float(v) for k, v in tables.items()}
    if () not in values:
        raise ValueError("tables must include the empty prefix")
    max_depth = max(len(k) for k in values)

    def evaluate(prefix):
        try:
            return values[prefix]
        except KeyError:
            raise ValueError(f"e-process table has no entry for prefix {prefix}") from None

    return EProcess(mu=mu, evaluator=evaluate, max_depth=max_depth, space=space)


def eprocess_from_csv(path: str, mu: float) -> EProcess:
    """Load a ``depth,path,value`` CSV (path = comma-joined grid points)."""
    tables = {}
    points = set()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"depth", "path", "value"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected CSV columns depth,path,value")
        for row in reader:
            depth = int(row["depth"])
            prefix = tuple(float(p) for p in row["path"].split(",")) if row["path"] else ()
            if len(prefix) != depth:
                raise ValueError(f"{path}: path {row['path']!r} does not have depth {depth}")
            points.update(prefix)
            tables[prefix] = float(row["value"])
    space = None
    if {0.0, 1.0} <= points:
        space = SampleSpace(tuple(sorted(points)), mu)
    return eprocess_from_tables(mu, tables, space=space)


def eprocess_to_csv(e: EProcess, space: SampleSpace, depth: int, fh) -> None:
    """Tabulate an e-process on all grid prefixes up to ``depth``."""
    writer = csv.writer(fh)
    writer.writerow(["depth", "path", "value"])
    for t in range(depth + 1):
        for prefix in itertools.product(space.points, repeat=t):
            writer.writerow([t, ",".join(repr(p) for p in prefix), repr(e.value(prefix))])


@dataclass(frozen=True)
class AuditReport:
    max_expectation: float
    argmax_tree: TreeHypothesis
    argmax_mask: StoppingMask
    passed: bool
    n_trees: int
    exhaustive_complete: bool
    tol: float = 1e-9

    def as_dict(self) -> dict:
        return {
            "max": self.max_expectation,
            "d": [list(p) for p in self.argmax_tree.pairs],
            "mask": self.argmax_mask.label(),
            "pass": self.passed,
        }


def _straddling_pairs(points, mu) -> list[tuple[float, float]]:
    pts = sorted(set(float(p) for p in points))
    lows = [p for p in pts if p <= mu + STRADDLE_TOL]
    highs = [p for p in pts if p >= mu - STRADDLE_TOL]
    return [(a, b) for a in lows for b in highs if a <= b]


def _max_over_masks(d: TreeHypothesis, e: EProcess, budget: int):
    """Maximum stopped expectation over all masks of depth <= budget, with argmax.

    Masks decide stop/branch per node independently and the branch weights are
    non-negative, so the maximum distributes over the recursion. Unreachable
    (weight-zero) subtrees are treated as stopped.
    """

    def walk(node: int, prefix: tuple, budget: int):
        stop_val = e.value(prefix)
        if budget == 0 or node >= len(d.pairs):
            return stop_val, STOP
        a, b = d.pairs[node]
        w = d.weight(node)
        branch_val = 0.0
        left_mask = right_mask = STOP
        if w > 0.0:
            v, left_mask = walk(2 * node + 1, prefix + (a,), budget - 1)
            branch_val += w * v
        if w < 1.0:
            v, right_mask = walk(2 * node + 2, prefix + (b,), budget - 1)
            branch_val += (1.0 - w) * v
        if branch_val > stop_val:
            return branch_val, StoppingMask((left_mask, right_mask))
        return stop_val, STOP

    return walk(0, (), budget)


def audit_eprocess(
    e: EProcess,
    depth: int,
    coarse_grid=None,
    n_random: int = 1000,
    seed: int = 0,
    tol: float = 1e-9,
) -> AuditReport:
    """Search trees x masks for a stopped expectation above 1.

    The tree coefficients range over an exhaustive grid of straddling pairs
    built from ``coarse_grid`` (default {0, mu, 1}), capped at
    ``MAX_EXHAUSTIVE`` tuples, plus ``n_random`` tuples sampled uniformly from
    the e-process's sample space (or from [0,1] if it has none). A reported
    violation is always real; a pass certifies only the searched family.
    """
    if depth > MAX_AUDIT_DEPTH:
        raise DepthTooLarge(f"audit capped at depth {MAX_AUDIT_DEPTH}")
    if depth > e.max_depth:
        raise ValueError(f"e-process only defined to depth {e.max_depth}")
    mu = e.mu
    if coarse_grid is None:
        coarse_grid = (0.0, mu, 1.0)
    pairs = _straddling_pairs(coarse_grid, mu)
    if not pairs:
        raise ValueError("coarse grid has no pairs straddling mu")
    n_nodes = 2**depth - 1

    candidates = []
    exhaustive_complete = len(pairs) ** n_nodes <= MAX_EXHAUSTIVE
    if exhaustive_complete:
        candidates.extend(itertools.product(pairs, repeat=n_nodes))

    rng = np.random.default_rng(seed)
    if e.space is not None:
        pts = np.asarray(e.space.points)
        lows = pts[pts <= mu + STRADDLE_TOL]
        highs = pts[pts >= mu - STRADDLE_TOL]
        a_draws = rng.choice(lows, size=(n_random, n_nodes))
        b_draws = rng.choice(highs, size=(n_random, n_nodes))
    else:
        a_draws = rng.uniform(0.0, mu, size=(n_random, n_nodes))
        b_draws = rng.uniform(mu, 1.0, size=(n_random, n_nodes))
    for i in range(n_random):
        candidates.append(tuple(zip(a_draws[i].tolist(), b_draws[i].tolist())))

    best_val = -math.inf
    best_tree = best_mask = None
    for cand in candidates:
        tree = TreeHypothesis(mu=mu, pairs=tuple((min(a, b), max(a, b)) for a, b in cand))
        val, mask = _max_over_masks(tree, e, depth)
        if val > best_val:
            best_val, best_tree, best_mask = val, tree, mask

    return AuditReport(
        max_expectation=best_val,
        argmax_tree=best_tree,
        argmax_mask=best_mask,
        passed=best_val <= 1.0 + tol,
        n_trees=len(candidates),
        exhaustive_complete=exhaustive_complete,
        tol=tol,
    )


@dataclass(frozen=True)
class T2Refutation:
    """Depth-2 tree whose stopped expectation of the table exceeds 1."""

    tree: TreeHypothesis
    expectation: float


@dataclass(frozen=True)
class T2DominationResult:
    certified: bool
    coinbet: MultiRoundCoinBet | None = None
    refutation: T2Refutation | None = None


def dominate_T2(values, space: SampleSpace) -> T2DominationResult:
    """Dominate a two-round table by a coin-bet pair, or refute it.

    For each first observation ``x`` the conditional worst-case expectation
    ``m(x) = max_Q E_Q[e(x, .)]`` over two-point mean-``mu`` measures must be
    dominated by a first-round coin-bet; dividing it out leaves per-``x``
    single-round tables for the second fraction. If ``m`` itself fails the
    single-round validity check, its witness pair plus the conditional
    maximisers assemble a depth-2 tree with expectation above 1.
    """
    pts = space.as_array()
    mu = space.mu
    vals = np.asarray(values, dtype=float)
    n = len(pts)
    if vals.shape != (n, n):
        raise ValueError(f"expected a {n}x{n} table")
    if (vals < 0.0).any() or not np.isfinite(vals).all():
        raise ValueError("table values must be finite and non-negative")

    at = np.abs(pts - mu) <= STRADDLE_TOL
    below = (pts < mu) & ~at
    above = (pts > mu) & ~at

    # Conditional envelope m(x) with, per row, the maximising two-point measure.
    m = np.full(n, -np.inf)
    arg_pair: list[tuple[float, float] | None] = [None] * n
    if at.any():
        at_cols = vals[:, at]
        m = at_cols.max(axis=1)
        at_pts = pts[at]
        arg_pair = [
            (float(at_pts[j]), float(at_pts[j])) for j in at_cols.argmax(axis=1)
        ]
    if below.any() and above.any():
        a = pts[below][:, None]
        b = pts[above][None, :]
        w = (b - mu) / (b - a)
        pair_exp = (
            w[None, :, :] * vals[:, below][:, :, None]
            + (1.0 - w)[None, :, :] * vals[:, above][:, None, :]
        )
        flat = pair_exp.reshape(n, -1)
        best = flat.argmax(axis=1)
        for i in range(n):
            if flat[i, best[i]] > m[i]:
                m[i] = flat[i, best[i]]
                ia, ib = np.unravel_index(best[i], w.shape)
                arg_pair[i] = (float(a[ia, 0]), float(b[0, ib]))

    m_table = TabulatedEVariable(space, tuple(float(v) for v in m))
    report = check_evariable(m_table)
    if not report.valid:
        root = report.witness
        idx = {float(p): i for i, p in enumerate(pts)}
        left = arg_pair[idx[root.a]]
        right = arg_pair[idx[root.b]]
        tree = TreeHypothesis(
            mu=mu,
            pairs=(
                (min(root.a, root.b), max(root.a, root.b)),
                (min(left), max(left)),
                (min(right), max(right)),
            ),
        )
        return T2DominationResult(
            certified=False,
            refutation=T2Refutation(tree=tree, expectation=report.expectation),
        )

    lam1 = beta_interval(m_table).lambda_hat
    lam2 = {}
    for i, x in enumerate(pts):
        denom = 1.0 + lam1 * (x - mu)
        if denom <= 0.0:
            lam2[(float(x),)] = 0.0
            continue
        row = TabulatedEVariable(space, tuple(float(v) for v in vals[i] / denom))
        lam2[(float(x),)] = beta_interval(row).lambda_hat
    coinbet = MultiRoundCoinBet(mu=mu, tables=({(): lam1}, lam2))
    return T2DominationResult(certified=True, coinbet=coinbet)
