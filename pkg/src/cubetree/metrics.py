"""Lower bounds and analytic constants for tree cubicity.

``rho(T)`` is the maximum over balls ``B(v, r)`` of ``log(|B|/2) / log(2r+1)``.
Its value is irrational in general, so each candidate ball is kept as the
integer pair ``(|B|, r)`` and every ceiling derived from it is decided with
exact integer powers.  Floats are used for display and to shortlist
candidates; near-ties are ordered with high-precision logarithms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from fractions import Fraction

import mpmath
import numpy as np

from .tree import RootedTree

# 22.77, kept exact for the dimension budget ceiling
BUDGET_NUM = 2277
BUDGET_DEN = 100

EXACT_RHO_CAP = 20000
DEFAULT_RHO_SAMPLES = 512

_SHORTLIST_SLACK = 1e-9


def _ceil_log_ratio(ball: int, r: int, num: int = 1, den: int = 1) -> int:
    """Smallest integer m >= 0 with num/den * log(ball/2)/log(2r+1) <= m.

    Equivalent to ``(ball/2)**num <= (2r+1)**(den*m)``, compared on integers.
    """
    if ball <= 2:
        return 0
    base = 2 * r + 1
    guess = max(0, math.ceil(num / den * math.log(ball / 2) / math.log(base)) - 1)
    lhs = ball ** num
    # (ball/2)^num <= base^(den*m)  <=>  ball^num <= 2^num * base^(den*m)
    two = 1 << num
    m = guess
    while lhs > two * base ** (den * m):
        m += 1
    while m > 0 and lhs <= two * base ** (den * (m - 1)):
        m -= 1
    return m


def ball_ratio(ball: int, r: int) -> float:
    return math.log(ball / 2) / math.log(2 * r + 1)


def _precise_ratio(ball: int, r: int):
    with mpmath.workdps(60):
        return mpmath.log(mpmath.mpf(ball) / 2) / mpmath.log(2 * r + 1)


@dataclass(frozen=True)
class RhoResult:
    value: float
    witness_vertex: int | None
    witness_radius: int | None
    ball_size: int | None
    exact_flag: bool
    ceil: int = 0          # ceil(rho), exact
    ceil_budget: int = 0   # ceil(22.77 * rho), exact
    centers_examined: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def iter_ball_tables(tree: RootedTree, centers: np.ndarray, batch: int | None = None):
    """Yield ``(chunk, table)`` with ``table[i, r] = |B(chunk[i], r)|`` for ``0 <= r <= diam``."""
    diam = tree.diameter()
    width = diam + 1
    if batch is None:
        batch = max(1, min(4_000_000 // max(tree.n, 1), 8_000_000 // width))
    everyone = np.arange(tree.n, dtype=np.int64)
    for s in range(0, len(centers), batch):
        chunk = np.asarray(centers[s: s + batch], dtype=np.int64)
        b = len(chunk)
        d = tree.dist_many(np.repeat(chunk, tree.n), np.tile(everyone, b))
        rows = np.repeat(np.arange(b), tree.n)
        counts = np.bincount(rows * width + d, minlength=b * width).reshape(b, width)
        yield chunk, np.cumsum(counts, axis=1)


def compute_rho(tree: RootedTree, mode: str = "auto", samples: int = DEFAULT_RHO_SAMPLES,
                seed: int = 0, exact_cap: int = EXACT_RHO_CAP) -> RhoResult:
    """rho(T) over all centers (exact) or a seeded sample of centers.

    ``mode`` is ``"exact"``, ``"sampled"`` or ``"auto"`` (exact up to
    ``exact_cap`` vertices).  A sampled maximum is still a valid lower-bound
    witness because every single ball certifies a bound on its own.
    """
    if tree.n < 2:
        return RhoResult(0.0, None, None, None, True)
    if mode == "auto":
        mode = "exact" if tree.n <= exact_cap else "sampled"
    if mode == "exact":
        centers = np.arange(tree.n, dtype=np.int64)
    elif mode == "sampled":
        rng = np.random.default_rng(seed)
        k = min(samples, tree.n)
        centers = np.sort(rng.choice(tree.n, size=k, replace=False)).astype(np.int64)
    else:
        raise ValueError(f"unknown rho mode {mode!r}")
    exact = mode == "exact" or len(centers) == tree.n

    best = -math.inf
    # shortlist: distinct (|B|, r) near the running maximum, first center attaining each
    shortlist: dict[tuple[int, int], tuple[float, int]] = {}
    for chunk, table in iter_ball_tables(tree, centers):
        diam = table.shape[1] - 1
        radii = np.arange(1, diam + 1)
        balls = table[:, 1:]
        ratios = np.log(balls / 2.0) / np.log(2.0 * radii + 1.0)
        best = max(best, float(ratios.max()))
        rows, cols = np.nonzero(ratios >= best - _SHORTLIST_SLACK)
        for i, j in zip(rows.tolist(), cols.tolist()):
            key = (int(balls[i, j]), int(radii[j]))
            v = int(chunk[i])
            if key not in shortlist or v < shortlist[key][1]:
                shortlist[key] = (float(ratios[i, j]), v)
    shortlist = {k: v for k, (x, v) in shortlist.items() if x >= best - _SHORTLIST_SLACK}
    precise = {k: _precise_ratio(*k) for k in shortlist}
    top = max(precise.values())
    eps = mpmath.mpf(10) ** -45
    # among exact ties keep the smallest vertex, then the smallest radius
    v, r, ball = min((shortlist[k], k[1], k[0]) for k in shortlist if abs(precise[k] - top) < eps)
    ceil_rho = max(_ceil_log_ratio(b, rr) for (b, rr) in shortlist)
    ceil_budget = max(_ceil_log_ratio(b, rr, BUDGET_NUM, BUDGET_DEN) for (b, rr) in shortlist)
    return RhoResult(
        value=ball_ratio(ball, r), witness_vertex=v, witness_radius=r, ball_size=ball,
        exact_flag=exact, ceil=ceil_rho, ceil_budget=ceil_budget, centers_examined=len(centers),
    )


def dimension_budget(rho) -> int:
    """t = ceil(22.77 * rho) + 2, using the exact witness ceiling when available."""
    if isinstance(rho, RhoResult):
        return rho.ceil_budget + 2
    value = Fraction(rho)
    if value < 0:
        raise ValueError("rho must be non-negative")
    return math.ceil(Fraction(BUDGET_NUM, BUDGET_DEN) * value) + 2


def independence_number(tree: RootedTree) -> int:
    take = [1] * tree.n
    skip = [0] * tree.n
    parent = tree.parent.tolist()
    for v in reversed(tree.order.tolist()):
        p = parent[v]
        if p >= 0:
            take[p] += skip[v]
            skip[p] += max(take[v], skip[v])
    return max(take[tree.root], skip[tree.root])


def general_lower_bound(alpha: int, diam: int) -> int:
    """ceil(log alpha / log(diam + 1)) decided on integers."""
    if alpha < 1 or diam < 1:
        raise ValueError("alpha and diam must be >= 1")
    k = 0
    while (diam + 1) ** k < alpha:
        k += 1
    return k


def structural_lower_bound(tree: RootedTree) -> int:
    if tree.n <= 2:
        return 0
    return 1 if tree.is_path() else 2


@dataclass(frozen=True)
class BoundsReport:
    rho: RhoResult
    lb_rho: int
    lb_structural: int
    lb_volume: int
    lb_final: int
    t: int
    alpha: int
    diameter: int
    n: int
    height: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rho"] = self.rho.to_dict()
        return d

    def to_text(self) -> str:
        r = self.rho
        witness = "none" if r.witness_vertex is None else f"v={r.witness_vertex} r={r.witness_radius} |B|={r.ball_size}"
        lines = [
            f"n                 {self.n}",
            f"height            {self.height}",
            f"diameter          {self.diameter}",
            f"rho               {r.value:.6f}  ({'exact' if r.exact_flag else 'sampled'}; {witness})",
            f"ceil(rho)         {self.lb_rho}",
            f"structural bound  {self.lb_structural}",
            f"alpha             {self.alpha}",
            f"volume bound      {self.lb_volume}",
            f"lower bound       {self.lb_final}",
            f"budget t          {self.t}",
        ]
        return "\n".join(lines) + "\n"


def cubicity_lower_bound(tree: RootedTree, rho: RhoResult | None = None) -> BoundsReport:
    if rho is None:
        rho = compute_rho(tree)
    alpha = independence_number(tree)
    diam = tree.diameter()
    lb2 = general_lower_bound(alpha, diam) if diam >= 1 else 0
    lb_s = structural_lower_bound(tree)
    return BoundsReport(
        rho=rho, lb_rho=rho.ceil, lb_structural=lb_s, lb_volume=lb2,
        lb_final=max(rho.ceil, lb_s, lb2), t=dimension_budget(rho),
        alpha=alpha, diameter=diam, n=tree.n, height=tree.height,
    )


def binom_unsep_prob(l: int) -> Fraction:
    """P(|X| <= 1) for X a sum of l independent uniform +-1 variables."""
    if l < 1:
        raise ValueError("l must be >= 1")
    if l % 2 == 0:
        return Fraction(math.comb(l, l // 2), 1 << l)
    return Fraction(2 * math.comb(l, (l - 1) // 2), 1 << l)


def unsep_within_bound(l: int) -> bool:
    """Exact check of binom_unsep_prob(l) <= 1.61 / sqrt(l)."""
    p = binom_unsep_prob(l)
    return p * p * l <= Fraction(161, 100) ** 2


def separation_union_bound(h_i: int, rho: float, t: int) -> float:
    """Union bound 8(6h^4+1)^rho (4h^2+1)^rho (1.61/sqrt(h/4))^t for h = h_i."""
    if h_i < 2:
        raise ValueError("h_i must be >= 2")
    h1 = h_i ** 2
    h2 = h_i ** 4
    log_val = (math.log(8) + rho * (math.log(6 * h2 + 1) + math.log(4 * h1 + 1))
               + t * (math.log(1.61) - 0.5 * math.log(h_i / 4)))
    if log_val > 700:
        return math.inf
    return math.exp(log_val)


@dataclass(frozen=True)
class GrowthRate:
    value: float
    vertex: int
    radius: int


def growth_rate(tree: RootedTree) -> GrowthRate:
    """max over v and integer r in [2, max(2, diam)] of log|B(v,r)| / log r."""
    if tree.n < 2:
        raise ValueError("growth rate needs at least two vertices")
    best = (-math.inf, 0, 0)
    for chunk, table in iter_ball_tables(tree, np.arange(tree.n, dtype=np.int64)):
        diam = table.shape[1] - 1
        radii = np.arange(2, max(2, diam) + 1)
        balls = table[:, np.minimum(radii, diam)]
        ratios = np.log(balls) / np.log(radii)
        i, j = np.unravel_index(int(np.argmax(ratios)), ratios.shape)
        if ratios[i, j] > best[0]:
            best = (float(ratios[i, j]), int(chunk[i]), int(radii[j]))
    return GrowthRate(*best)
