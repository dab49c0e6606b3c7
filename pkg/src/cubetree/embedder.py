"""Randomised decompose-and-extend construction of cube representations.

Four weight blocks are built.  The even chain starts from base cases on the
pieces of level ``e`` and extends down to level 0.  The odd chain starts at
level ``o``, stops at level 1 and zero-fills the remaining cut edges.  Each
chain runs once for family A and once for family B.  All randomness is
uniform ``+-1``; every draw is checked exactly, and any pair that stays
unseparated gets a redraw.

Base cases and extensions share one engine, ``_settle``.  It draws the
designated random edges of every piece, finds the close pairs whose distance
is at or above a threshold, and redraws until every piece passes.  After
``retry_cap`` failed rounds, or when a violating path has no redrawable edge,
the piece gets ``ceil(width / 2)`` extra coordinates.  The actual width of a
block is always reported.
"""
from __future__ import annotations

import logging
import math
import time
from collections import Counter
from dataclasses import dataclass, field, asdict
from fractions import Fraction

import numpy as np

from . import metrics
from .decomposition import FAITHFUL_BASE, Ladder, LevelFamilies, build_ladder, decompose, families
from .representation import (
    Block, CubeRepresentation, Violation, WeightAssignment, prefix_sums, trim_dimensions, verify_spatial,
)
from .spatial import close_pairs
from .tree import RootedTree, apply_root_policy

log = logging.getLogger(__name__)

BLOCK_NAMES = ("A0", "B0", "A0'", "B0'")
MIN_SCALED_BASE = 16


class EmbedError(RuntimeError):
    pass


class RetryExhausted(EmbedError):
    def __init__(self, piece_root: int, t: int, stage: str = ""):
        super().__init__(f"piece rooted at {piece_root} not separated within the retry cap at t={t} ({stage})")
        self.piece_root = piece_root
        self.t = t
        self.stage = stage


class EscalationExhausted(EmbedError):
    def __init__(self, piece_root: int, width: int, stage: str = "", report: "EmbedReport | None" = None):
        super().__init__(f"piece rooted at {piece_root} still unseparated at width {width} after the "
                         f"maximum number of escalations ({stage})")
        self.piece_root = piece_root
        self.width = width
        self.stage = stage
        self.report = report


def parse_mode(mode: str) -> int:
    """Base-case height threshold for ``faithful`` or ``scaled:<H>``."""
    if mode == "faithful":
        return FAITHFUL_BASE
    if mode.startswith("scaled:"):
        try:
            base = int(mode.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad scaled mode {mode!r}") from None
        if base < MIN_SCALED_BASE or base & (base - 1):
            raise ValueError(f"scaled base height must be a power of two >= {MIN_SCALED_BASE}, got {base}")
        return base
    raise ValueError(f"mode must be 'faithful' or 'scaled:<H>', got {mode!r}")


def parse_check(check: str) -> int | None:
    """``None`` for exact checking, else the number of sampled pairs."""
    if check == "exact":
        return None
    if check.startswith("sampled:"):
        try:
            k = int(check.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad check mode {check!r}") from None
        if k < 1:
            raise ValueError("sample count must be >= 1")
        return k
    raise ValueError(f"check must be 'exact' or 'sampled:<count>', got {check!r}")


@dataclass(frozen=True)
class EmbedConfig:
    mode: str = "faithful"
    seed: int = 0
    t_override: int | None = None
    retry_cap: int = 32
    max_escalations: int = 4
    check: str = "exact"
    redraw: str = "violated"      # "violated": redraw edges on violating paths; "piece": whole piece
    trim: bool = False
    root: str = "center"
    pipeline_attempts: int = 3
    rho_mode: str = "auto"

    def __post_init__(self):
        parse_mode(self.mode)
        parse_check(self.check)
        if self.retry_cap < 1:
            raise ValueError("retry_cap must be >= 1")
        if self.max_escalations < 0:
            raise ValueError("max_escalations must be >= 0")
        if self.t_override is not None and self.t_override < 1:
            raise ValueError("t must be >= 1")
        if self.redraw not in ("violated", "piece"):
            raise ValueError("redraw must be 'violated' or 'piece'")
        if self.pipeline_attempts < 1:
            raise ValueError("pipeline_attempts must be >= 1")
        if not 0 <= self.seed < 1 << 64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def base(self) -> int:
        return parse_mode(self.mode)

    @property
    def samples(self) -> int | None:
        return parse_check(self.check)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EmbedReport:
    n: int
    h: int
    root: int
    mode: str
    seed: int
    rho: dict | None
    lb_final: int
    t: int | None
    dim: int
    verdict: str
    ratio: float
    ratio_exact: str
    shortcut: str | None = None
    ladder: dict | None = None
    extension_rounds: int = 0
    t_used: dict = field(default_factory=dict)
    stages: list = field(default_factory=list)
    escalations: list = field(default_factory=list)
    pieces: int = 0
    retries: int = 0
    mean_base_draws: float | None = None
    mean_extension_draws: float | None = None
    check: str = "exact"
    redraw: str = "violated"
    rho_sampled: bool = False
    pipeline_attempts: int = 1
    untrimmed_dim: int | None = None
    timings: dict = field(default_factory=dict)

    def to_dict(self, timings: bool = False) -> dict:
        d = asdict(self)
        if not timings:
            d.pop("timings")
        return d

    def to_text(self) -> str:
        rho = "-" if self.rho is None else f"{self.rho['value']:.6f}" + ("" if self.rho["exact_flag"] else " (sampled)")
        lines = [
            f"n                 {self.n}",
            f"height            {self.h}",
            f"rho               {rho}",
            f"lower bound       {self.lb_final}",
            f"t                 {self.t if self.t is not None else '-'}",
            f"dim               {self.dim}",
            f"ratio             {self.ratio_exact} ({self.ratio:.3f})",
            f"verdict           {self.verdict}",
        ]
        if self.shortcut:
            lines.append(f"shortcut          {self.shortcut}")
        else:
            lines += [
                f"mode              {self.mode}",
                f"extension rounds  {self.extension_rounds}",
                "block widths      " + " ".join(f"{k}={v}" for k, v in self.t_used.items()),
                f"pieces            {self.pieces}",
                f"retries           {self.retries}",
                f"escalations       {len(self.escalations)}",
                f"check             {self.check}",
            ]
            if self.mean_extension_draws is not None:
                lines.append(f"mean ext. draws   {self.mean_extension_draws:.3f}")
        return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# the shared draw / check / redraw engine


def _rng(key: tuple[int, ...]) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(x) for x in key]))


def _signs(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.integers(0, 2, size=shape, dtype=np.int8) * 2 - 1).astype(np.int8)


def sign_draw(key: tuple[int, ...], shape) -> np.ndarray:
    """The uniform +-1 sampler used for every edge draw, keyed like the pipeline."""
    return _signs(_rng(key), shape)


class _Panel:
    """Growable int8 weight matrix for one block; row v is the edge above v."""

    def __init__(self, n: int, t: int):
        self.W = np.zeros((n, t), dtype=np.int8)

    def ensure(self, cols: int) -> None:
        if cols > self.W.shape[1]:
            extra = np.zeros((self.W.shape[0], cols - self.W.shape[1]), dtype=np.int8)
            self.W = np.concatenate([self.W, extra], axis=1)

    def used(self, rows: np.ndarray | None = None) -> int:
        W = self.W if rows is None else self.W[rows]
        nz = np.nonzero(W.any(axis=0))[0]
        return int(nz[-1]) + 1 if len(nz) else 0


def _path_edges(parent: list[int], depth: list[int], u: int, v: int) -> list[int]:
    out = []
    while depth[u] > depth[v]:
        out.append(u)
        u = parent[u]
    while depth[v] > depth[u]:
        out.append(v)
        v = parent[v]
    while u != v:
        out.append(u)
        out.append(v)
        u, v = parent[u], parent[v]
    return out


def _far_close_pairs(tree: RootedTree, S: np.ndarray, vertices: np.ndarray, groups: np.ndarray,
                     threshold: int) -> np.ndarray:
    """Same-group pairs among ``vertices`` at gap <= 1 and distance >= threshold."""
    if len(vertices) < 2:
        return np.empty((0, 2), dtype=np.int64)
    local = close_pairs(S[vertices], groups[vertices])
    if len(local) == 0:
        return local
    pairs = np.sort(vertices[local], axis=1)
    d = tree.dist_many(pairs[:, 0], pairs[:, 1])
    pairs = pairs[d >= max(threshold, 2)]
    return pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))] if len(pairs) else pairs


def _sampled_far_pairs(tree: RootedTree, S: np.ndarray, members: list[np.ndarray], pieces: list[int],
                       threshold: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample of same-piece pairs; returns the violating ones."""
    sizes = np.asarray([len(members[p]) for p in pieces], dtype=np.float64)
    weight = sizes * (sizes - 1) / 2
    if weight.sum() == 0:
        return np.empty((0, 2), dtype=np.int64)
    which = rng.choice(len(pieces), size=count, p=weight / weight.sum())
    sz = sizes[which].astype(np.int64)
    a = rng.integers(0, sz)
    b = rng.integers(0, sz - 1)
    b = b + (b >= a)
    flat = np.concatenate([members[p] for p in pieces])
    offs = np.concatenate([[0], np.cumsum(sizes.astype(np.int64))[:-1]])
    us, vs = flat[offs[which] + a], flat[offs[which] + b]
    d = tree.dist_many(us, vs)
    keep = d >= max(threshold, 2)
    us, vs = us[keep], vs[keep]
    if len(us) == 0:
        return np.empty((0, 2), dtype=np.int64)
    gap = np.abs(S[us].astype(np.int64) - S[vs]).max(axis=1) if S.shape[1] else np.zeros(len(us))
    bad = gap <= 1
    pairs = np.sort(np.stack([us[bad], vs[bad]], axis=1), axis=1)
    if len(pairs):
        pairs = np.unique(pairs, axis=0)
    return pairs


@dataclass
class _StageStats:
    block: str
    kind: str
    level: int | None
    threshold: int
    pieces: int = 0
    drawing_pieces: int = 0
    checked_pieces: int = 0
    draws: Counter = field(default_factory=Counter)
    rounds: int = 0
    escalations: int = 0

    def to_dict(self) -> dict:
        total = sum(k * v for k, v in self.draws.items())
        count = sum(self.draws.values())
        return {
            "block": self.block, "kind": self.kind, "level": self.level, "threshold": self.threshold,
            "pieces": self.pieces, "drawing_pieces": self.drawing_pieces, "checked_pieces": self.checked_pieces,
            "rounds": self.rounds, "escalations": self.escalations,
            "draws_histogram": {str(k): v for k, v in sorted(self.draws.items())},
            "mean_draws": (total / count) if count else None,
        }


def _settle(tree: RootedTree, panel: _Panel, fam: LevelFamilies, fresh: np.ndarray, threshold: int, t: int,
            *, key: tuple[int, ...], retry_cap: int, max_escalations: int, redraw: str,
            samples: int | None, stats: _StageStats, events: list, stage: str,
            retry_error: bool = False) -> None:
    """Draw ``fresh`` edges of each piece uniformly and redraw until every piece passes.

    A piece passes when none of its pairs at distance ``>= threshold`` (and
    ``>= 2``) has l-infinity gap ``<= 1``.
    """
    parent = tree.parent.tolist()
    depth = tree.depth.tolist()
    members = fam.members
    stats.pieces = fam.count
    edges = [fam.edges_in(p) for p in range(fam.count)]
    fresh_of = [e[fresh[e]] for e in edges]
    esc_cols: list[list[int]] = [[] for _ in range(fam.count)]
    draws = np.zeros(fam.count, dtype=np.int64)
    since = np.zeros(fam.count, dtype=np.int64)
    escalated = np.zeros(fam.count, dtype=np.int64)
    counter = np.zeros(fam.count, dtype=np.int64)
    roots = fam.roots.tolist()

    def rng(p: int, kind: int) -> np.random.Generator:
        counter[p] += 1
        return _rng(key + (roots[p], kind, int(counter[p])))

    # a piece whose diameter is below the threshold has nothing to check
    checkable = [p for p in range(fam.count) if 2 * int(fam.heights[p]) >= max(threshold, 2)]
    for p in range(fam.count):
        if len(fresh_of[p]):
            panel.W[fresh_of[p], :t] = _signs(rng(p, 0), (len(fresh_of[p]), t))
            draws[p] = 1
    stats.drawing_pieces = int(np.count_nonzero(draws))
    stats.checked_pieces = len(checkable)
    pending = checkable
    is_fresh = fresh

    def redraw_edges(p: int, targets: np.ndarray) -> None:
        g = rng(p, 1)
        f = targets[is_fresh[targets]]
        if len(f):
            panel.W[f, :t] = _signs(g, (len(f), t))
        if esc_cols[p]:
            cols = np.asarray(esc_cols[p])
            panel.W[np.ix_(targets, cols)] = _signs(g, (len(targets), len(cols)))

    rounds = 0
    while pending:
        rounds += 1
        width = max(panel.used(), 1)
        S = prefix_sums(tree, panel.W[:, :width])
        if samples is None:
            verts = np.concatenate([members[p] for p in pending])
            bad = _far_close_pairs(tree, S, verts, fam.piece_of, threshold)
        else:
            g = _rng(key + (1 << 32, rounds))
            bad = _sampled_far_pairs(tree, S, members, pending, threshold, samples, g)
        if len(bad) == 0:
            break
        owner = fam.piece_of[bad[:, 0]]
        nxt = []
        for p in np.unique(owner).tolist():
            viol = bad[owner == p]
            randomizable = fresh_of[p] if not esc_cols[p] else edges[p]
            rset = set(randomizable.tolist())
            touched: set[int] = set()
            fixable = True
            for u, v in viol.tolist():
                path = [x for x in _path_edges(parent, depth, u, v) if x in rset]
                if not path:
                    fixable = False
                    break
                touched.update(path)
            since[p] += 1
            if not fixable or since[p] > retry_cap:
                width_p = max(panel.used(edges[p]), t)
                if escalated[p] >= max_escalations:
                    if retry_error:
                        raise RetryExhausted(roots[p], width_p, stage)
                    raise EscalationExhausted(roots[p], width_p, stage)
                extra = math.ceil(width_p / 2)
                panel.ensure(width_p + extra)
                cols = list(range(width_p, width_p + extra))
                panel.W[np.ix_(edges[p], np.asarray(cols))] = _signs(rng(p, 2), (len(edges[p]), extra))
                esc_cols[p].extend(cols)
                escalated[p] += 1
                since[p] = 0
                stats.escalations += 1
                event = {"stage": stage, "piece_root": roots[p], "piece_size": int(fam.sizes[p]),
                         "from_width": width_p, "to_width": width_p + extra,
                         "reason": "unfixable" if not fixable else "retry_cap"}
                events.append(event)
                log.info("escalation %s", event)
            else:
                targets = randomizable if redraw == "piece" else np.asarray(sorted(touched), dtype=np.int64)
                redraw_edges(p, targets)
            draws[p] += 1
            nxt.append(p)
        pending = nxt
    stats.rounds = rounds
    for p in range(fam.count):
        if draws[p]:
            stats.draws[int(draws[p])] += 1


# ----------------------------------------------------------------------
# public building blocks


def _nonroot(tree: RootedTree) -> np.ndarray:
    m = np.ones(tree.n, dtype=bool)
    m[tree.root] = False
    return m


def base_case_embed(tree: RootedTree, t: int, seed: int = 0, retry_cap: int = 32,
                    redraw: str = "violated") -> WeightAssignment:
    """Uniform ``+-1`` weights in ``t`` dimensions separating every non-adjacent pair.

    Raises ``RetryExhausted`` if ``retry_cap`` redraw rounds do not suffice.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    fam = decompose(tree, None, "A")
    panel = _Panel(tree.n, t)
    stats = _StageStats("base", "base", None, 2)
    _settle(tree, panel, fam, _nonroot(tree), 2, t, key=(seed, 0), retry_cap=retry_cap,
            max_escalations=0, redraw=redraw, samples=None, stats=stats, events=[], stage="base",
            retry_error=True)
    return WeightAssignment.total(tree, panel.W[:, :t].astype(np.int64))


def check_far_pairs(tree: RootedTree, S: np.ndarray, threshold: int, members: np.ndarray | None = None,
                    check: str = "exact", seed: int = 0) -> Violation | None:
    """First pair (lexicographic) at distance >= threshold with gap <= 1, or ``None``.

    ``members`` restricts the check to one piece.  Sampled mode inspects a
    uniform sample of pairs, so ``None`` there means no violation was seen.
    """
    if threshold < 2:
        raise ValueError("threshold must be >= 2")
    S = np.asarray(S)
    verts = np.arange(tree.n, dtype=np.int64) if members is None else np.asarray(members, dtype=np.int64)
    groups = np.zeros(tree.n, dtype=np.int64)
    samples = parse_check(check)
    if samples is None:
        bad = _far_close_pairs(tree, S, verts, groups, threshold)
    else:
        bad = _sampled_far_pairs(tree, S, [verts], [0], threshold, samples, _rng((seed, 7)))
    if len(bad) == 0:
        return None
    u, v = (int(x) for x in bad[0])
    gap = np.abs(S[u].astype(object) - S[v]).max() if S.shape[1] else 0
    return Violation("spurious_intersection", u, v, Fraction(gap), None)


def extend_level(W: WeightAssignment, coarse: LevelFamilies, t: int, threshold: int, seed: int = 0,
                 retry_cap: int = 32, check: str = "exact", redraw: str = "violated") -> WeightAssignment:
    """Extend ``W`` (defined off the finer cut set) to the coarser family's edges.

    Kept edges copy ``W``; every edge that is cut at the finer level but not in
    ``coarse`` gets a uniform ``+-1`` vector, redrawn until each coarse piece
    separates its pairs at distance >= ``threshold``.
    """
    tree = W.tree
    nonroot = _nonroot(tree)
    if np.any(W.defined & coarse.cut):
        raise ValueError("inconsistent cut sets: an edge cut at the coarse level is defined at the finer level")
    if W.dim < t:
        raise ValueError("weight dimension is below t")
    if any(x not in (-1, 0, 1) for x in W.weights.ravel().tolist()):
        raise ValueError("weights must lie in {-1, 0, +1}")
    panel = _Panel(tree.n, W.dim)
    panel.W[:] = np.where(W.defined[:, None], W.weights.astype(np.int64), 0).astype(np.int8)
    fresh = nonroot & ~W.defined & ~coarse.cut
    stats = _StageStats("ext", "extend", coarse.level, threshold)
    _settle(tree, panel, coarse, fresh, threshold, t, key=(seed, 1), retry_cap=retry_cap, max_escalations=0,
            redraw=redraw, samples=parse_check(check), stats=stats, events=[], stage="extend",
            retry_error=True)
    defined = nonroot & ~coarse.cut
    return WeightAssignment(tree, panel.W.astype(np.int64), defined)


def zero_fill(W: WeightAssignment, cut: np.ndarray) -> WeightAssignment:
    """Put the zero vector on the edges of ``cut`` (child-endpoint mask)."""
    tree = W.tree
    expected = _nonroot(tree) & ~np.asarray(cut, dtype=bool)
    if not np.array_equal(W.defined, expected):
        raise ValueError("domain mismatch: weights must be defined exactly off the cut edges")
    w = W.weights.copy()
    w[np.asarray(cut, dtype=bool)] = 0
    return WeightAssignment.total(tree, w, W.blocks)


# ----------------------------------------------------------------------
# pipeline


def _shortcut(tree: RootedTree) -> tuple[str, np.ndarray] | None:
    if tree.n <= 2:
        return "complete", np.zeros((tree.n, 0), dtype=np.int64)
    if tree.is_path():
        end = min(v for v in range(tree.n) if len(tree.children[v]) + (v != tree.root) == 1)
        return "path", tree.dist_from(end).astype(np.int64).reshape(-1, 1)
    return None


def _chain_levels(ladder: Ladder, odd: bool) -> tuple[int | None, int]:
    if odd:
        return ladder.o, 1
    return ladder.e, 0


def _build_block(tree: RootedTree, ladder: Ladder, t: int, odd: bool, fam_mode: str, name: str, cfg: EmbedConfig,
                 seed: int, stats: list, events: list) -> _Panel:
    panel = _Panel(tree.n, t)
    nonroot = _nonroot(tree)
    code = BLOCK_NAMES.index(name)
    start, stop = _chain_levels(ladder, odd)
    fam = families(tree, ladder, start, fam_mode)
    st = _StageStats(name, "base", start, 2)
    _settle(tree, panel, fam, nonroot & ~fam.cut, 2, t, key=(seed, code, 0, 0 if start is None else start + 1),
            retry_cap=cfg.retry_cap, max_escalations=cfg.max_escalations, redraw=cfg.redraw, samples=None,
            stats=st, events=events, stage=f"{name} base level {start}")
    stats.append(st)
    i = start
    while i is not None and i >= stop + 2:
        coarse = families(tree, ladder, i - 2, fam_mode)
        if np.any(coarse.cut & ~fam.cut):
            raise EmbedError(f"cut sets at levels {i - 2} and {i} are not nested")
        fresh = fam.cut & ~coarse.cut
        threshold = ladder.heights[i - 1]
        st = _StageStats(name, "extend", i - 2, threshold)
        _settle(tree, panel, coarse, fresh, threshold, t, key=(seed, code, 1, i + 1),
                retry_cap=cfg.retry_cap, max_escalations=cfg.max_escalations, redraw=cfg.redraw,
                samples=cfg.samples, stats=st, events=events, stage=f"{name} extend {i}->{i - 2}")
        stats.append(st)
        fam = coarse
        i -= 2
    # odd chain: the remaining cut edges keep the zero vector
    if not odd and np.any(fam.cut):
        raise EmbedError("even chain did not end with a total assignment")
    return panel


def _derived_seed(seed: int, attempt: int) -> int:
    if attempt == 0:
        return seed
    return int(np.random.SeedSequence([seed, 0xC0BE, attempt]).generate_state(2, np.uint64)[0])


def _ratio(dim: int, lb: int) -> tuple[float, str]:
    r = Fraction(dim, max(lb, 1))
    s = str(r.numerator) if r.denominator == 1 else f"{r.numerator}/{r.denominator}"
    return float(r), s


def embed_tree(tree: RootedTree, config: EmbedConfig | None = None) -> tuple[CubeRepresentation, EmbedReport]:
    """Cube representation of ``tree`` with an exact verification before returning."""
    cfg = config or EmbedConfig()
    tree = apply_root_policy(tree, cfg.root)
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    bounds = metrics.cubicity_lower_bound(tree, metrics.compute_rho(tree, mode=cfg.rho_mode, seed=cfg.seed))
    timings["bounds"] = time.perf_counter() - t0
    rho = bounds.rho
    meta = {"seed": cfg.seed, "mode": cfg.mode, "root": tree.root}

    short = _shortcut(tree)
    if short is not None:
        kind, centers = short
        rep = CubeRepresentation(centers, (Block("path", 0, 1),) if kind == "path" else (),
                                 dict(meta, t=None, shortcut=kind))
        t1 = time.perf_counter()
        bad = verify_spatial(tree, rep)
        timings["verify"] = time.perf_counter() - t1
        if bad is not None:
            raise EmbedError(f"shortcut representation failed verification: {bad}")
        ratio, ratio_s = _ratio(rep.dim, bounds.lb_final)
        report = EmbedReport(
            n=tree.n, h=tree.height, root=tree.root, mode=cfg.mode, seed=cfg.seed, rho=rho.to_dict(),
            lb_final=bounds.lb_final, t=None, dim=rep.dim, verdict="ok", ratio=ratio, ratio_exact=ratio_s,
            shortcut=kind, check=cfg.check, redraw=cfg.redraw, rho_sampled=not rho.exact_flag, timings=timings,
        )
        return rep, report

    t = cfg.t_override if cfg.t_override is not None else bounds.t
    ladder = build_ladder(tree.height, cfg.base)
    meta["t"] = t
    last_error: Violation | None = None
    for attempt in range(cfg.pipeline_attempts):
        seed = _derived_seed(cfg.seed, attempt)
        stats: list[_StageStats] = []
        events: list[dict] = []
        panels = []
        t1 = time.perf_counter()
        for idx, name in enumerate(BLOCK_NAMES):
            odd, fam_mode = idx >= 2, "AB"[idx % 2]
            try:
                panels.append(_build_block(tree, ladder, t, odd, fam_mode, name, cfg, seed, stats, events))
            except EscalationExhausted as exc:
                exc.report = _failure_report(tree, cfg, bounds, t, ladder, stats, events, timings, attempt)
                raise
        timings[f"blocks_{attempt}"] = time.perf_counter() - t1
        widths = {name: max(p.used(), t) for name, p in zip(BLOCK_NAMES, panels)}
        width = max(widths.values())
        W = np.zeros((tree.n, 4 * width), dtype=np.int8)
        blocks = []
        for idx, (name, p) in enumerate(zip(BLOCK_NAMES, panels)):
            used = min(p.W.shape[1], width)
            W[:, idx * width: idx * width + used] = p.W[:, :used]
            blocks.append(Block(name, idx * width, (idx + 1) * width))
        centers = prefix_sums(tree, W).astype(np.int64)
        rep = CubeRepresentation(centers, tuple(blocks), dict(meta))
        t2 = time.perf_counter()
        last_error = verify_spatial(tree, rep)
        timings[f"verify_{attempt}"] = time.perf_counter() - t2
        if last_error is None:
            untrimmed = None
            if cfg.trim:
                t3 = time.perf_counter()
                untrimmed = rep.dim
                rep = trim_dimensions(tree, rep)
                timings["trim"] = time.perf_counter() - t3
            report = _success_report(tree, cfg, bounds, t, ladder, stats, events, timings, attempt, widths,
                                     rep, untrimmed)
            return rep, report
        log.warning("pipeline attempt %d failed verification: %s", attempt, last_error)
    raise EmbedError(f"no verified representation after {cfg.pipeline_attempts} attempts: {last_error}")


def _draw_means(stats: list[_StageStats], kind: str) -> float | None:
    total = count = 0
    for st in stats:
        if st.kind == kind:
            total += sum(k * v for k, v in st.draws.items())
            count += sum(st.draws.values())
    return total / count if count else None


def _common(tree, cfg, bounds, t, ladder, stats, events, timings, attempt) -> dict:
    rho = bounds.rho
    retries = sum((k - 1) * v for st in stats for k, v in st.draws.items())
    return dict(
        n=tree.n, h=tree.height, root=tree.root, mode=cfg.mode, seed=cfg.seed, rho=rho.to_dict(),
        lb_final=bounds.lb_final, t=t, ladder=ladder.to_dict(), extension_rounds=ladder.rounds,
        stages=[s.to_dict() for s in stats], escalations=list(events),
        pieces=sum(s.pieces for s in stats), retries=retries,
        mean_base_draws=_draw_means(stats, "base"), mean_extension_draws=_draw_means(stats, "extend"),
        check=cfg.check, redraw=cfg.redraw, rho_sampled=not rho.exact_flag, pipeline_attempts=attempt + 1,
        timings=timings,
    )


def _success_report(tree, cfg, bounds, t, ladder, stats, events, timings, attempt, widths, rep, untrimmed):
    ratio, ratio_s = _ratio(rep.dim, bounds.lb_final)
    return EmbedReport(dim=rep.dim, verdict="ok", ratio=ratio, ratio_exact=ratio_s, t_used=widths,
                       untrimmed_dim=untrimmed,
                       **_common(tree, cfg, bounds, t, ladder, stats, events, timings, attempt))


def _failure_report(tree, cfg, bounds, t, ladder, stats, events, timings, attempt):
    return EmbedReport(dim=0, verdict="escalation_exhausted", ratio=0.0, ratio_exact="0",
                       **_common(tree, cfg, bounds, t, ladder, stats, events, timings, attempt))
