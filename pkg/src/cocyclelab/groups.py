"""Finitely generated groups, word metrics, and simple random walks.

Supported groups: free groups F_k, free abelian groups Z^d, and the
lamplighter group Z_2 wr Z.  Elements carry exact word-length semantics
with respect to the standard symmetric generating set, and random walks
are reproducible via counter-based RNG streams.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

FREE = "free"
FREE_ABELIAN = "free_abelian"
LAMPLIGHTER = "lamplighter"


class GroupError(ValueError):
    pass


@dataclass(frozen=True)
class GroupDescriptor:
    """A group together with its implied standard symmetric generating set.

    kind: "free" (rank = k), "free_abelian" (rank = d), or "lamplighter".
    For the lamplighter the generators are the translation t, its inverse,
    and the lamp toggle a at the current position.
    """

    kind: str
    rank: int = 1

    def __post_init__(self):
        if self.kind not in (FREE, FREE_ABELIAN, LAMPLIGHTER):
            raise GroupError(f"unknown group kind: {self.kind}")
        if self.kind != LAMPLIGHTER and self.rank < 1:
            raise GroupError("rank/dimension must be >= 1")

    @property
    def n_generators(self):
        """Size of the symmetric generating set S."""
        if self.kind == FREE:
            return 2 * self.rank
        if self.kind == FREE_ABELIAN:
            return 2 * self.rank
        return 3  # t, t^-1, a

    def identity(self):
        if self.kind == FREE:
            return GroupElement(self, word=())
        if self.kind == FREE_ABELIAN:
            return GroupElement(self, vector=(0,) * self.rank)
        return GroupElement(self, position=0, lamps=frozenset())

    def generator(self, index):
        """Generator by signed index: +i / -i for the i-th generator and its
        inverse (1-based).  Lamplighter: +1/-1 translation, +2 lamp toggle."""
        if self.kind == FREE:
            if not 1 <= abs(index) <= self.rank:
                raise GroupError(f"generator index {index} out of range")
            return GroupElement(self, word=(index,))
        if self.kind == FREE_ABELIAN:
            if not 1 <= abs(index) <= self.rank:
                raise GroupError(f"generator index {index} out of range")
            v = [0] * self.rank
            v[abs(index) - 1] = 1 if index > 0 else -1
            return GroupElement(self, vector=tuple(v))
        if index in (1, -1):
            return GroupElement(self, position=index, lamps=frozenset())
        if index == 2:
            return GroupElement(self, position=0, lamps=frozenset([0]))
        raise GroupError(f"lamplighter generator index must be +-1 or 2, got {index}")

    def generators(self):
        """The full symmetric generating set S as a list of elements."""
        if self.kind in (FREE, FREE_ABELIAN):
            return [self.generator(i) for i in range(1, self.rank + 1)] + [
                self.generator(-i) for i in range(1, self.rank + 1)
            ]
        return [self.generator(1), self.generator(-1), self.generator(2)]


def _reduce_word(letters):
    out = []
    for s in letters:
        if out and out[-1] == -s:
            out.pop()
        else:
            out.append(int(s))
    return tuple(out)


@dataclass(frozen=True)
class GroupElement:
    """An element of a finitely generated group in canonical form.

    free: reduced word of signed generator indices.
    free_abelian: integer coordinate vector.
    lamplighter: head position plus the finite set of lit lamps.
    """

    descriptor: GroupDescriptor
    word: tuple = None
    vector: tuple = None
    position: int = None
    lamps: frozenset = None

    def __mul__(self, other):
        return multiply(self, other)

    def inverse(self):
        d = self.descriptor
        if d.kind == FREE:
            return GroupElement(d, word=tuple(-s for s in reversed(self.word)))
        if d.kind == FREE_ABELIAN:
            return GroupElement(d, vector=tuple(-x for x in self.vector))
        # (p, L)^-1 = (-p, L - p)
        return GroupElement(
            d, position=-self.position, lamps=frozenset(x - self.position for x in self.lamps)
        )

    def is_identity(self):
        return word_length(self) == 0


def multiply(g, h):
    """Product g*h in canonical (reduced) form."""
    if g.descriptor != h.descriptor:
        raise GroupError("elements belong to different groups")
    d = g.descriptor
    if d.kind == FREE:
        # reduce at the seam only; both inputs are already reduced
        left = list(g.word)
        right = list(h.word)
        i = 0
        while left and i < len(right) and left[-1] == -right[i]:
            left.pop()
            i += 1
        return GroupElement(d, word=tuple(left) + tuple(right[i:]))
    if d.kind == FREE_ABELIAN:
        return GroupElement(d, vector=tuple(a + b for a, b in zip(g.vector, h.vector)))
    lamps = frozenset(g.lamps) ^ frozenset(x + g.position for x in h.lamps)
    return GroupElement(d, position=g.position + h.position, lamps=lamps)


def word_length(g):
    """Word length |g|_S with respect to the standard generating set."""
    d = g.descriptor
    if d.kind == FREE:
        return len(g.word)
    if d.kind == FREE_ABELIAN:
        return sum(abs(x) for x in g.vector)
    return _lamplighter_length(g.position, g.lamps)


def _lamplighter_length(t, lamps):
    """Exact length: lamp toggles plus the cheaper of the two sweep orders.

    The head starts at 0, must visit every lit lamp, and end at t; on a
    line the optimal route is a single left-first or right-first sweep.
    Validated against the BFS distance oracle up to radius 8.
    """
    if not lamps:
        return abs(t)
    lo = min(min(lamps), 0, t)
    hi = max(max(lamps), 0, t)
    left_first = (0 - lo) + (hi - lo) + (hi - t)
    right_first = (hi - 0) + (hi - lo) + (t - lo)
    return min(left_first, right_first) + len(lamps)


def ball_distances(desc, radius):
    """BFS distance oracle: map element -> distance for the ball of the
    given radius in the Cayley graph.  Exponential in the radius; meant
    for radii <= 8."""
    gens = desc.generators()
    e = desc.identity()
    dist = {e: 0}
    queue = deque([e])
    while queue:
        g = queue.popleft()
        if dist[g] == radius:
            continue
        for s in gens:
            h = multiply(g, s)
            if h not in dist:
                dist[h] = dist[g] + 1
                queue.append(h)
    return dist


# ---------------------------------------------------------------------------
# Random walks
# ---------------------------------------------------------------------------


def _rng(seed, stream=0):
    """Counter-based generator keyed by (seed, stream): parallel batches
    stay reproducible independent of worker count."""
    return np.random.Generator(np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, stream]))


def _increment_indices(desc):
    """Signed generator indices making up S, in sampling order."""
    if desc.kind in (FREE, FREE_ABELIAN):
        k = desc.rank
        return [i for i in range(1, k + 1)] + [-i for i in range(1, k + 1)]
    return [1, -1, 2]


@dataclass(frozen=True)
class WalkTrajectory:
    """A sampled simple random walk W_0 = e, W_1, ..., W_n.

    Positions are reconstructed on demand from the increment sequence;
    the distance profile |W_i| is cached as a numpy array.
    """

    descriptor: GroupDescriptor
    seed: int
    increments: tuple
    distances: np.ndarray = field(compare=False)

    def __len__(self):
        return len(self.increments)

    def positions(self):
        g = self.descriptor.identity()
        yield g
        for idx in self.increments:
            g = multiply(g, self.descriptor.generator(idx))
            yield g

    def endpoint(self):
        g = self.descriptor.identity()
        for idx in self.increments:
            g = multiply(g, self.descriptor.generator(idx))
        return g


def sample_walk(desc, n, seed, stream=0):
    """Simple random walk with uniform i.i.d. increments from S."""
    if n < 0:
        raise GroupError("number of steps must be >= 0")
    rng = _rng(seed, stream)
    choices = _increment_indices(desc)
    draws = rng.integers(0, len(choices), size=n)
    incs = tuple(choices[i] for i in draws)
    dists = np.empty(n + 1, dtype=np.int64)
    dists[0] = 0
    g = desc.identity()
    for i, idx in enumerate(incs):
        g = multiply(g, desc.generator(idx))
        dists[i + 1] = word_length(g)
    return WalkTrajectory(desc, seed, incs, dists)


def sample_distance_matrix(desc, n, n_walks, seed, stream=0):
    """Distance profiles |W_i| for a batch of walks, shape (n_walks, n+1).

    Vectorized across walks; for free groups the reduced word is tracked
    as a per-walk stack so each step is O(n_walks) numpy work.
    """
    rng = _rng(seed, stream)
    if desc.kind == FREE:
        k = desc.rank
        draws = rng.integers(0, 2 * k, size=(n_walks, n))
        letters = np.where(draws < k, draws + 1, -(draws - k + 1)).astype(np.int32)
        stack = np.zeros((n_walks, n + 1), dtype=np.int32)  # row 0 is a sentinel
        depth = np.zeros(n_walks, dtype=np.int64)
        out = np.zeros((n_walks, n + 1), dtype=np.int64)
        rows = np.arange(n_walks)
        for step in range(n):
            s = letters[:, step]
            top = stack[rows, depth]
            cancel = top == -s
            depth = np.where(cancel, depth - 1, depth + 1)
            push = ~cancel
            stack[rows[push], depth[push]] = s[push]
            out[:, step + 1] = depth
        return out
    if desc.kind == FREE_ABELIAN:
        d = desc.rank
        draws = rng.integers(0, 2 * d, size=(n_walks, n))
        coord = draws % d
        sign = np.where(draws < d, 1, -1)
        out = np.zeros((n_walks, n + 1), dtype=np.int64)
        pos = np.zeros((n_walks, d), dtype=np.int64)
        rows = np.arange(n_walks)
        for step in range(n):
            pos[rows, coord[:, step]] += sign[:, step]
            out[:, step + 1] = np.abs(pos).sum(axis=1)
        return out
    # lamplighter: no useful vectorization; fall back to elementwise walks
    out = np.zeros((n_walks, n + 1), dtype=np.int64)
    for w in range(n_walks):
        out[w] = sample_walk(desc, n, seed, stream=stream * n_walks + w).distances
    return out


def exact_distance_moments(desc, n, p=1):
    """Exact E[|W_i|^p], i = 0..n, for the free-group simple random walk.

    The distance process is a birth-death chain on N: up-probability
    (2k-1)/(2k) at distances >= 1, reflection at 0.  Computed by dynamic
    programming on the full probability vector, so moments are exact up
    to float rounding.
    """
    if desc.kind != FREE:
        raise GroupError("exact distance oracle is free-group only")
    if n > 10**5:
        raise GroupError("n too large for the exact oracle")
    k = desc.rank
    up = (2 * k - 1) / (2 * k)
    down = 1.0 / (2 * k)
    prob = np.zeros(n + 1)
    prob[0] = 1.0
    vals = np.arange(n + 1, dtype=float) ** p
    moments = np.empty(n + 1)
    moments[0] = 0.0
    cur = prob
    for i in range(1, n + 1):
        nxt = np.zeros_like(cur)
        nxt[1:] += up * cur[:-1]
        nxt[:-1] += down * cur[1:]
        nxt[1] += (1.0 - up) * cur[0]  # from 0 every step moves to 1
        # renormalize against drift of rounding error
        nxt /= nxt.sum()
        cur = nxt
        moments[i] = float(vals @ cur)
    return moments


def estimate_escape_rate(trajectories):
    """Sample mean and normal-approximation CI half-width of |W_n|/n."""
    if len(trajectories) < 2:
        raise GroupError("need at least 2 trajectories")
    n = len(trajectories[0])
    if n < 100:
        raise GroupError("trajectories too short (need n >= 100)")
    if any(len(t) != n for t in trajectories):
        raise GroupError("trajectories must have equal length")
    rates = np.array([t.distances[-1] / n for t in trajectories])
    mean = float(rates.mean())
    half = float(1.96 * rates.std(ddof=1) / np.sqrt(len(rates)))
    return mean, half


def escape_rate_from_distances(distmat):
    """Escape-rate estimate from a batch distance matrix."""
    n = distmat.shape[1] - 1
    rates = distmat[:, -1] / n
    mean = float(rates.mean())
    half = float(1.96 * rates.std(ddof=1) / np.sqrt(len(rates)))
    return mean, half
