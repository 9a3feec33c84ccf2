"""Representations and cocycles at desk scale.

Representation kinds: the permutation action on oriented edges of the
Cayley tree of a free group, finite-dimensional matrix representations
given by generator images, and diagonally conjugated unitary families
(uniformly bounded but not isometric).  Cocycle kinds: the tree edge
cocycle with exact square-root growth, generator-defined cocycles on
free groups, homomorphism cocycles on Z^d, and coboundaries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .groups import (
    FREE,
    FREE_ABELIAN,
    GroupDescriptor,
    GroupElement,
    GroupError,
    multiply,
    word_length,
)

MAX_MATRIX_DIM = 64


class RepError(ValueError):
    pass


class SparseVector:
    """Finitely supported real coefficient map over an abstract basis."""

    __slots__ = ("entries",)

    def __init__(self, entries=None):
        self.entries = {}
        if entries:
            for key, val in dict(entries).items():
                if val != 0:
                    self.entries[key] = val

    def __add__(self, other):
        out = dict(self.entries)
        for key, val in other.entries.items():
            new = out.get(key, 0) + val
            if new == 0:
                out.pop(key, None)
            else:
                out[key] = new
        return SparseVector(out)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, scalar):
        if scalar == 0:
            return SparseVector()
        return SparseVector({k: scalar * v for k, v in self.entries.items()})

    def __eq__(self, other):
        return isinstance(other, SparseVector) and self.entries == other.entries

    def __len__(self):
        return len(self.entries)

    def __repr__(self):
        return f"SparseVector({self.entries!r})"

    def norm(self, p=2):
        if not self.entries:
            return 0.0
        coeffs = np.abs(np.fromiter(self.entries.values(), dtype=float))
        if p == np.inf:
            return float(coeffs.max())
        return float((coeffs**p).sum() ** (1.0 / p))

    def to_dense(self, dim):
        v = np.zeros(dim)
        for key, val in self.entries.items():
            v[key] = val
        return v

    @staticmethod
    def from_dense(arr, tol=0.0):
        return SparseVector({i: float(x) for i, x in enumerate(arr) if abs(x) > tol})


class EdgeKey(NamedTuple):
    """Oriented edge (u, u*s) of the Cayley tree, keyed by the shorter
    endpoint u (a reduced word tuple) and the letter s."""

    endpoint: tuple
    letter: int


TREE_PERMUTATION = "tree_permutation"
MATRIX = "matrix"
DIAG_CONJUGATED = "diag_conjugated"


@dataclass
class RepSpec:
    """A representation plus its uniform bound M.

    matrix kind: generator_images maps 1..k to invertible matrices.
    diag_conjugated: pi(s) = D U(s) D^-1 with U(s) unitary, M = cond(D).
    """

    kind: str
    group: GroupDescriptor
    generator_images: dict = None
    diag: np.ndarray = None

    def __post_init__(self):
        if self.kind not in (TREE_PERMUTATION, MATRIX, DIAG_CONJUGATED):
            raise RepError(f"unknown representation kind: {self.kind}")
        if self.kind == TREE_PERMUTATION and self.group.kind != FREE:
            raise RepError("tree permutation representation requires a free group")
        if self.kind in (MATRIX, DIAG_CONJUGATED):
            if not self.generator_images:
                raise RepError("matrix representation needs generator images")
            dims = {np.asarray(a).shape for a in self.generator_images.values()}
            if len(dims) != 1:
                raise RepError("generator images must share one square shape")
            (shape,) = dims
            if shape[0] != shape[1]:
                raise RepError("generator images must be square")
            if shape[0] > MAX_MATRIX_DIM:
                raise RepError(f"matrix dimension capped at {MAX_MATRIX_DIM}")
            for a in self.generator_images.values():
                if abs(np.linalg.det(np.asarray(a))) < 1e-12:
                    raise RepError("generator image is singular")
        if self.kind == DIAG_CONJUGATED and self.diag is None:
            raise RepError("diag_conjugated needs the diagonal")

    @property
    def dim(self):
        if self.kind == TREE_PERMUTATION:
            return None
        return np.asarray(next(iter(self.generator_images.values()))).shape[0]

    @property
    def uniform_bound(self):
        if self.kind == TREE_PERMUTATION:
            return 1.0
        if self.kind == DIAG_CONJUGATED:
            d = np.abs(np.asarray(self.diag, dtype=float))
            return float(d.max() / d.min())
        return float(
            max(np.linalg.norm(np.asarray(a), 2) for a in self.generator_images.values())
        )

    def _base_image(self, index):
        a = np.asarray(self.generator_images[abs(index)], dtype=float)
        if self.kind == DIAG_CONJUGATED:
            d = np.asarray(self.diag, dtype=float)
            a = (d[:, None] * a) / d[None, :]
        return a if index > 0 else np.linalg.inv(a)

    def image(self, g):
        """Dense matrix pi(g) (matrix kinds only)."""
        if self.kind == TREE_PERMUTATION:
            raise RepError("tree permutation representation has no dense image")
        d = self.dim
        out = np.eye(d)
        if self.group.kind == FREE:
            for s in g.word:
                out = out @ self._base_image(s)
        elif self.group.kind == FREE_ABELIAN:
            for i, power in enumerate(g.vector, start=1):
                if power:
                    a = self._base_image(i if power > 0 else -i)
                    out = out @ np.linalg.matrix_power(a, abs(power))
        else:
            raise RepError("matrix representations cover free and abelian groups only")
        return out


def trivial_rep(group, dim):
    """Identity matrices on every generator."""
    k = group.rank
    return RepSpec(MATRIX, group, {i: np.eye(dim) for i in range(1, k + 1)})


def _edge_between(x_word, y_word, coeff):
    """Edge key and sign for the oriented step x -> y (|x| and |y| differ
    by one)."""
    if len(y_word) == len(x_word) + 1:
        return EdgeKey(x_word, y_word[-1]), coeff
    if len(x_word) == len(y_word) + 1:
        return EdgeKey(y_word, x_word[-1]), -coeff
    raise RepError("not a tree edge")


def apply_rep(rep, g, v):
    """Linear action pi(g) v on a SparseVector."""
    if rep.kind == TREE_PERMUTATION:
        out = {}
        desc = rep.group
        for key, coeff in v.entries.items():
            u = GroupElement(desc, word=key.endpoint)
            gu = multiply(g, u)
            gus = multiply(gu, desc.generator(key.letter))
            new_key, new_coeff = _edge_between(gu.word, gus.word, coeff)
            out[new_key] = out.get(new_key, 0) + new_coeff
        return SparseVector(out)
    mat = rep.image(g)
    keys = list(v.entries)
    if keys and (min(keys) < 0 or max(keys) >= rep.dim):
        raise RepError("vector support exceeds representation dimension")
    dense = v.to_dense(rep.dim)
    return SparseVector.from_dense(mat @ dense)


HAAGERUP_TREE = "haagerup_tree"
GENERATOR_VALUES = "generator_values"
HOMOMORPHISM = "homomorphism"
COBOUNDARY = "coboundary"


@dataclass
class CocycleSpec:
    """A cocycle b determined by its representation and generator data.

    haagerup_tree: signed indicator of tree edges on the geodesic [e, g].
    generator_values: arbitrary assignment on free generators, extended
    by the cocycle identity (free groups only, so no relations constrain
    the values).  homomorphism: b(g) = sum g_i * value_i under a trivial
    representation on Z^d.  coboundary: b(g) = pi(g) v - v.
    """

    rep: RepSpec
    kind: str
    values: dict = None  # generator index -> SparseVector
    vector: SparseVector = None

    def __post_init__(self):
        if self.kind not in (HAAGERUP_TREE, GENERATOR_VALUES, HOMOMORPHISM, COBOUNDARY):
            raise RepError(f"unknown cocycle kind: {self.kind}")
        if self.kind == HAAGERUP_TREE and self.rep.kind != TREE_PERMUTATION:
            raise RepError("haagerup_tree cocycle lives over the tree representation")
        if self.kind == GENERATOR_VALUES and self.rep.group.kind != FREE:
            raise RepError("generator-defined cocycles require a free group")
        if self.kind == HOMOMORPHISM and self.rep.group.kind != FREE_ABELIAN:
            raise RepError("homomorphism cocycles require a free abelian group")
        if self.kind == COBOUNDARY and self.vector is None:
            raise RepError("coboundary needs its defining vector")

    def generator_value(self, index):
        """b(s) for a signed generator index, using b(s^-1) = -pi(s^-1) b(s)."""
        if index > 0:
            return self.values[index]
        pos = self.values[-index]
        inv = self.rep.group.generator(index)
        return -1.0 * apply_rep(self.rep, inv, pos)


def haagerup_cocycle(rank=2):
    group = GroupDescriptor(FREE, rank)
    return CocycleSpec(RepSpec(TREE_PERMUTATION, group), HAAGERUP_TREE)


def evaluate_cocycle(c, g):
    """b(g) as a SparseVector."""
    if g.descriptor != c.rep.group:
        raise RepError("element does not belong to the cocycle's group")
    if c.kind == HAAGERUP_TREE:
        # geodesic edges all point away from e: coefficients are +1
        entries = {}
        for i in range(len(g.word)):
            entries[EdgeKey(g.word[:i], g.word[i])] = 1
        return SparseVector(entries)
    if c.kind == GENERATOR_VALUES:
        out = SparseVector()
        prefix = c.rep.group.identity()
        for s in g.word:
            out = out + apply_rep(c.rep, prefix, c.generator_value(s))
            prefix = multiply(prefix, c.rep.group.generator(s))
        return out
    if c.kind == HOMOMORPHISM:
        out = SparseVector()
        for i, power in enumerate(g.vector, start=1):
            if power:
                out = out + float(power) * c.values[i]
        return out
    return apply_rep(c.rep, g, c.vector) - c.vector


def cocycle_norm(c, g, p=2):
    """||b(g)||, using the exact shortcut ||b(g)||^2 = |g| for the tree
    cocycle (the geodesic edges are pairwise distinct with coefficient 1)."""
    if c.kind == HAAGERUP_TREE and p == 2:
        return float(np.sqrt(word_length(g)))
    return evaluate_cocycle(c, g).norm(p)


def check_cocycle_identity(c, sample_pairs, p=2):
    """Maximum residual ||b(gh) - b(g) - pi(g) b(h)|| over the sample."""
    if not sample_pairs:
        raise RepError("need at least one sample pair")
    worst = 0.0
    for g, h in sample_pairs:
        lhs = evaluate_cocycle(c, multiply(g, h))
        rhs = evaluate_cocycle(c, g) + apply_rep(c.rep, g, evaluate_cocycle(c, h))
        worst = max(worst, (lhs - rhs).norm(p))
    return worst


def length_function(c, g, p=2):
    """The Banach length ||b(g)||."""
    return cocycle_norm(c, g, p)


class LipschitzViolation(RuntimeError):
    def __init__(self, witness, ratio, bound):
        super().__init__(
            f"length function exceeds Lipschitz bound: ratio {ratio:.6g} > {bound:.6g} "
            f"at {witness!r}"
        )
        self.witness = witness


def lipschitz_check(c, samples, p=2):
    """Observed max ||b(g)|| / |g| against the a priori bound
    M * max_s ||b(s)||.  Raises LipschitzViolation with a witness if some
    sample breaks the bound; identity samples are skipped."""
    if not samples:
        raise RepError("need a nonempty sample")
    gens = c.rep.group.generators()
    bound = c.rep.uniform_bound * max(cocycle_norm(c, s, p) for s in gens)
    observed = 0.0
    for g in samples:
        n = word_length(g)
        if n == 0:
            continue
        ratio = cocycle_norm(c, g, p) / n
        if ratio > bound * (1 + 1e-9):
            raise LipschitzViolation(g, ratio, bound)
        observed = max(observed, ratio)
    return observed, bound


# ---------------------------------------------------------------------------
# JSON description format
# ---------------------------------------------------------------------------


def rep_to_json(rep):
    doc = {"kind": rep.kind, "group": {"kind": rep.group.kind, "rank": rep.group.rank}}
    if rep.generator_images:
        doc["generator_images"] = {
            str(i): np.asarray(a).tolist() for i, a in rep.generator_images.items()
        }
    if rep.diag is not None:
        doc["diag"] = np.asarray(rep.diag).tolist()
    return doc


def rep_from_json(doc):
    group = GroupDescriptor(doc["group"]["kind"], doc["group"].get("rank", 1))
    images = None
    if "generator_images" in doc:
        images = {int(i): np.asarray(a, dtype=float) for i, a in doc["generator_images"].items()}
    diag = np.asarray(doc["diag"], dtype=float) if "diag" in doc else None
    return RepSpec(doc["kind"], group, images, diag)


def cocycle_to_json(c):
    doc = {"kind": c.kind, "rep": rep_to_json(c.rep)}
    if c.values:
        doc["values"] = {str(i): dict(v.entries) for i, v in c.values.items()}
    if c.vector is not None:
        doc["vector"] = dict(c.vector.entries)
    return doc


def cocycle_from_json(doc):
    rep = rep_from_json(doc["rep"])
    values = None
    if "values" in doc:
        values = {
            int(i): SparseVector({int(k): float(x) for k, x in v.items()})
            for i, v in doc["values"].items()
        }
    vector = None
    if "vector" in doc:
        vector = SparseVector({int(k): float(x) for k, x in doc["vector"].items()})
    return CocycleSpec(rep, doc["kind"], values, vector)


def dump_cocycle(c, path):
    with open(path, "w") as fh:
        json.dump(cocycle_to_json(c), fh, indent=2)


def load_cocycle(path):
    with open(path) as fh:
        return cocycle_from_json(json.load(fh))
