"""Finite-dimensional spectral-gap laboratory.

Markov operators of finitely supported measures, the invariant /
complement decomposition, Kazhdan constants with certified witness
vectors, averaging projections over finite subgroups, and cocycle
harmonization via the unique fixed point of the averaged affine map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from .banachmoduli import enumerate_closure
from .repcoc import (
    COBOUNDARY,
    DIAG_CONJUGATED,
    GENERATOR_VALUES,
    MATRIX,
    CocycleSpec,
    SparseVector,
    evaluate_cocycle,
)
from .groups import multiply

GAP_TOL = 1e-10
REFUSAL_MARGIN = 1e-8


class GapError(ValueError):
    """Validation failure (bad measure, non-matrix rep, ...)."""


class NoSpectralGap(RuntimeError):
    """Numerical refusal: the averaged affine map has no unique fixed
    point at the working tolerance."""


@dataclass
class FiniteMeasure:
    """Finitely supported probability measure on the group."""

    support: list
    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if len(self.support) != len(self.weights):
            raise GapError("support and weights differ in length")
        if np.any(self.weights <= 0):
            raise GapError("weights must be positive")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise GapError("weights must sum to 1")

    @staticmethod
    def uniform(elements):
        n = len(elements)
        return FiniteMeasure(list(elements), np.full(n, 1.0 / n))

    def is_symmetric(self):
        index = {g: w for g, w in zip(self.support, self.weights)}
        return all(abs(index.get(g.inverse(), -1.0) - w) < 1e-12 for g, w in index.items())


def _require_matrix(rep):
    if rep.kind not in (MATRIX, DIAG_CONJUGATED):
        raise GapError("finite-dimensional matrix representation required")


def markov_operator(rep, mu):
    """pi(mu) = sum_i w_i pi(g_i)."""
    _require_matrix(rep)
    out = np.zeros((rep.dim, rep.dim))
    for g, w in zip(mu.support, mu.weights):
        out += w * rep.image(g)
    return out


@dataclass
class Decomposition:
    invariant_basis: np.ndarray  # orthonormal columns spanning B^pi
    complement_basis: np.ndarray  # orthonormal columns spanning B_pi
    projection: np.ndarray  # P onto B^pi along B_pi

    @property
    def invariant_dim(self):
        return self.invariant_basis.shape[1]


def invariant_decomposition(rep, closure_cap=10**4):
    """B = B^pi (+) B_pi.

    B^pi is the joint kernel of (pi(s) - I) over the generators.  The
    complement is range(I - P) with P the group-average projection when
    the generated matrix group is finite; for orthogonal images it is
    the orthogonal complement.  Anything else is refused: without
    averaging or orthogonality there is no canonical complement here.
    """
    _require_matrix(rep)
    dim = rep.dim
    gens = rep.group.generators()
    images = [rep.image(s) for s in gens]
    stacked = np.vstack([a - np.eye(dim) for a in images])
    inv = null_space(stacked, rcond=1e-12)
    if inv.size == 0:
        inv = np.zeros((dim, 0))

    orthogonal = all(np.allclose(a.T @ a, np.eye(dim), atol=1e-10) for a in images)
    if orthogonal:
        proj = inv @ inv.T
    else:
        closure = enumerate_closure(images, cap=closure_cap)
        proj = sum(closure) / len(closure)
        if not np.allclose(proj @ proj, proj, atol=1e-10):
            raise GapError("group-average projection failed idempotence")
    # complement = range(I - P): orthonormalize its column space
    span = np.eye(dim) - proj
    u, s, _ = np.linalg.svd(span)
    rank = int((s > 1e-10).sum())
    comp = u[:, :rank]
    if rank + inv.shape[1] != dim:
        raise GapError("decomposition dimensions do not add up")
    return Decomposition(inv, comp, proj)


def restrict_to_complement(rep, mat, decomp=None):
    """Matrix of the operator restricted to B_pi in an orthonormal basis
    of the complement (the complement is invariant, so this is exact)."""
    decomp = decomp or invariant_decomposition(rep)
    c = decomp.complement_basis
    if c.shape[1] == 0:
        return np.zeros((0, 0))
    return c.T @ mat @ c


@dataclass
class GapReport:
    invariant_dim: int
    complement_norm: float
    kazhdan: tuple  # (Q description, kappa) or None
    gap_present: bool

    def to_json(self):
        return {
            "invariant_dim": self.invariant_dim,
            "complement_norm": self.complement_norm,
            "kappa": None if self.kazhdan is None else self.kazhdan[1],
            "gap": self.gap_present,
        }


def gap_norm(rep, mu, decomp=None, kazhdan_set=None):
    """Operator norm (largest singular value) of pi(mu) restricted to the
    complement of the invariant vectors."""
    decomp = decomp or invariant_decomposition(rep)
    mat = markov_operator(rep, mu)
    restricted = restrict_to_complement(rep, mat, decomp)
    if restricted.size == 0:
        norm = 0.0
    else:
        norm = float(np.linalg.norm(restricted, 2))
    kaz = None
    if kazhdan_set is not None:
        kappa, _ = kazhdan_constant(rep, kazhdan_set, decomp)
        kaz = ("Q", kappa)
    return GapReport(decomp.invariant_dim, norm, kaz, bool(norm < 1.0 - GAP_TOL))


def kazhdan_constant(rep, Q, decomp=None, restarts=256, iters=200, seed=0):
    """kappa = min over unit v in B_pi of max_{g in Q} ||pi(g) v - v||.

    Projected subgradient descent on the sphere of the complement with
    random restarts; returns (kappa, witness vector)."""
    decomp = decomp or invariant_decomposition(rep)
    c = decomp.complement_basis
    r = c.shape[1]
    if r == 0:
        raise GapError("no complement: kappa is vacuous (B_pi = {0})")
    ops = [(rep.image(g) - np.eye(rep.dim)) @ c for g in Q]

    def value(y):
        return max(np.linalg.norm(a @ y) for a in ops)

    rng = np.random.default_rng(seed)
    best = np.inf
    best_y = None
    for trial in range(restarts):
        y = rng.standard_normal(r)
        y /= np.linalg.norm(y)
        step = 0.5
        for it in range(iters):
            norms = [np.linalg.norm(a @ y) for a in ops]
            i = int(np.argmax(norms))
            if norms[i] < 1e-15:
                break
            grad = ops[i].T @ (ops[i] @ y) / norms[i]
            grad -= (grad @ y) * y  # tangent projection
            y = y - step * grad
            y /= np.linalg.norm(y)
            step *= 0.97
        val = value(y)
        if val < best:
            best = val
            best_y = y
    return float(best), c @ best_y


def average_over_subgroup(rep, K):
    """P = |K|^-1 sum_k pi(k); the projection onto the K-fixed vectors."""
    _require_matrix(rep)
    elems = set(K)
    for a in K:
        if a.inverse() not in elems:
            raise GapError("K is not closed under inverses")
        for b in K:
            if multiply(a, b) not in elems:
                raise GapError("K is not closed under products")
    mats = [rep.image(k) for k in K]
    proj = sum(mats) / len(mats)
    if not np.allclose(proj @ proj, proj, atol=1e-10):
        raise GapError("averaging projection failed idempotence")
    return proj


def cocycle_on_measure(c, mu):
    """b(mu) = sum_i w_i b(g_i) as a dense vector."""
    dim = c.rep.dim
    out = np.zeros(dim)
    for g, w in zip(mu.support, mu.weights):
        out += w * evaluate_cocycle(c, g).to_dense(dim)
    return out


def harmonize(c, mu, decomp=None):
    """Harmonic representative b_K = b + coboundary(x1) with b_K(mu) = 0.

    x1 solves (I - pi(mu)) x1 = b(mu) on the complement of the invariant
    vectors; refused when pi(mu) restricted there has no gap or when
    b(mu) has an invariant component (no fixed point exists then).
    Returns (x1, b_K).
    """
    rep = c.rep
    _require_matrix(rep)
    decomp = decomp or invariant_decomposition(rep)
    mat = markov_operator(rep, mu)
    b_mu = cocycle_on_measure(c, mu)

    inv = decomp.invariant_basis
    if inv.shape[1] and np.linalg.norm(inv.T @ b_mu) > 1e-9 * max(1.0, np.linalg.norm(b_mu)):
        raise NoSpectralGap(
            "b(mu) has a component along the invariant vectors; the averaged "
            "affine map has no fixed point"
        )
    comp = decomp.complement_basis
    restricted = restrict_to_complement(rep, mat, decomp)
    if restricted.size:
        if np.linalg.norm(restricted, 2) >= 1.0 - REFUSAL_MARGIN:
            raise NoSpectralGap(
                "no spectral gap for this measure: ||pi(mu)|_(B_pi)|| >= 1, the "
                "averaged affine map has no unique fixed point at this tolerance"
            )
        y = np.linalg.solve(np.eye(restricted.shape[0]) - restricted, comp.T @ b_mu)
        x1 = comp @ y
    else:
        x1 = np.zeros(rep.dim)

    x1_sparse = SparseVector.from_dense(x1)
    b_k = _add_coboundary(c, x1_sparse)
    residual = np.linalg.norm(cocycle_on_measure(b_k, mu))
    if residual > GAP_TOL * max(1.0, np.linalg.norm(b_mu)):
        raise NoSpectralGap(f"harmonization residual {residual:.3e} above tolerance")
    return x1, b_k


def _add_coboundary(c, x):
    """The cocycle g -> b(g) + (pi(g) x - x), in the same description
    format as the input."""
    rep = c.rep
    if c.kind == COBOUNDARY:
        return CocycleSpec(rep, COBOUNDARY, vector=c.vector + x)
    if c.kind == GENERATOR_VALUES:
        from .repcoc import apply_rep

        values = {}
        for i, val in c.values.items():
            s = rep.group.generator(i)
            values[i] = val + apply_rep(rep, s, x) - x
        return CocycleSpec(rep, GENERATOR_VALUES, values=values)
    raise GapError("harmonization supports generator-defined and coboundary cocycles")
