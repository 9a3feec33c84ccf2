"""Moduli of convexity and smoothness for finite-dimensional l_p spaces.

Moduli are computed by constrained local search with structured and
random restarts; every reported value is certified by an explicit
witness pair (u, v), so convexity values are upper bounds on delta and
smoothness values are lower bounds on rho.  Also: the Lindenstrauss
duality prediction, power-type constant fitting, and the orbit-sup
invariant renorming for finite groups of operators.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

CONVEXITY = "convexity"
SMOOTHNESS = "smoothness"

MAX_DIM = 16


class ModuliError(ValueError):
    pass


@dataclass(frozen=True)
class NormSpec:
    """l_p norm on R^dim; p = inf gives the max norm."""

    p: float
    dim: int

    def __post_init__(self):
        if self.p < 1:
            raise ModuliError("p must be >= 1")
        if not 2 <= self.dim <= MAX_DIM:
            raise ModuliError(f"dimension must lie in [2, {MAX_DIM}]")

    def norm(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        if np.isinf(self.p):
            return float(x.max())
        return float((x**self.p).sum() ** (1.0 / self.p))

    def norm_grad(self, x):
        """(Sub)gradient of the norm; exact for 1 < p < inf, a.e. valid
        sign vectors at the p = 1 and p = inf kinks."""
        x = np.asarray(x, dtype=float)
        n = self.norm(x)
        if n == 0:
            return np.zeros_like(x)
        if np.isinf(self.p):
            g = np.zeros_like(x)
            i = int(np.argmax(np.abs(x)))
            g[i] = np.sign(x[i])
            return g
        if self.p == 1:
            return np.sign(x)
        return np.sign(x) * (np.abs(x) / n) ** (self.p - 1.0)

    @property
    def dual_exponent(self):
        if self.p == 1:
            return np.inf
        if np.isinf(self.p):
            return 1.0
        return self.p / (self.p - 1.0)

    def dual(self):
        return NormSpec(self.dual_exponent, self.dim)


@dataclass
class ModulusCurve:
    """Sampled modulus with witnesses.

    points: (argument, value) pairs; witnesses: (u, v) per grid point.
    """

    kind: str
    args: np.ndarray
    values: np.ndarray
    witnesses: list
    norm_label: str = ""

    def __post_init__(self):
        self.args = np.asarray(self.args, dtype=float)
        self.values = np.asarray(self.values, dtype=float)


def _seed_pairs(dim, spread, rng, n_random, full=True):
    """Candidate (center, offset) direction pairs: coordinate axes with
    sign patterns catch the l_1 / l_inf kinks, random pairs the rest."""
    pairs = []
    if full:
        for i in range(dim):
            for j in range(dim):
                if i == j:
                    continue
                e_i = np.zeros(dim)
                e_i[i] = 1.0
                e_j = np.zeros(dim)
                e_j[j] = 1.0
                pairs.append((e_i, e_j))
                pairs.append((e_i, -e_j))
        ones = np.ones(dim)
        e0 = np.zeros(dim)
        e0[0] = 1.0
        pairs.append((ones, e0))
        pairs.append((e0, ones))
    for _ in range(n_random):
        w = rng.standard_normal(dim)
        z = rng.standard_normal(dim)
        pairs.append((w, z))
    return pairs


def _unit(norm, x):
    n = norm(x)
    if n == 0:
        raise ModuliError("zero direction")
    return np.asarray(x, dtype=float) / n


def modulus_convexity(spec, eps_grid, restarts=16, seed=0, norm=None, norm_grad=None):
    """delta(eps) = inf { 1 - ||u+v||/2 : ||u||,||v|| <= 1, ||u-v|| >= eps }.

    Local SLSQP descent from structured and random starts, warm-started
    along the grid; witnesses certify the returned values as upper
    bounds on delta.
    """
    norm_fn = norm if norm is not None else spec.norm
    grad_fn = norm_grad if norm is not None else spec.norm_grad
    dim = spec.dim
    eps_grid = np.asarray(eps_grid, dtype=float)
    if np.any(eps_grid > 2) or np.any(eps_grid <= 0):
        raise ModuliError("convexity arguments must lie in (0, 2]")
    rng = np.random.default_rng(seed)
    values = []
    witnesses = []
    warm = None
    for i, eps in enumerate(eps_grid):
        best = np.inf
        best_uv = None
        starts = []
        # full restart sweep periodically; between sweeps the warm start
        # plus a couple of fresh pairs track the continuously moving optimum
        n_random = restarts if (warm is None or i % 10 == 0) else 2
        for w, z in _seed_pairs(dim, eps, rng, n_random, full=warm is None or i % 10 == 0):
            try:
                wu = _unit(norm_fn, w)
                zu = _unit(norm_fn, z)
            except ModuliError:
                continue
            starts.append((wu * (1 - eps / 2) + zu * eps / 2, wu * (1 - eps / 2) - zu * eps / 2))
            starts.append((wu, zu))
        if warm is not None:
            starts.append(warm)
        for u0, v0 in starts:
            u, v = _descend_convexity(norm_fn, u0, v0, eps, grad_fn)
            if u is None:
                continue
            val = 1.0 - norm_fn(u + v) / 2.0
            if val < best:
                best = val
                best_uv = (u, v)
        if best_uv is None:
            raise ModuliError(f"no feasible witness found at eps = {eps}")
        values.append(max(best, 0.0))
        witnesses.append(best_uv)
        warm = best_uv
    return ModulusCurve(CONVEXITY, eps_grid, np.array(values), witnesses)


def _descend_convexity(norm, u0, v0, eps, grad=None):
    dim = len(u0)

    def objective(x):
        return 1.0 - norm(x[:dim] + x[dim:]) / 2.0

    cons = [
        {"type": "ineq", "fun": lambda x: 1.0 - norm(x[:dim])},
        {"type": "ineq", "fun": lambda x: 1.0 - norm(x[dim:])},
        {"type": "ineq", "fun": lambda x: norm(x[:dim] - x[dim:]) - eps},
    ]
    jac = None
    if grad is not None:
        def jac(x):
            g = grad(x[:dim] + x[dim:]) / 2.0
            return np.concatenate([-g, -g])

        cons[0]["jac"] = lambda x: np.concatenate([-grad(x[:dim]), np.zeros(dim)])
        cons[1]["jac"] = lambda x: np.concatenate([np.zeros(dim), -grad(x[dim:])])
        cons[2]["jac"] = lambda x: (
            lambda g: np.concatenate([g, -g])
        )(grad(x[:dim] - x[dim:]))
    x0 = np.concatenate([u0, v0])
    res = minimize(
        objective, x0, jac=jac, method="SLSQP", constraints=cons,
        options={"maxiter": 200, "ftol": 1e-12},
    )
    u, v = res.x[:dim], res.x[dim:]
    # repair tiny ball violations; reject if the separation breaks
    nu, nv = norm(u), norm(v)
    if nu > 1:
        u = u / nu
    if nv > 1:
        v = v / nv
    if norm(u - v) < eps * (1 - 1e-9):
        return None, None
    return u, v


def modulus_smoothness(spec, tau_grid, restarts=16, seed=0, norm=None, norm_grad=None):
    """rho(tau) = sup { (||u+v|| + ||u-v||)/2 - 1 : ||u|| <= 1, ||v|| <= tau }.

    Witnesses certify lower bounds on rho.
    """
    norm_fn = norm if norm is not None else spec.norm
    grad_fn = norm_grad if norm is not None else spec.norm_grad
    dim = spec.dim
    tau_grid = np.asarray(tau_grid, dtype=float)
    if np.any(tau_grid <= 0):
        raise ModuliError("smoothness arguments must be positive")
    rng = np.random.default_rng(seed)
    values = []
    witnesses = []
    warm = None
    for i, tau in enumerate(tau_grid):
        best = -np.inf
        best_uv = None
        starts = []
        n_random = restarts if (warm is None or i % 10 == 0) else 2
        for w, z in _seed_pairs(dim, tau, rng, n_random, full=warm is None or i % 10 == 0):
            try:
                wu = _unit(norm_fn, w)
                zu = _unit(norm_fn, z)
            except ModuliError:
                continue
            starts.append((wu, tau * zu))
            starts.append((wu, tau * wu))
        if warm is not None:
            starts.append(warm)
        for u0, v0 in starts:
            u, v = _ascend_smoothness(norm_fn, u0, v0, tau, grad_fn)
            if u is None:
                continue
            val = (norm_fn(u + v) + norm_fn(u - v)) / 2.0 - 1.0
            if val > best:
                best = val
                best_uv = (u, v)
        if best_uv is None:
            raise ModuliError(f"no feasible witness found at tau = {tau}")
        values.append(max(best, 0.0))
        witnesses.append(best_uv)
        warm = best_uv
    return ModulusCurve(SMOOTHNESS, tau_grid, np.array(values), witnesses)


def _ascend_smoothness(norm, u0, v0, tau, grad=None):
    dim = len(u0)

    def objective(x):
        return -((norm(x[:dim] + x[dim:]) + norm(x[:dim] - x[dim:])) / 2.0 - 1.0)

    cons = [
        {"type": "ineq", "fun": lambda x: 1.0 - norm(x[:dim])},
        {"type": "ineq", "fun": lambda x: tau - norm(x[dim:])},
    ]
    jac = None
    if grad is not None:
        def jac(x):
            gp = grad(x[:dim] + x[dim:])
            gm = grad(x[:dim] - x[dim:])
            return np.concatenate([-(gp + gm) / 2.0, -(gp - gm) / 2.0])

        cons[0]["jac"] = lambda x: np.concatenate([-grad(x[:dim]), np.zeros(dim)])
        cons[1]["jac"] = lambda x: np.concatenate([np.zeros(dim), -grad(x[dim:])])
    x0 = np.concatenate([u0, v0])
    res = minimize(
        objective, x0, jac=jac, method="SLSQP", constraints=cons,
        options={"maxiter": 200, "ftol": 1e-12},
    )
    u, v = res.x[:dim], res.x[dim:]
    nu, nv = norm(u), norm(v)
    if nu > 1:
        u = u / nu
    if nv > tau:
        v = v * (tau / nv)
    return u, v


# Dense 2-D oracles: the unit sphere is a one-parameter curve, so a fine
# angle grid brackets the optimum independently of the optimizer.


def sphere_point_2d(norm, theta):
    d = np.array([np.cos(theta), np.sin(theta)])
    return d / norm(d)


def _row_norms(norm, rows, row_norms=None):
    if row_norms is not None:
        return np.asarray(row_norms(rows), dtype=float)
    return np.array([norm(x) for x in rows])


def convexity_oracle_2d(norm, eps, n_angles=2000, row_norms=None):
    """row_norms, when given, maps an (m, 2) array to its m norms; without
    it the oracle falls back to one python call per vector."""
    thetas = np.linspace(0, 2 * np.pi, n_angles, endpoint=False)
    dirs = np.column_stack([np.cos(thetas), np.sin(thetas)])
    pts = dirs / _row_norms(norm, dirs, row_norms)[:, None]
    best = np.inf
    for i in range(n_angles):
        ok = _row_norms(norm, pts - pts[i], row_norms) >= eps
        if ok.any():
            val = 1.0 - _row_norms(norm, (pts + pts[i])[ok], row_norms).max() / 2.0
            best = min(best, val)
    return best


def smoothness_oracle_2d(norm, tau, n_angles=2000, row_norms=None):
    thetas = np.linspace(0, 2 * np.pi, n_angles, endpoint=False)
    dirs = np.column_stack([np.cos(thetas), np.sin(thetas)])
    pts = dirs / _row_norms(norm, dirs, row_norms)[:, None]
    best = -np.inf
    for i in range(n_angles):
        v = tau * pts[i]
        vals = (
            _row_norms(norm, pts + v, row_norms) + _row_norms(norm, pts - v, row_norms)
        ) / 2.0 - 1.0
        best = max(best, float(vals.max()))
    return best


# ---------------------------------------------------------------------------
# Lindenstrauss duality
# ---------------------------------------------------------------------------


def lindenstrauss_dual(delta_curve, tau_grid):
    """Predicted smoothness from the dual convexity curve:
    rho(tau) = sup_eps (tau * eps / 2 - delta_dual(eps)), the sup taken
    over the sampled eps grid plus the trivial eps = 0 term."""
    eps = np.concatenate([[0.0], delta_curve.args])
    delta = np.concatenate([[0.0], delta_curve.values])
    tau_grid = np.asarray(tau_grid, dtype=float)
    predicted = np.array([np.max(t * eps / 2.0 - delta) for t in tau_grid])
    return ModulusCurve(SMOOTHNESS, tau_grid, predicted, [None] * len(tau_grid))


def duality_residual(predicted, direct):
    """max |predicted - direct| on the shared tau grid; dominated by grid
    and optimizer error when the curves disagree."""
    if predicted.args.shape != direct.args.shape or not np.allclose(
        predicted.args, direct.args
    ):
        raise ModuliError("curves must share the tau grid")
    return float(np.abs(predicted.values - direct.values).max())


def fit_power_constants(curve, target_exponent):
    """Best power-type constant over the sampled grid.

    smoothness: K = max rho(tau)/tau^p (rho <= K tau^p), needs p > 1.
    convexity:  c = min delta(eps)/eps^q (delta >= c eps^q), needs q >= 2.
    """
    if curve.kind == SMOOTHNESS:
        if target_exponent <= 1:
            raise ModuliError("smoothness power type needs exponent > 1")
        return float(np.max(curve.values / curve.args**target_exponent))
    if target_exponent < 2:
        raise ModuliError("convexity power type needs exponent >= 2")
    return float(np.min(curve.values / curve.args**target_exponent))


# ---------------------------------------------------------------------------
# Invariant renorming
# ---------------------------------------------------------------------------

CLOSURE_CAP = 10**4


def enumerate_closure(operators, cap=CLOSURE_CAP, tol=1e-9):
    """Multiplicative closure of the operators (with inverses and the
    identity).  Raises if the closure exceeds the cap, i.e. the group is
    not verifiably finite at this resolution."""
    operators = [np.asarray(a, dtype=float) for a in operators]
    dim = operators[0].shape[0]
    gens = []
    for a in operators:
        gens.append(a)
        gens.append(np.linalg.inv(a))

    def key(m):
        # rounded floats, not int64: entries can exceed the int64 range
        # long before the cap fires on an infinite group
        return tuple(np.round(m / tol).ravel())

    closure = {key(np.eye(dim)): np.eye(dim)}
    queue = deque(closure.values())
    while queue:
        m = queue.popleft()
        for a in gens:
            prod = a @ m
            k = key(prod)
            if k not in closure:
                if len(closure) >= cap:
                    raise ModuliError(
                        f"operator closure exceeds {cap} elements; supply a uniform "
                        "bound to fall back to sampled orbits"
                    )
                closure[k] = prod
                queue.append(prod)
    return list(closure.values())


class OrbitNorm:
    """G-invariant norm ||v||' = sup over the orbit of ||A v||.

    For a finite group enumerated exactly this is invariant to rounding;
    the sampled variant (finite word budget under a supplied uniform
    bound) is heuristic and flagged as such.
    """

    def __init__(self, matrices, exact=True):
        self.matrices = np.asarray(matrices)
        self.exact = exact

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        return float(np.max(np.linalg.norm(self.matrices @ v, axis=1)))

    @property
    def group_order(self):
        return len(self.matrices)


def orbit_norm(operators, bound=None, sample_budget=4096, word_length=32, seed=0):
    """Build the orbit-sup norm, by exact closure when the generated
    group is finite, else by sampled words under an explicit bound."""
    try:
        return OrbitNorm(enumerate_closure(operators))
    except ModuliError:
        if bound is None:
            raise
    rng = np.random.default_rng(seed)
    operators = [np.asarray(a, dtype=float) for a in operators]
    gens = operators + [np.linalg.inv(a) for a in operators]
    dim = gens[0].shape[0]
    sampled = [np.eye(dim)]
    for _ in range(sample_budget):
        m = np.eye(dim)
        for _ in range(rng.integers(1, word_length + 1)):
            m = gens[rng.integers(len(gens))] @ m
        sampled.append(m)
    return OrbitNorm(sampled, exact=False)


def invariant_renorm(operators, v, bound=None, seed=0):
    """Renormed value ||v||' under the orbit-sup construction."""
    return orbit_norm(operators, bound=bound, seed=seed)(v)


def invariance_residual(norm, operators, vectors):
    """max over generators s and sample vectors of | ||s v||' - ||v||' |."""
    worst = 0.0
    for a in operators:
        a = np.asarray(a, dtype=float)
        for v in vectors:
            worst = max(worst, abs(norm(a @ v) - norm(v)))
    return worst
