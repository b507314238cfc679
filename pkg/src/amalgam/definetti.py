"""Tail algebras, the projection-arm construction, exchangeability, ergodic averages."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import ovfree
from .errors import (IllConditioned, NotIdenticallyDistributed, ResidualTooLarge,
                     ValidationError)
from .finalg import BlockAlgebra, FaithfulState
from .ovfree import AmalgamatedModel, Arm, Letter, multiplicity_embedding, scalar_moment
from .subalg import generate_star_subalgebra
from .tolerance import resolve


@dataclass
class TailResult:
    subalgebra: object
    converged: bool
    degree_used: int
    dims_by_degree: list = field(default_factory=list)

    @property
    def dim(self):
        return self.subalgebra.dim


def _compositions(total):
    """Ordered tuples of positive integers summing to ``total``."""
    if total == 0:
        yield ()
        return
    for first in range(1, total + 1):
        for rest in _compositions(total - first):
            yield (first,) + rest


def _sweep(model, sub, degree, tol):
    """Add every ``E(x^{k_1} b_1 ... b_{n-1} x^{k_n})`` with ``sum k <= degree``.

    Outer base factors ``b_0, b_n`` are dropped: the result lies in an algebra
    exactly when the middle expectation does, by the bimodule property.
    """
    B = model.base
    basis = sub.elements()
    x = model.arms[0].x
    powers = {}
    cands = []
    for total in range(1, degree + 1):
        for ks in _compositions(total):
            for bs in itertools.product(basis, repeat=len(ks) - 1):
                a = powers.setdefault(ks[0], x.power(ks[0]))
                for b, k in zip(bs, ks[1:]):
                    a = a @ model.arms[0].embed(b) @ powers.setdefault(k, x.power(k))
                cands.append(model.arms[0].expect(a))
    grown = generate_star_subalgebra(B, basis + cands, tol, sub.reference)
    return grown


def tail_algebra(model, max_degree, tol=None, check_len=None):
    """Smallest unital subalgebra of the base closed under the moment expressions.

    Raises the total degree one step at a time, re-sweeping until stable at
    each degree; ``converged`` is set only if a further sweep at
    ``max_degree + 1`` adds nothing.
    """
    tol = resolve(tol)
    if max_degree < 1:
        raise ValidationError("max_degree must be at least 1")
    check_len = check_len or max_degree + 1
    resid = ovfree.identical_distribution_residual(model, check_len)
    if resid > tol:
        raise NotIdenticallyDistributed("arm moments differ; the tail algebra is only defined for "
                                        "identically distributed arms", residual=resid)
    B = model.base
    sub = generate_star_subalgebra(B, [], tol)
    dims = []
    for degree in range(1, max_degree + 1):
        while True:
            nxt = _sweep(model, sub, degree, tol)
            if nxt.dim == sub.dim:
                break
            sub = nxt
        dims.append(sub.dim)
    extra = _sweep(model, sub, max_degree + 1, tol)
    return TailResult(sub, extra.dim == sub.dim, max_degree, dims)


# --- the projection arm -----------------------------------------------------

@dataclass
class LemmaArmSpec:
    """Algebra ``N`` with faithful state and generating projections ``p_i``."""

    algebra: BlockAlgebra
    state: FaithfulState
    projections: list
    weights: np.ndarray = None
    betas: np.ndarray = None

    def __post_init__(self):
        m = len(self.projections)
        if m < 1:
            raise ValidationError("at least one projection is required")
        self.weights = np.full(m, 1.0 / m) if self.weights is None else np.asarray(self.weights, dtype=float)
        self.betas = 2.0 ** -np.arange(m) if self.betas is None else np.asarray(self.betas, dtype=float)
        if self.weights.shape != (m,) or self.betas.shape != (m,):
            raise ValidationError("one weight and one beta per projection")
        if np.any(self.weights <= 0) or abs(self.weights.sum() - 1) > 1e-12:
            raise ValidationError("weights must be strictly positive and sum to 1")
        if len(set(np.round(self.betas, 14))) != m or np.any(self.betas == 0):
            raise ValidationError("betas must be distinct and nonzero")

    def validate(self, tol=None):
        tol = resolve(tol)
        for k, p in enumerate(self.projections):
            if p.algebra != self.algebra:
                raise ValidationError(f"projection {k} is not in N")
            resid = max(float(np.max(np.abs((p @ p - p).vec()))), float(np.max(np.abs((p.adjoint() - p).vec()))))
            if resid > tol:
                raise ValidationError(f"generator {k} is not a projection", residual=resid)
        gen = generate_star_subalgebra(self.algebra, self.projections, tol)
        if gen.dim != self.algebra.dim:
            raise ValidationError(f"projections generate a subalgebra of dimension {gen.dim}, "
                                  f"not all of N (dimension {self.algebra.dim})")


def build_arm_lemma_aA(data, tol=None):
    """``A = N (+) ... (+) N``, diagonal ``N``, ``E = sum alpha_i y_i``, ``a = (beta_i p_i)``."""
    data.validate(tol)
    N = data.algebra
    m = len(data.projections)
    A = BlockAlgebra(N.block_dims * m)
    nb = len(N.block_dims)
    mult = np.zeros((nb * m, nb), dtype=int)
    for i in range(m):
        mult[i * nb:(i + 1) * nb] = np.eye(nb, dtype=int)
    iota = multiplicity_embedding(N, A, mult)
    E = np.hstack([alpha * np.eye(N.dim) for alpha in data.weights])
    a = A.element([blk for beta, p in zip(data.betas, data.projections) for blk in (beta * p).blocks])
    return Arm(N, A, iota, E, a)


def moment_powers(arm, K):
    """``[E(a^1), ..., E(a^K)]``."""
    out, u = [], arm.algebra.unit()
    for _ in range(K):
        u = u @ arm.x
        out.append(arm.expect(u))
    return out


@dataclass
class VandermondeRecovery:
    projections: list
    condition_number: float
    residual: float


def vandermonde_recover(moments, weights, betas, tol=None, max_condition=1e12):
    """Solve ``sum_i alpha_i beta_i^k p_i = m_k`` (k = 1..K) for the ``p_i``."""
    tol = resolve(tol)
    weights = np.asarray(weights, dtype=float)
    betas = np.asarray(betas, dtype=float)
    K, m = len(moments), len(betas)
    if K < m:
        raise ValidationError(f"{m} unknowns need at least {m} moments, got {K}")
    N = moments[0].algebra
    V = betas[None, :] ** np.arange(1, K + 1)[:, None]
    cond = float(np.linalg.cond(V))
    if not np.isfinite(cond) or cond > max_condition:
        raise IllConditioned(f"Vandermonde system has condition number {cond:.3e}", condition_number=cond)
    M = np.vstack([mk.vec() for mk in moments])
    Q, *_ = np.linalg.lstsq(V, M, rcond=None)
    resid = float(np.max(np.abs(V @ Q - M)))
    if resid > tol:
        raise ResidualTooLarge(f"moments are inconsistent with {m} weighted projections", residual=resid)
    projections = [N.from_vec(Q[i] / weights[i]) for i in range(m)]
    worst = 0.0
    for p in projections:
        worst = max(worst, float(np.max(np.abs((p @ p - p).vec()))), float(np.max(np.abs((p.adjoint() - p).vec()))))
    if worst > tol * max(1.0, cond):
        raise ResidualTooLarge("recovered elements are not projections", residual=worst)
    return VandermondeRecovery(projections, cond, max(resid, worst))


def build_definetti_model(algebra, state, projections, n_arms, weights=None, betas=None, tol=None):
    """``n_arms`` identical copies of the projection arm over ``(N, phi)``."""
    if n_arms < 2:
        raise ValidationError("at least two arms are needed to model a sequence")
    arm = build_arm_lemma_aA(LemmaArmSpec(algebra, state, list(projections), weights, betas), tol)
    return AmalgamatedModel(algebra, state, [arm] * n_arms, tol)


# --- exchangeability ------------------------------------------------------

def exchangeability_residual(model, max_len):
    """Largest change of a scalar moment of an ``x``-word under an adjacent arm transposition."""
    if max_len < 1:
        raise ValidationError("max_len must be at least 1")
    n = model.n_arms
    table = {}
    for length in range(1, max_len + 1):
        for arms in itertools.product(range(n), repeat=length):
            table[arms] = scalar_moment(model, model.x_word(arms))
    worst = 0.0
    for arms, val in table.items():
        for s in range(n - 1):
            swapped = tuple(s + 1 if a == s else s if a == s + 1 else a for a in arms)
            worst = max(worst, abs(table[swapped] - val))
    return worst


def check_exchangeable(model, max_len, tol=None):
    return exchangeability_residual(model, max_len) <= resolve(tol)


# --- ergodic averages -----------------------------------------------------

@dataclass
class ErgodicAverage:
    value: float
    squared: float
    max_term_norm_sq: float
    bound: float
    span: int

    @property
    def within_bound(self):
        return self.squared <= self.bound * (1 + 1e-9) + 1e-12


def _pattern(model, pattern):
    out = []
    for item in pattern:
        if isinstance(item, (int, np.integer)):
            out.append((int(item), None))
        else:
            out.append((int(item[0]), item[1]))
    return out


def ergodic_average_norm(model, pattern, q, K):
    """``|| (1/K) sum_{p=q}^{q+K-1} y_p ||_phi`` for ``y_p`` the shifted word minus its expectation.

    ``pattern`` lists arm offsets (letter ``x``) or ``(offset, element)`` pairs.
    Computed exactly from the Gram matrix of the ``y_p``.
    """
    pat = _pattern(model, pattern)
    if K < 1 or q < 0:
        raise ValidationError("need K >= 1 and q >= 0")
    offs = [o for o, _ in pat]
    span = max(offs) - min(offs)
    need = q + K - 1 + max(offs) + 1
    if min(offs) < 0:
        raise ValidationError("offsets must be non-negative")
    if need > model.n_arms:
        raise ValidationError(f"pattern needs {need} arms, model has {model.n_arms}")

    def word(p):
        return tuple(Letter(o + p, model.arms[o + p].x if el is None else el) for o, el in pat)

    b = ovfree.moment_centering(model, word(0))
    bstar = b.adjoint()
    psi = model.state
    bb = psi(bstar @ b)

    def inner(p, pp):
        """``phi(y_pp^* y_p)``."""
        w, ww = word(p), word(pp)
        wws = ovfree.adjoint_word(ww)
        val = scalar_moment(model, wws + w)
        val -= scalar_moment(model, ovfree.push_right(model, wws, b))
        val -= scalar_moment(model, ovfree.push_left(model, bstar, w))
        return val + bb

    ps = range(q, q + K)
    G = np.array([[inner(p, pp) for p in ps] for pp in ps])
    total = float(np.real(G.sum())) / K ** 2
    norms = np.real(np.diag(G))
    mx = float(np.max(norms))
    return ErgodicAverage(float(np.sqrt(max(total, 0.0))), total, mx, (span + 1) * mx / K, span)
