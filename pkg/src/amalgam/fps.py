"""Characters, scalar freeness, GNS quotients and the central-tail verdict.

A tail algebra that commutes with the variables splits the state into an
exact finite mixture of free product states, one per character of the
tail; a non-central tail admits no such split.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import ovfree
from .errors import (IllDefined, NotCentral, NotCommutative, StateNotEPreserving,
                     ValidationError)
from .finalg import BlockAlgebra, FaithfulState, State, functional_density, gns
from .ovfree import AmalgamatedModel, Arm, Letter, multiplicity_embedding
from .subalg import (ConditionalExpectation, _orth, commutation_residual, conditional_expectation,
                     generate_star_subalgebra, subalgebra_from_elements)
from .tolerance import resolve


# --- characters -------------------------------------------------------------

@dataclass
class Character:
    """Evaluation at the ``index``-th minimal projection of a commutative subalgebra."""

    subalgebra: object
    index: int
    projection: object

    def __call__(self, d):
        z = self.projection.vec()
        return complex(np.vdot(z, d.vec()) / np.vdot(z, z))


def characters(D, tol=None, attempts=10):
    """Characters of a commutative subalgebra, found by joint diagonalization.

    A random self-adjoint combination of the basis is diagonalized blockwise;
    its spectral projections are the minimal projections of ``D`` whenever
    they number ``dim D``.
    """
    tol = resolve(tol)
    if not D.is_abelian(max(tol, 1e-10)):
        raise NotCommutative("subalgebra is not commutative")
    A = D.ambient
    herm = D.selfadjoint_elements()
    rng = np.random.default_rng(0)
    for _ in range(attempts):
        coef = rng.uniform(0.5, 1.5, len(herm))
        h = A.zero()
        for c, e in zip(coef, herm):
            h = h + c * e
        pairs = []
        for k, blk in enumerate(h.blocks):
            vals, vecs = np.linalg.eigh((blk + blk.conj().T) / 2)
            pairs.extend((float(v), k, vecs[:, j]) for j, v in enumerate(vals))
        pairs.sort(key=lambda p: p[0])
        scale = max(1.0, max(abs(p[0]) for p in pairs))
        groups = [[pairs[0]]]
        for p in pairs[1:]:
            if p[0] - groups[-1][-1][0] > 1e-7 * scale:
                groups.append([p])
            else:
                groups[-1].append(p)
        if len(groups) != D.dim:
            continue
        projs = []
        for g in groups:
            blocks = [np.zeros((n, n), dtype=complex) for n in A.block_dims]
            for _, k, v in g:
                blocks[k] += np.outer(v, v.conj())
            projs.append(A.element(blocks))
        if all(D.contains(z, 1e-7) for z in projs):
            break
    else:
        raise NotCommutative("joint diagonalization failed to split the subalgebra into characters")

    def order(z):
        v = z.vec()
        idx = int(np.flatnonzero(np.abs(v) > 1e-8)[0])
        return (idx, -round(float(v[idx].real), 8))

    projs.sort(key=order)
    return [Character(D, i, z) for i, z in enumerate(projs)]


# --- scalar freeness --------------------------------------------------------

def _independent(elements, tol=1e-10):
    picks, cur = [], None
    for e in elements:
        nxt = _orth([e.vec()], tol, cur)
        if nxt is not None and (cur is None or nxt.shape[1] > cur.shape[1]):
            picks.append(e)
            cur = nxt
    return picks


def _alternating(n_groups, length):
    for seq in itertools.product(range(n_groups), repeat=length):
        if all(a != b for a, b in zip(seq, seq[1:])):
            yield seq


def scalar_freeness_residual(arm_elements, rho, max_len):
    """Largest ``|rho(c_1 ... c_n)|`` over alternating words of rho-centered letters.

    ``arm_elements[i]`` spans the algebra of group ``i``; ``rho`` maps a
    sequence of ``(group, element)`` pairs to a scalar.
    """
    letters = []
    for i, els in enumerate(arm_elements):
        cent = [e - rho(((i, e),)) * e.algebra.unit() for e in els]
        letters.append(_independent([c for c in cent if c.hs_norm() > 1e-12]))
    worst = 0.0
    for length in range(2, max_len + 1):
        for seq in _alternating(len(letters), length):
            for choice in itertools.product(*(letters[g] for g in seq)):
                worst = max(worst, abs(rho(tuple(zip(seq, choice)))))
    return worst


def check_scalar_freeness(arm_elements, rho, max_len, tol=None):
    """Freeness over the scalars, verified only up to words of length ``max_len``."""
    return scalar_freeness_residual(arm_elements, rho, max_len) <= resolve(tol)


def matrix_functional(state):
    """``rho`` for elements living in one algebra: multiply, then apply ``state``."""
    def rho(word):
        out = word[0][1]
        for _, e in word[1:]:
            out = out @ e
        return state(out)
    return rho


def engine_functional(model, functional):
    """``rho(word) = functional(E(word))`` with ``E`` from the centering engine.

    ``functional`` is a callable on base elements (a character, a state).
    """
    def rho(word):
        return functional(ovfree.moment_centering(model, tuple(Letter(i, e) for i, e in word)))
    return rho


def variable_algebra_basis(arm, tol=None):
    """Basis of the unital *-algebra generated by the arm variable."""
    return generate_star_subalgebra(arm.algebra, [arm.x], tol).elements()


# --- GNS projection and induced expectation ---------------------------------

@dataclass
class GnsProjection:
    projection: np.ndarray
    residual: float
    hat_residual: float


def _state_preservation(phi, E):
    w = phi.functional()
    return float(np.max(np.abs(w @ E.matrix - w)))


def gns_projection_check(algebra, phi, E, tol=None):
    """Projection onto the closure of the hat image of the target, and the
    residual of ``pi(E(x)) P = P pi(x) P`` over a basis."""
    tol = resolve(tol)
    pres = _state_preservation(phi, E)
    if pres > tol:
        raise StateNotEPreserving("the state is not preserved by the expectation", residual=pres)
    g = gns(algebra, phi)
    U = _orth([g.hat(n) for n in E.target.elements()], 1e-12)
    P = U @ U.conj().T
    res = hat_res = 0.0
    for x in algebra.basis():
        lhs = g.pi(E(x)) @ P
        rhs = P @ g.pi(x) @ P
        res = max(res, float(np.max(np.abs(lhs - rhs))))
        hat_res = max(hat_res, float(np.max(np.abs(g.hat(E(x)) - P @ g.hat(x)))))
    return GnsProjection(P, res, hat_res)


@dataclass
class InducedExpectation:
    """``E_phi`` on the GNS image ``pi_phi(A)``, which is the sum of the blocks
    where the density is nonzero."""

    source: BlockAlgebra
    quotient: BlockAlgebra
    kept_blocks: tuple
    matrix: np.ndarray
    target: object
    margin: float
    quotient_state: State

    def project(self, x):
        """``pi_phi(x)``."""
        return self.quotient.element([x.blocks[k] for k in self.kept_blocks])

    def __call__(self, y):
        return self.quotient.from_vec(self.matrix @ y.vec())


def induced_expectation(algebra, state, N, E, tol=None):
    """Expectation induced on the GNS quotient of a possibly non-faithful state.

    ``N`` must be central; the faithfulness margin is the smallest
    eigenvalue of the densities of ``ev o E_phi`` over the characters of
    ``pi_phi(N)``.
    """
    tol = resolve(tol)
    cres = commutation_residual(N, algebra.basis())
    if cres > tol:
        raise NotCentral("expectation target is not contained in the center", residual=cres)
    pres = _state_preservation(state, E)
    if pres > tol:
        raise StateNotEPreserving("the state is not preserved by the expectation", residual=pres)
    kept = tuple(k for k, d in enumerate(state.density) if float(np.max(np.abs(d))) > tol)
    Q = BlockAlgebra(tuple(algebra.block_dims[k] for k in kept))
    sel = np.zeros((Q.dim, algebra.dim))
    for qk, k in enumerate(kept):
        n = algebra.block_dims[k]
        sel[Q.offsets[qk]:Q.offsets[qk + 1], algebra.offsets[k]:algebra.offsets[k + 1]] = np.eye(n * n)
    dropped = [k for k in range(len(algebra.block_dims)) if k not in kept]
    ill = 0.0
    for k in dropped:
        lo, hi = algebra.offsets[k], algebra.offsets[k + 1]
        ill = max(ill, float(np.max(np.abs(sel @ E.matrix[:, lo:hi]))) if hi > lo else 0.0)
    if ill > tol:
        raise IllDefined("E does not respect the GNS null space", residual=ill)
    M = sel @ E.matrix @ sel.T
    target = generate_star_subalgebra(Q, [Q.from_vec(sel @ n.vec()) for n in N.elements()], tol)
    qstate = State(Q, [state.density[k] for k in kept])
    margin = np.inf
    for ch in characters(target, tol):
        f = np.array([ch(Q.from_vec(M @ e.vec())) for e in Q.basis()])
        dens = functional_density(Q, f)
        z = ch.projection
        for k, n in enumerate(Q.block_dims):
            if np.allclose(z.blocks[k], np.eye(n), atol=1e-8):
                d = (dens[k] + dens[k].conj().T) / 2
                margin = min(margin, float(np.min(np.linalg.eigvalsh(d))))
    return InducedExpectation(algebra, Q, kept, M, target, float(margin), qstate)


# --- fixtures -----------------------------------------------------------------

def example_47_model(t=0.25, weights=(0.5, 0.5), n_arms=4):
    """Base C+C as the diagonal of M_2, E = diagonal part, x the rotated rank-one projection."""
    if not 0 < t < 0.5:
        raise ValidationError(f"t must lie in the open interval (0, 1/2), got {t}")
    B = BlockAlgebra((1, 1))
    psi = FaithfulState(B, [[[weights[0]]], [[weights[1]]]])
    A = BlockAlgebra((2,))
    iota = multiplicity_embedding(B, A, [[1, 1]])
    E = np.zeros((2, 4))
    E[0, 0] = E[1, 3] = 1.0
    s = np.sqrt(t * (1 - t))
    x = A.element([[[t, s], [s, 1 - t]]])
    return AmalgamatedModel(B, psi, [Arm(B, A, iota, E, x)] * n_arms)


def central_fiber_model(n_arms=3, weights=(0.5, 0.5), t=0.25):
    """Arms M_2 + M_2 over C+C embedded as scalar blocks, E = blockwise normalized trace.

    The variable is a rank-one projection on fiber 1 and twice one on fiber 2,
    so the fibers have different distributions.
    """
    B = BlockAlgebra((1, 1))
    psi = FaithfulState(B, [[[weights[0]]], [[weights[1]]]])
    A = BlockAlgebra((2, 2))
    iota = multiplicity_embedding(B, A, [[2, 0], [0, 2]])
    E = np.zeros((2, 8))
    E[0, [0, 3]] = 0.5
    E[1, [4, 7]] = 0.5
    s = np.sqrt(t * (1 - t))
    x = A.element([[[t, s], [s, 1 - t]], [[1.0, 1.0], [1.0, 1.0]]])
    return AmalgamatedModel(B, psi, [Arm(B, A, iota, E, x)] * n_arms)


def fiber_margin_model(delta):
    """``M_2`` over the fibers ``{delta, 1/2, 1 - delta}`` with ``E(a)(t) = t a_11 + (1-t) a_22``.

    Returns ``(A, phi, N, E)`` with ``phi`` the evaluation at fiber ``delta``
    composed with ``E``; ``N`` is the center.
    """
    if not 0 < delta < 0.5:
        raise ValidationError(f"delta must lie in (0, 1/2), got {delta}")
    fibers = (delta, 0.5, 1 - delta)
    A = BlockAlgebra((2, 2, 2))
    ref = FaithfulState(A, [np.diag([t, 1 - t]) / 3 for t in fibers])
    N = generate_star_subalgebra(A, [A.block_projection(k) for k in range(3)])
    E = conditional_expectation(A, ref, N)
    phi = State(A, [np.diag([delta, 1 - delta]), np.zeros((2, 2)), np.zeros((2, 2))])
    return A, phi, N, E


def margin_sweep(deltas=(1e-1, 1e-2, 1e-3), tol=None):
    out = []
    for d in deltas:
        A, phi, N, E = fiber_margin_model(d)
        ind = induced_expectation(A, phi, N, E, tol)
        weights = [float(ind(ind.quotient.matrix_unit(0, i, i)).blocks[0][0, 0].real) for i in range(2)]
        out.append({"delta": d, "margin": ind.margin, "weights": weights,
                    "quotient_blocks": list(ind.quotient.block_dims)})
    return out


# --- quotient freeness -------------------------------------------------------

def _arm_target(arm):
    B = arm.base
    images = [arm.embed(e) for e in B.basis()]
    return subalgebra_from_elements(arm.algebra, images, 1e-12)


def _check_central_base(model, tol):
    worst = 0.0
    for arm in model.arms:
        worst = max(worst, commutation_residual(_arm_target(arm), arm.algebra.basis()))
    if worst > tol:
        raise NotCentral("the base is not central in every arm", residual=worst)


def quotient_freeness_residual(model, phi_weights, max_len, tol=None):
    """Freeness over ``pi(B)`` with respect to ``E_phi`` for ``phi = phi_B o E``.

    Letters are the ``E``-centered elements of ``W*(B, x_i)`` supported on
    the fibers that ``phi_B`` sees; alternating words must have expectation
    vanishing on those fibers.
    """
    tol = resolve(tol)
    B = model.base
    if not B.is_abelian:
        raise ValidationError("quotient freeness needs a commutative base")
    _check_central_base(model, tol)
    w = np.asarray(phi_weights, dtype=float)
    if w.shape != (B.dim,) or np.any(w < -tol) or abs(w.sum() - 1) > tol:
        raise ValidationError("phi_B must be a probability vector over the base fibers")
    keep = np.flatnonzero(w > tol)
    zY = B.from_vec(np.isin(np.arange(B.dim), keep).astype(complex))
    phi_B = State(B, [[[v]] for v in w])
    for i, arm in enumerate(model.arms[:1]):  # arms are checked identical by the caller's model
        target = _arm_target(arm)
        E = ConditionalExpectation(arm.algebra, target, arm.embedding @ arm.expectation,
                                   State(arm.algebra, ovfree.induced_density(arm, phi_B)))
        induced_expectation(arm.algebra, E.state, target, E, tol)
    letters = []
    for arm in model.arms:
        alg = generate_star_subalgebra(arm.algebra, [arm.embed(e) for e in B.basis()] + [arm.x], tol)
        reps = [a @ arm.embed(zY) for a in alg.elements()]
        cent = [a - arm.embed(arm.expect(a)) for a in reps]
        letters.append(_independent([c for c in cent if c.hs_norm() > 1e-12]))
    worst = 0.0
    for length in range(2, max_len + 1):
        for seq in _alternating(model.n_arms, length):
            for choice in itertools.product(*(letters[g] for g in seq)):
                val = ovfree.moment_centering(model, tuple(Letter(g, c) for g, c in zip(seq, choice)))
                worst = max(worst, float(np.max(np.abs((val @ zY).vec()))))
    return worst


def check_quotient_freeness(model, phi_weights, max_len, tol=None):
    return quotient_freeness_residual(model, phi_weights, max_len, tol) <= resolve(tol)


# --- mixtures and the verdict ------------------------------------------------

def spectral_measure(arm, functional, tol=None):
    """Atoms and masses of ``x`` under the functional ``a -> functional @ a.vec()``."""
    tol = resolve(tol)
    pairs = []
    for k, blk in enumerate(arm.x.blocks):
        vals, vecs = np.linalg.eigh((blk + blk.conj().T) / 2)
        pairs.extend((float(v), k, vecs[:, j]) for j, v in enumerate(vals))
    pairs.sort(key=lambda p: p[0])
    groups = [[pairs[0]]]
    for p in pairs[1:]:
        if p[0] - groups[-1][-1][0] > 1e-9 * max(1.0, abs(p[0])):
            groups.append([p])
        else:
            groups[-1].append(p)
    atoms, masses = [], []
    for g in groups:
        blocks = [np.zeros((n, n), dtype=complex) for n in arm.algebra.block_dims]
        for _, k, v in g:
            blocks[k] += np.outer(v, v.conj())
        mass = complex(functional @ arm.algebra.element(blocks).vec())
        if mass.real > tol:
            atoms.append(float(np.mean([p[0] for p in g])))
            masses.append(mass.real)
    return np.array(atoms), np.array(masses)


def scalar_free_model(measures):
    """Free product over the scalars of commutative arms ``(atoms, masses)``."""
    C = BlockAlgebra((1,))
    one = FaithfulState(C, [[[1.0]]])
    arms = []
    for atoms, masses in measures:
        A = BlockAlgebra((1,) * len(atoms))
        iota = np.ones((A.dim, 1), dtype=complex)
        E = (np.asarray(masses, dtype=complex) / np.sum(masses))[None, :]
        x = A.element([[[a]] for a in atoms])
        arms.append(Arm(C, A, iota, E, x))
    return AmalgamatedModel(C, one, arms)


@dataclass
class FreeProductStateMixture:
    """``phi = sum_w weight_w * (free product state w)`` on polynomials in the ``x_i``."""

    weights: np.ndarray
    components: list
    bounds: list
    measures: list = field(default_factory=list)

    def component_moment(self, w, arms):
        return ovfree.scalar_moment(self.components[w], self.components[w].x_word(arms))

    def moment(self, arms):
        return sum(wt * self.component_moment(k, arms) for k, wt in enumerate(self.weights))

    def bound_residual(self, max_power=8):
        """Largest ``|psi(X_i^k)| - C_i^k`` over components, arms and ``k <= max_power``."""
        worst = -np.inf
        for comp in self.components:
            for i in range(comp.n_arms):
                for k in range(1, max_power + 1):
                    val = abs(ovfree.scalar_moment(comp, comp.x_word([i] * k)))
                    worst = max(worst, val - self.bounds[i] ** k)
        return worst

    def equidistribution_residual(self, max_power=8):
        worst = 0.0
        for comp in self.components:
            for k in range(1, max_power + 1):
                ref = ovfree.scalar_moment(comp, comp.x_word([0] * k))
                for i in range(1, comp.n_arms):
                    worst = max(worst, abs(ovfree.scalar_moment(comp, comp.x_word([i] * k)) - ref))
        return worst


@dataclass
class CentralTail:
    mixture: FreeProductStateMixture
    max_len: int
    mixture_residual: float

    verdict = "CentralTail"


@dataclass
class NonCentralTail:
    diagnostic: str
    commutator_residual: float

    verdict = "NonCentralTail"


def mixture_residual(model, mixture, max_len):
    worst = 0.0
    for length in range(1, max_len + 1):
        for arms in itertools.product(range(model.n_arms), repeat=length):
            lhs = ovfree.scalar_moment(model, model.x_word(arms))
            worst = max(worst, abs(lhs - mixture.moment(arms)))
    return worst


def centrality_verdict(model, tail, max_len, tol=None):
    """Central tail -> exact mixture of free product states; otherwise :class:`NonCentralTail`."""
    tol = resolve(tol)
    T = tail.subalgebra
    comm = 0.0
    for arm in model.arms:
        comm = max(comm, max(arm.embed(t).commutator(arm.x).norm() for t in T.elements()))
    if comm > tol:
        return NonCentralTail("tail algebra does not commute with the variables", float(comm))
    if not T.is_abelian(tol):
        return NonCentralTail("tail commutes with the variables but is not commutative", float(comm))
    B = model.base
    psi = model.state
    if T.dim == B.dim:
        down = np.eye(B.dim)
    else:
        down = conditional_expectation(B, psi, T, tol).matrix
    chars = characters(T, tol)
    weights = np.array([psi(ch.projection).real for ch in chars])
    components, measures = [], []
    for ch in chars:
        f = np.array([ch(B.from_vec(down @ e.vec())) for e in B.basis()])
        arm_measures = [spectral_measure(arm, f @ arm.expectation, tol) for arm in model.arms]
        measures.append(arm_measures)
        components.append(scalar_free_model(arm_measures))
    mix = FreeProductStateMixture(weights, components, [arm.bound for arm in model.arms], measures)
    return CentralTail(mix, max_len, mixture_residual(model, mix, max_len))
