"""Generated *-subalgebras, state-preserving conditional expectations, centers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoCompatibleCE, ValidationError
from .finalg import State, gns
from .tolerance import resolve


def _orth(columns, tol, base=None):
    """Orthonormal basis of span(base, columns); rank cut at tol * largest singular value."""
    cols = [] if base is None else [base]
    columns = [np.asarray(c, dtype=complex) for c in columns]
    norms = [np.linalg.norm(c) for c in columns]
    # rounding debris must not be normalized into a direction of its own
    floor = 1e-12 * max(norms, default=0.0)
    for c, nrm in zip(columns, norms):
        if nrm > max(floor, 1e-300):
            cols.append((c / nrm)[:, None])
    if not cols:
        return None
    M = np.hstack(cols)
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return None
    return U[:, s > tol * s[0]]


class StarSubalgebra:
    """A unital *-subalgebra, stored as an orthonormal basis in the GNS
    coordinates of a faithful reference state (the normalized trace unless
    given)."""

    def __init__(self, ambient, basis, reference=None):
        self.ambient = ambient
        reference = reference or State.trace(ambient)
        self._gns = gns(ambient, reference)
        self.reference = reference
        self.basis = basis  # dim(ambient) x r, orthonormal columns

    @property
    def dim(self):
        return self.basis.shape[1]

    def elements(self):
        return [self._gns.unhat(q) for q in self.basis.T]

    def selfadjoint_elements(self):
        """A basis of self-adjoint elements spanning the same subspace."""
        picks, cur = [], None
        for e in self.elements():
            for h in ((e + e.adjoint()) * 0.5, (e - e.adjoint()) * (-0.5j)):
                nxt = _orth([self._gns.hat(h)], 1e-10, cur)
                if nxt is not None and (cur is None or nxt.shape[1] > cur.shape[1]):
                    picks.append(h)
                    cur = nxt
        return picks

    def residual(self, x):
        """Reference-norm distance from ``x`` to the subspace, relative to ``|x|``."""
        v = self._gns.hat(x)
        nrm = np.linalg.norm(v)
        if nrm == 0:
            return 0.0
        r = v - self.basis @ (self.basis.conj().T @ v)
        return float(np.linalg.norm(r) / nrm)

    def contains(self, x, tol=None):
        return self.residual(x) <= resolve(tol)

    def issubset(self, other, tol=None):
        return all(other.contains(e, tol) for e in self.elements())

    def equals(self, other, tol=None):
        return self.dim == other.dim and self.issubset(other, tol)

    def is_abelian(self, tol=None):
        els = self.elements()
        tol = resolve(tol)
        return all(a.commutator(b).norm() <= tol for i, a in enumerate(els) for b in els[i + 1:])

    def __repr__(self):
        return f"StarSubalgebra(dim={self.dim} in {self.ambient})"


def generate_star_subalgebra(algebra, generators=(), tol=None, reference=None):
    """Smallest unital *-subalgebra containing ``generators``.

    Iterates span closure under adjoints and pairwise products until the
    dimension stops growing; the dimension is bounded by ``algebra.dim``.
    """
    tol = resolve(tol)
    for g in generators:
        if g.algebra != algebra:
            raise ValidationError(f"generator from {g.algebra} given for {algebra}")
    sub = StarSubalgebra(algebra, None, reference)
    hat = sub._gns.hat
    seeds = [algebra.unit()] + list(generators) + [g.adjoint() for g in generators]
    Q = _orth([hat(g) for g in seeds], tol)
    while True:
        sub.basis = Q
        els = sub.elements()
        cands = [hat(a @ b) for a in els for b in els] + [hat(a.adjoint()) for a in els]
        Q2 = _orth(cands, tol, Q)
        if Q2.shape[1] == Q.shape[1]:
            break
        Q = Q2
    return sub


def full_algebra(algebra, reference=None):
    sub = StarSubalgebra(algebra, None, reference)
    sub.basis = _orth([sub._gns.hat(e) for e in algebra.basis()], 1e-12)
    return sub


def subalgebra_from_elements(algebra, elements, tol=None, reference=None):
    """Span of ``elements`` taken as a subalgebra without closing it (caller's claim)."""
    sub = StarSubalgebra(algebra, None, reference)
    sub.basis = _orth([sub._gns.hat(e) for e in elements], resolve(tol))
    return sub


def relative_commutant(algebra, elements, tol=None, reference=None):
    """``{a in algebra : [a, e] = 0 for every e}``."""
    tol = resolve(tol)
    basis = algebra.basis()
    blocks = [np.column_stack([b.commutator(e).vec() for b in basis]) for e in elements]
    if not blocks:
        return full_algebra(algebra, reference)
    C = np.vstack(blocks)
    _, s, Vh = np.linalg.svd(C)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > tol * smax)) if smax > 0 else 0
    null = Vh[rank:].conj().T
    sols = [algebra.from_vec(null[:, j]) for j in range(null.shape[1])]
    return generate_star_subalgebra(algebra, sols, tol, reference)


def center(S, tol=None):
    """Center of ``S``: solves the commutation system on the basis of ``S``."""
    tol = resolve(tol)
    els = S.elements()
    A = S.ambient
    C = np.vstack([np.column_stack([a.commutator(b).vec() for a in els]) for b in els])
    _, s, Vh = np.linalg.svd(C)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > tol * smax)) if smax > 0 else 0
    null = Vh[rank:].conj().T
    sols = []
    for j in range(null.shape[1]):
        z = A.zero()
        for c, e in zip(null[:, j], els):
            z = z + c * e
        sols.append(z)
    return generate_star_subalgebra(A, sols, tol, S.reference)


def commutes_with(S, elements, tol=None):
    return commutation_residual(S, elements) <= resolve(tol)


def commutation_residual(S, elements):
    worst = 0.0
    for b in S.elements():
        for e in elements:
            worst = max(worst, b.commutator(e).norm())
    return worst


@dataclass
class ConditionalExpectation:
    """A linear map ``A -> N`` given by its matrix on coordinates of ``A``."""

    source: object
    target: StarSubalgebra
    matrix: np.ndarray
    state: State

    def __call__(self, x):
        return self.source.from_vec(self.matrix @ x.vec())


def expectation_residuals(E, rng=None, samples=100):
    """Largest violation of each conditional-expectation axiom."""
    A, N, M, phi = E.source, E.target, E.matrix, E.state
    rng = rng or np.random.default_rng(0)
    one = A.unit()
    res = {}
    res["unital"] = float(np.max(np.abs(M @ one.vec() - one.vec())))
    res["idempotent"] = float(np.max(np.abs(M @ M - M)))
    bim = 0.0
    for n in N.elements():
        L, R = A.left_matrix(n), A.right_matrix(n)
        scale = max(1.0, float(np.max(np.abs(L))))
        bim = max(bim, float(np.max(np.abs(M @ L - L @ M))) / scale,
                  float(np.max(np.abs(M @ R - R @ M))) / scale)
    res["bimodule"] = bim
    w = phi.functional()
    res["state_preserving"] = float(np.max(np.abs(w @ M - w)))
    neg = 0.0
    nels = N.elements()
    for _ in range(samples):
        a = A.random_element(rng)
        aa = a.adjoint() @ a
        ea = E(aa)
        scale = max(1.0, aa.norm())
        ea_h = (ea + ea.adjoint()) * 0.5
        low = min(float(np.min(np.linalg.eigvalsh(b))) for b in ea_h.blocks)
        neg = max(neg, -low / scale)
        coef = rng.standard_normal(len(nels)) + 1j * rng.standard_normal(len(nels))
        n = A.zero()
        for c, e in zip(coef, nels):
            n = n + c * e
        val = phi(n.adjoint() @ ea @ n)
        neg = max(neg, -val.real / (scale * max(1.0, n.norm() ** 2)))
    res["positivity"] = neg
    return res


def conditional_expectation(algebra, phi, N, tol=None):
    """The phi-preserving conditional expectation onto ``N``.

    Built as the GNS-orthogonal projection onto ``N`` and returned only if
    it satisfies every conditional-expectation axiom.
    """
    tol = resolve(tol)
    if N.ambient != algebra:
        raise ValidationError("subalgebra does not live in the given algebra")
    g = gns(algebra, phi)
    U = _orth([g.hat(n) for n in N.elements()], 1e-12)
    P = U @ U.conj().T
    M = g.unhat_matrix @ P @ g.hat_matrix
    E = ConditionalExpectation(algebra, N, M, phi)
    res = expectation_residuals(E)
    bad = {k: v for k, v in res.items() if v > tol}
    if bad:
        name = max(bad, key=bad.get)
        raise NoCompatibleCE(f"orthogonal projection fails the {name} axiom "
                             f"(subalgebra not invariant under the modular flow of the state)",
                             residual=bad[name])
    return E
