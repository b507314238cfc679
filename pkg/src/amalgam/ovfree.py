"""Amalgamated free products over a finite-dimensional base.

The free product itself is never materialized.  Joint moments of words are
computed from the arm data in two independent ways:

* :func:`moment_centering` splits each letter into its base part and its
  centered part and uses that alternating centered words have expectation 0;
* :func:`moment_cumulant` sums operator-valued free cumulants over the
  noncrossing partitions whose blocks stay inside one arm.

Their agreement is the main correctness check of the package.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import ncpart
from .errors import (EmbeddingNotHomomorphism, ExpectationError, FaithfulnessError,
                     UnsupportedWord, ValidationError)
from .finalg import AlgElement, BlockAlgebra, FaithfulState, State, functional_density
from .subalg import conditional_expectation, subalgebra_from_elements
from .tolerance import resolve

MAX_WORD_LEN = 12


def _vec_mul(dims, offs, u, v):
    if len(dims) == offs[-1]:  # abelian
        return u * v
    out = np.empty(offs[-1], dtype=complex)
    for k, n in enumerate(dims):
        lo, hi = offs[k], offs[k + 1]
        out[lo:hi] = (u[lo:hi].reshape(n, n) @ v[lo:hi].reshape(n, n)).ravel()
    return out


def multiplicity_embedding(base, algebra, multiplicities):
    """Coordinate matrix of the block-diagonal embedding of ``base`` into ``algebra``.

    ``multiplicities[k][j]`` copies of base block ``j`` are placed on the
    diagonal of algebra block ``k``, in block order.
    """
    mult = np.asarray(multiplicities, dtype=int)
    if mult.shape != (len(algebra.block_dims), len(base.block_dims)):
        raise ValidationError(f"multiplicity matrix of shape {(len(algebra.block_dims), len(base.block_dims))} "
                              f"expected, got {mult.shape}")
    for k, N in enumerate(algebra.block_dims):
        size = int(mult[k] @ np.array(base.block_dims))
        if size != N:
            raise EmbeddingNotHomomorphism(f"multiplicities fill {size} of the {N} rows of block {k}: not unital")
    M = np.zeros((algebra.dim, base.dim), dtype=complex)
    for k, N in enumerate(algebra.block_dims):
        pos = 0
        for j, n in enumerate(base.block_dims):
            for _ in range(mult[k, j]):
                for p in range(n):
                    for q in range(n):
                        col = base.offsets[j] + p * n + q
                        row = algebra.offsets[k] + (pos + p) * N + (pos + q)
                        M[row, col] = 1.0
                pos += n
    return M


class Arm:
    """One free factor: algebra ``A``, embedding of the base, expectation onto it, variable ``x``."""

    def __init__(self, base, algebra, embedding, expectation, x):
        self.base = base
        self.algebra = algebra
        self.embedding = np.asarray(embedding, dtype=complex)
        self.expectation = np.asarray(expectation, dtype=complex)
        if self.embedding.shape != (algebra.dim, base.dim):
            raise ValidationError(f"embedding must be {algebra.dim}x{base.dim}, got {self.embedding.shape}")
        if self.expectation.shape != (base.dim, algebra.dim):
            raise ValidationError(f"expectation must be {base.dim}x{algebra.dim}, got {self.expectation.shape}")
        if x.algebra != algebra:
            raise ValidationError("variable does not belong to the arm algebra")
        self.x = x

    @classmethod
    def from_state(cls, base, algebra, embedding, state, x, tol=None):
        """Arm whose expectation is the ``state``-preserving one onto the embedded base."""
        embedding = np.asarray(embedding, dtype=complex)
        images = [algebra.from_vec(embedding @ e.vec()) for e in base.basis()]
        target = subalgebra_from_elements(algebra, images, 1e-12)
        ce = conditional_expectation(algebra, state, target, tol)
        expectation = np.linalg.pinv(embedding) @ ce.matrix
        return cls(base, algebra, embedding, expectation, x)

    @property
    def bound(self):
        """``C_i``: operator norm of the variable."""
        return self.x.norm()

    def embed(self, b):
        return self.algebra.from_vec(self.embedding @ b.vec())

    def expect(self, a):
        return self.base.from_vec(self.expectation @ a.vec())

    def with_variable(self, x):
        return Arm(self.base, self.algebra, self.embedding, self.expectation, x)


def embedding_residuals(base, algebra, embedding):
    """Unitality and *-homomorphism defects of a coordinate embedding matrix."""
    I = np.asarray(embedding, dtype=complex)
    res = {"unital": float(np.max(np.abs(I @ base.unit().vec() - algebra.unit().vec())))}
    basis = base.basis()
    imgs = [algebra.from_vec(I @ e.vec()) for e in basis]
    mult = 0.0
    for e, ie in zip(basis, imgs):
        mult = max(mult, float(np.max(np.abs(I @ e.adjoint().vec() - ie.adjoint().vec()))))
        for f, jf in zip(basis, imgs):
            mult = max(mult, float(np.max(np.abs(I @ (e @ f).vec() - (ie @ jf).vec()))))
    res["homomorphism"] = mult
    return res


def check_embedding(base, algebra, embedding, tol=None, index=0):
    res = embedding_residuals(base, algebra, embedding)
    worst = max(res.values())
    if worst > resolve(tol):
        raise EmbeddingNotHomomorphism(f"arm {index}: embedding is not a unital *-homomorphism", residual=worst)
    return res


def arm_residuals(arm, state, rng=None, samples=50):
    """Largest violation of each arm invariant."""
    B, A, I, E = arm.base, arm.algebra, arm.embedding, arm.expectation
    res = embedding_residuals(B, A, I)
    basis = B.basis()
    imgs = [A.from_vec(I @ e.vec()) for e in basis]
    res["left_inverse"] = float(np.max(np.abs(E @ I - np.eye(B.dim))))
    bim = 0.0
    for e, ie in zip(basis, imgs):
        bim = max(bim,
                  float(np.max(np.abs(E @ A.left_matrix(ie) - B.left_matrix(e) @ E))),
                  float(np.max(np.abs(E @ A.right_matrix(ie) - B.right_matrix(e) @ E))))
    res["bimodule"] = bim
    rng = rng or np.random.default_rng(0)
    neg = 0.0
    for _ in range(samples):
        a = A.random_element(rng)
        aa = a.adjoint() @ a
        ea = B.from_vec(E @ aa.vec())
        ea = (ea + ea.adjoint()) * 0.5
        neg = max(neg, -min(float(np.min(np.linalg.eigvalsh(b))) for b in ea.blocks) / max(1.0, aa.norm()))
    res["positivity"] = neg
    res["selfadjoint_x"] = float(np.max(np.abs(arm.x.vec() - arm.x.adjoint().vec())))
    return res


def induced_density(arm, state):
    """Density blocks of ``psi o E_i`` on the arm algebra."""
    w = state.functional() @ arm.expectation
    return functional_density(arm.algebra, w)


def validate_arm(arm, state, tol=None, index=0):
    tol = resolve(tol)
    res = arm_residuals(arm, state)
    if res["unital"] > tol or res["homomorphism"] > tol:
        raise EmbeddingNotHomomorphism(f"arm {index}: embedding is not a unital *-homomorphism",
                                       residual=max(res["unital"], res["homomorphism"]))
    for key in ("left_inverse", "bimodule", "positivity"):
        if res[key] > tol:
            raise ExpectationError(f"arm {index}: expectation fails the {key.replace('_', ' ')} property",
                                   residual=res[key])
    if res["selfadjoint_x"] > tol:
        raise ValidationError(f"arm {index}: variable is not self-adjoint", residual=res["selfadjoint_x"])
    dens = induced_density(arm, state)
    low = min(float(np.min(np.linalg.eigvalsh((d + d.conj().T) / 2))) for d in dens)
    if not low > tol:
        raise FaithfulnessError(f"arm {index}: expectation is not faithful (psi o E has a null direction)",
                                residual=-low)
    return res


@dataclass(frozen=True)
class Letter:
    """``element`` of arm ``arm``; ``b`` records product form ``x_arm * iota(b)`` when known."""

    arm: int
    element: AlgElement
    b: AlgElement | None = None


class AmalgamatedModel:
    """Base ``(B, psi)`` with arms ``(A_i, iota_i, E_i, x_i)``.

    Memo tables are the only mutable state; their entries are
    deterministic functions of the key.
    """

    def __init__(self, base, state, arms, tol=None, validate=True):
        if state.algebra != base:
            raise ValidationError("base state lives on a different algebra")
        if not isinstance(state, FaithfulState):
            state = FaithfulState(base, state.density)
        self.base = base
        self.state = state
        self.arms = tuple(arms)
        if not self.arms:
            raise ValidationError("a model needs at least one arm")
        self.tol = resolve(tol)
        for i, arm in enumerate(self.arms):
            if arm.base != base:
                raise ValidationError(f"arm {i} is built over a different base")
            if validate:
                validate_arm(arm, state, self.tol, i)
        self._arm_dims = [(a.algebra.block_dims, a.algebra.offsets) for a in self.arms]
        self._base_dims = (base.block_dims, base.offsets)
        self._x = [a.x.vec() for a in self.arms]
        self._unit_b = base.unit().vec()
        self._zero_b = np.zeros(base.dim, dtype=complex)
        self._memo = {}
        self._kappa_memo = {}

    @property
    def n_arms(self):
        return len(self.arms)

    def clear_cache(self):
        self._memo.clear()
        self._kappa_memo.clear()

    def with_arms(self, arms):
        return AmalgamatedModel(self.base, self.state, arms, self.tol, validate=False)

    def replicate(self, n_arms):
        """Model with ``n_arms`` copies of arm 0."""
        return self.with_arms([self.arms[0]] * n_arms)

    # --- words ------------------------------------------------------------

    def x_letter(self, i, b=None):
        arm = self.arms[i]
        if b is None:
            return Letter(i, arm.x, self.base.unit())
        return Letter(i, arm.x @ arm.embed(b), b)

    def x_word(self, arms):
        return tuple(self.x_letter(i) for i in arms)

    def _check_word(self, word):
        if len(word) > MAX_WORD_LEN:
            raise ValidationError(f"words are capped at length {MAX_WORD_LEN}, got {len(word)}")
        for L in word:
            if not 0 <= L.arm < self.n_arms:
                raise ValidationError(f"arm index {L.arm} out of range for {self.n_arms} arms")
            if L.element.algebra != self.arms[L.arm].algebra:
                raise ValidationError(f"letter element is not in arm {L.arm}")

    # --- vector primitives -------------------------------------------------

    def _mul(self, i, u, v):
        dims, offs = self._arm_dims[i]
        return _vec_mul(dims, offs, u, v)

    def _mul_b(self, u, v):
        return _vec_mul(self._base_dims[0], self._base_dims[1], u, v)

    def _E(self, i, u):
        return self.arms[i].expectation @ u

    def _iota(self, i, b):
        return self.arms[i].embedding @ b

    # --- centering engine --------------------------------------------------

    def _merge(self, letters):
        out = []
        for L in letters:
            if out and out[-1][0] == L[0]:
                prev = out.pop()
                out.append((L[0], self._mul(L[0], prev[1], L[1]), False))
            else:
                out.append(L)
        return tuple(out)

    def _center_eval(self, letters):
        letters = self._merge(letters)
        if not letters:
            return self._unit_b
        key = tuple((i, c, u.tobytes()) for i, u, c in letters)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        if len(letters) == 1:
            i, u, c = letters[0]
            res = self._zero_b if c else self._E(i, u)
        else:
            res = None
            for j, (i, u, c) in enumerate(letters):
                if c:
                    continue
                b = self._E(i, u)
                # a numerically-zero base part is treated as centered
                if np.max(np.abs(b)) <= 1e-14 * max(1.0, float(np.max(np.abs(u)))):
                    letters = letters[:j] + ((i, u, True),) + letters[j + 1:]
                    continue
                centered = letters[:j] + ((i, u - self._iota(i, b), True),) + letters[j + 1:]
                if j + 1 < len(letters):
                    k, v, _ = letters[j + 1]
                    pushed = letters[:j] + ((k, self._mul(k, self._iota(k, b), v), False),) + letters[j + 2:]
                else:
                    k, v, _ = letters[j - 1]
                    pushed = letters[:j - 1] + ((k, self._mul(k, v, self._iota(k, b)), False),)
                res = self._center_eval(centered) + self._center_eval(pushed)
                break
            if res is None:
                res = self._zero_b
        self._memo[key] = res
        return res

    def _letters(self, word):
        return tuple((L.arm, L.element.vec(), False) for L in word)

    # --- cumulant engine ---------------------------------------------------

    def _nested(self, part, letters, block_fn):
        """Nested evaluation of ``block_fn`` over the blocks of ``part``.

        ``letters[p] = (arm, c)`` stands for ``x_arm * c``.  Inner blocks are
        evaluated first and multiplied into the ``c`` of the element of the
        enclosing block just before them.
        """
        forest = part.forest
        blocks = part.blocks

        def val(k):
            b = blocks[k]
            last = len(b) - 1
            sub = []
            for g, pos in enumerate(b):
                arm, c = letters[pos]
                if g < last:
                    for ch in forest.children[k][g]:
                        c = self._mul_b(c, val(ch))
                sub.append((arm, c))
            return block_fn(sub)

        out = self._unit_b
        for r in forest.roots:
            out = self._mul_b(out, val(r))
        return out

    def _moment_block(self, sub):
        return self._center_eval(tuple((arm, self._mul(arm, self._x[arm], self._iota(arm, c)), False)
                                       for arm, c in sub))

    def _kappa(self, i, cs):
        """``kappa_n[x c_1, ..., x c_{n-1}, x]`` for arm ``i`` (``cs`` has length n-1)."""
        key = (i, len(cs), b"".join(c.tobytes() for c in cs))
        hit = self._kappa_memo.get(key)
        if hit is not None:
            return hit
        n = len(cs) + 1
        letters = [(i, c) for c in cs] + [(i, self._unit_b)]
        parts, mus = ncpart.nc_table(n)
        res = self._zero_b.copy()
        for part, mu in zip(parts, mus):
            if mu:
                res = res + mu * self._nested(part, letters, self._moment_block)
        self._kappa_memo[key] = res
        return res

    def _kappa_block(self, sub):
        arm = sub[0][0]
        return self._mul_b(self._kappa(arm, [c for _, c in sub[:-1]]), sub[-1][1])

    def _product_form(self, L, tol):
        arm = self.arms[L.arm]
        if L.b is not None:
            return L.b.vec()
        # solve element = x iota(b) for b
        M = arm.algebra.left_matrix(arm.x) @ arm.embedding
        target = L.element.vec()
        b, *_ = np.linalg.lstsq(M, target, rcond=None)
        resid = float(np.max(np.abs(M @ b - target))) if target.size else 0.0
        if resid > tol * max(1.0, float(np.max(np.abs(target)))):
            raise UnsupportedWord(f"letter in arm {L.arm} is not of the form x*iota(b)", residual=resid)
        return b


def moment_centering(model, word):
    """``E(w)`` in the base, by recursive centering of letters."""
    word = tuple(word)
    model._check_word(word)
    return model.base.from_vec(model._center_eval(model._letters(word)))


def ov_cumulant(model, arm, n, b_list=None):
    """Operator-valued cumulant ``kappa_n[x b_1, ..., x b_{n-1}, x]`` of arm ``arm``.

    Moebius inversion of nested single-arm moments over NC(n).
    """
    if not 1 <= n <= MAX_WORD_LEN:
        raise ValidationError(f"cumulant order must be in [1, {MAX_WORD_LEN}], got {n}")
    if b_list is None:
        b_list = [model.base.unit()] * (n - 1)
    if len(b_list) != n - 1:
        raise ValidationError(f"{n - 1} base elements expected, got {len(b_list)}")
    if not 0 <= arm < model.n_arms:
        raise ValidationError(f"arm index {arm} out of range")
    for b in b_list:
        if b.algebra != model.base:
            raise ValidationError("cumulant arguments must lie in the base")
    return model.base.from_vec(model._kappa(arm, [b.vec() for b in b_list]))


def moment_cumulant(model, word, tol=None):
    """``E(w)`` from the moment-cumulant formula over monochromatic NC partitions.

    Letters must be of product form ``x_i iota(b)``.
    """
    tol = resolve(tol)
    word = tuple(word)
    model._check_word(word)
    if not word:
        return model.base.unit()
    letters = [(L.arm, model._product_form(L, tol)) for L in word]
    parts, _ = ncpart.nc_table(len(word))
    res = model._zero_b.copy()
    for idx in ncpart.monochrome_indices([L.arm for L in word]):
        res = res + model._nested(parts[idx], letters, model._kappa_block)
    return model.base.from_vec(res)


def cumulant_from_moments(model, letters):
    """Cumulant ``kappa_n[x_{i_1} c_1, ..., x_{i_n} c_n]`` with possibly mixed arms.

    ``letters`` is a list of ``(arm, c)`` with ``c`` in the base.  Obtained by
    Moebius inversion of centering-engine moments, so it is independent of the
    cumulant engine.
    """
    vec_letters = [(i, c.vec()) for i, c in letters]
    parts, mus = ncpart.nc_table(len(vec_letters))
    res = model._zero_b.copy()
    for part, mu in zip(parts, mus):
        if mu:
            res = res + mu * model._nested(part, vec_letters, model._moment_block)
    return model.base.from_vec(res)


def scalar_moment(model, word):
    """``phi(w) = psi(E(w))``."""
    return model.state(moment_centering(model, word))


def adjoint_word(word):
    return tuple(Letter(L.arm, L.element.adjoint()) for L in reversed(word))


def push_right(model, word, b):
    """The word ``w * b`` with ``b`` absorbed into the last letter."""
    if not word:
        raise ValidationError("cannot absorb a base element into an empty word")
    L = word[-1]
    arm = model.arms[L.arm]
    return tuple(word[:-1]) + (Letter(L.arm, L.element @ arm.embed(b)),)


def push_left(model, b, word):
    if not word:
        raise ValidationError("cannot absorb a base element into an empty word")
    L = word[0]
    arm = model.arms[L.arm]
    return (Letter(L.arm, arm.embed(b) @ L.element),) + tuple(word[1:])


def parse_word(model, text):
    """``"x1 x2 x1"`` -> letters of the variables of arms 0, 1, 0."""
    word = []
    for tok in text.replace(",", " ").split():
        if not (tok[0] in "xX" and tok[1:].isdigit()):
            raise ValidationError(f"cannot parse word token {tok!r}; expected x1, x2, ...")
        i = int(tok[1:]) - 1
        if not 0 <= i < model.n_arms:
            raise ValidationError(f"token {tok!r} refers to arm {i + 1} but the model has {model.n_arms} arms")
        word.append(model.x_letter(i))
    return tuple(word)


def single_arm_moment(model, i, b_list):
    """``E_i(x b_1 x b_2 ... b_{n-1} x)`` computed inside arm ``i``."""
    arm = model.arms[i]
    u = model._x[i]
    for b in b_list:
        u = model._mul(i, model._mul(i, u, model._iota(i, b.vec())), model._x[i])
    return model._E(i, u)


def identical_distribution_residual(model, max_len):
    """Largest cross-arm discrepancy of ``E_i(x_i b_1 ... b_{n-1} x_i)`` over base matrix units."""
    if max_len < 1:
        raise ValidationError("max_len must be at least 1")
    basis = model.base.basis()
    worst = 0.0
    for n in range(1, max_len + 1):
        for bs in itertools.product(basis, repeat=n - 1):
            ref = single_arm_moment(model, 0, bs)
            for i in range(1, model.n_arms):
                worst = max(worst, float(np.max(np.abs(single_arm_moment(model, i, bs) - ref))))
    return worst


def check_identically_distributed(model, max_len, tol=None):
    return identical_distribution_residual(model, max_len) <= resolve(tol)
