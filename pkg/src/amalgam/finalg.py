"""Finite-dimensional C*-algebras as direct sums of full matrix blocks.

An element of ``M_{n_1} + ... + M_{n_m}`` is stored as a tuple of square
complex blocks.  Linear maps between algebras act on *coordinates*: the
row-major flattenings of the blocks, concatenated in block order, so the
linear dimension is ``sum(n_k**2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import FaithfulnessError, ValidationError
from .tolerance import resolve


@dataclass(frozen=True)
class BlockAlgebra:
    """The algebra ``M_{n_1} (+) ... (+) M_{n_m}``."""

    block_dims: tuple

    def __post_init__(self):
        dims = tuple(int(n) for n in self.block_dims)
        if not dims or any(n < 1 for n in dims):
            raise ValidationError(f"block dimensions must be positive and non-empty, got {self.block_dims}")
        object.__setattr__(self, "block_dims", dims)

    @cached_property
    def dim(self):
        return sum(n * n for n in self.block_dims)

    @cached_property
    def offsets(self):
        out = [0]
        for n in self.block_dims:
            out.append(out[-1] + n * n)
        return tuple(out)

    @property
    def is_abelian(self):
        return all(n == 1 for n in self.block_dims)

    def __repr__(self):
        return "BlockAlgebra(" + " + ".join(f"M{n}" if n > 1 else "C" for n in self.block_dims) + ")"

    # --- construction -------------------------------------------------

    def element(self, blocks):
        return AlgElement(self, blocks)

    def _raw(self, blocks):
        return AlgElement._make(self, tuple(blocks))

    def zero(self):
        return self._raw(np.zeros((n, n), dtype=complex) for n in self.block_dims)

    def unit(self):
        return self._raw(np.eye(n, dtype=complex) for n in self.block_dims)

    def scalar(self, c):
        return self._raw(c * np.eye(n, dtype=complex) for n in self.block_dims)

    def from_vec(self, v):
        v = np.asarray(v, dtype=complex)
        if v.shape != (self.dim,):
            raise ValidationError(f"coordinate vector of length {self.dim} expected, got shape {v.shape}")
        off = self.offsets
        return self._raw(v[off[k]:off[k + 1]].reshape(n, n).copy() for k, n in enumerate(self.block_dims))

    def matrix_unit(self, k, i, j):
        blocks = [np.zeros((n, n), dtype=complex) for n in self.block_dims]
        blocks[k][i, j] = 1.0
        return self._raw(blocks)

    def basis(self):
        """Matrix units in coordinate order."""
        return [self.matrix_unit(k, i, j)
                for k, n in enumerate(self.block_dims)
                for i in range(n) for j in range(n)]

    def block_projection(self, k):
        """The minimal central projection supported on block ``k``."""
        blocks = [np.zeros((n, n), dtype=complex) for n in self.block_dims]
        blocks[k] = np.eye(self.block_dims[k], dtype=complex)
        return self._raw(blocks)

    def random_element(self, rng, hermitian=False, scale=1.0):
        blocks = []
        for n in self.block_dims:
            b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            if hermitian:
                b = (b + b.conj().T) / 2
            blocks.append(scale * b)
        return self._raw(blocks)

    # --- coordinate operators --------------------------------------------

    def left_matrix(self, a):
        """Matrix of ``x -> a x`` on coordinates."""
        return _block_diag([np.kron(b, np.eye(n)) for b, n in zip(a.blocks, self.block_dims)])

    def right_matrix(self, a):
        """Matrix of ``x -> x a`` on coordinates."""
        return _block_diag([np.kron(np.eye(n), b.T) for b, n in zip(a.blocks, self.block_dims)])


def _block_diag(mats):
    size = sum(m.shape[0] for m in mats)
    out = np.zeros((size, size), dtype=complex)
    pos = 0
    for m in mats:
        k = m.shape[0]
        out[pos:pos + k, pos:pos + k] = m
        pos += k
    return out


class AlgElement:
    """An element of a :class:`BlockAlgebra`.

    ``a @ b`` is the algebra product, ``c * a`` scalar multiplication.
    Instances are treated as immutable.
    """

    __slots__ = ("algebra", "blocks", "_vec")

    def __init__(self, algebra, blocks):
        blocks = tuple(np.array(b, dtype=complex) for b in blocks)
        if len(blocks) != len(algebra.block_dims):
            raise ValidationError(f"{algebra} has {len(algebra.block_dims)} blocks, got {len(blocks)}")
        for b, n in zip(blocks, algebra.block_dims):
            if b.ndim == 0 and n == 1:
                continue
            if b.shape != (n, n):
                raise ValidationError(f"block of shape {(n, n)} expected, got {b.shape}")
        blocks = tuple(b.reshape(n, n) for b, n in zip(blocks, algebra.block_dims))
        self.algebra = algebra
        self.blocks = blocks
        self._vec = None

    @classmethod
    def _make(cls, algebra, blocks):
        obj = cls.__new__(cls)
        obj.algebra = algebra
        obj.blocks = blocks
        obj._vec = None
        return obj

    def vec(self):
        if self._vec is None:
            self._vec = np.concatenate([b.ravel() for b in self.blocks])
        return self._vec

    def _check(self, other):
        if not isinstance(other, AlgElement):
            return NotImplemented
        if other.algebra != self.algebra:
            raise ValidationError(f"elements of different algebras: {self.algebra} vs {other.algebra}")
        return True

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return AlgElement._make(self.algebra, tuple(a + b for a, b in zip(self.blocks, other.blocks)))

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return AlgElement._make(self.algebra, tuple(a - b for a, b in zip(self.blocks, other.blocks)))

    def __neg__(self):
        return AlgElement._make(self.algebra, tuple(-a for a in self.blocks))

    def __mul__(self, c):
        if isinstance(c, AlgElement):
            raise TypeError("use '@' for the algebra product")
        return AlgElement._make(self.algebra, tuple(c * a for a in self.blocks))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / c)

    def __matmul__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return AlgElement._make(self.algebra, tuple(a @ b for a, b in zip(self.blocks, other.blocks)))

    def adjoint(self):
        return AlgElement._make(self.algebra, tuple(a.conj().T for a in self.blocks))

    def power(self, k):
        out = self.algebra.unit()
        for _ in range(k):
            out = out @ self
        return out

    def commutator(self, other):
        return self @ other - other @ self

    def norm(self):
        """Operator (C*-) norm: the largest block spectral norm."""
        return max(np.linalg.norm(b, 2) for b in self.blocks)

    def hs_norm(self):
        return float(np.linalg.norm(self.vec()))

    def allclose(self, other, tol=None):
        self._check(other)
        return float(np.max(np.abs(self.vec() - other.vec()))) <= resolve(tol)

    def is_selfadjoint(self, tol=None):
        return self.allclose(self.adjoint(), tol)

    def is_projection(self, tol=None):
        return self.is_selfadjoint(tol) and self.allclose(self @ self, tol)

    def __repr__(self):
        parts = []
        for b in self.blocks:
            if b.shape == (1, 1):
                parts.append(_fmt(b[0, 0]))
            else:
                parts.append("[" + "; ".join(" ".join(_fmt(z) for z in row) for row in b) + "]")
        return "(" + ", ".join(parts) + ")"


def _fmt(z):
    z = complex(z)
    if abs(z.imag) < 1e-14:
        return f"{z.real:.6g}"
    return f"{z.real:.6g}{z.imag:+.6g}j"


class State:
    """A positive unital functional ``x -> sum_k tr(rho_k x_k)``.

    The density may be singular; use :class:`FaithfulState` when
    faithfulness is required.
    """

    def __init__(self, algebra, density, tol=None):
        tol = resolve(tol)
        density = tuple(np.array(d, dtype=complex).reshape(n, n)
                        for d, n in zip(density, algebra.block_dims))
        if len(density) != len(algebra.block_dims):
            raise ValidationError("density must have one block per algebra block")
        herm = max(float(np.max(np.abs(d - d.conj().T))) for d in density)
        if herm > tol:
            raise ValidationError("density is not Hermitian", residual=herm)
        density = tuple((d + d.conj().T) / 2 for d in density)
        total = sum(np.trace(d) for d in density)
        if abs(total - 1) > tol:
            raise ValidationError(f"density traces sum to {total.real:.12g}, not 1", residual=abs(total - 1))
        eig = min(float(np.min(np.linalg.eigvalsh(d))) for d in density)
        if eig < -tol:
            raise ValidationError("density is not positive semidefinite", residual=-eig)
        self.algebra = algebra
        self.density = density
        self.min_eigenvalue = eig

    @classmethod
    def trace(cls, algebra):
        """Normalized trace: density proportional to the identity."""
        size = sum(algebra.block_dims)
        return cls(algebra, [np.eye(n) / size for n in algebra.block_dims])

    @classmethod
    def from_weights(cls, algebra, weights):
        """Block weights ``w_k`` with density ``w_k I / n_k``."""
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (len(algebra.block_dims),):
            raise ValidationError("one weight per block expected")
        return cls(algebra, [w * np.eye(n) / n for w, n in zip(weights, algebra.block_dims)])

    @property
    def is_faithful(self):
        return self.min_eigenvalue > 0

    def functional(self):
        """Row vector ``w`` with ``phi(x) = w @ x.vec()``."""
        return np.concatenate([d.T.ravel() for d in self.density])

    def __call__(self, x):
        if x.algebra != self.algebra:
            raise ValidationError(f"element of {x.algebra} evaluated by a state on {self.algebra}")
        return complex(sum(np.sum(d.T * b) for d, b in zip(self.density, x.blocks)))

    def __repr__(self):
        return f"{type(self).__name__}({self.algebra}, min_eig={self.min_eigenvalue:.3g})"


class FaithfulState(State):
    """A state with positive-definite density."""

    def __init__(self, algebra, density, tol=None):
        super().__init__(algebra, density, tol)
        if not self.min_eigenvalue > 0:
            raise FaithfulnessError("density has a non-positive eigenvalue", residual=-self.min_eigenvalue)


def state_eval(phi, x):
    return phi(x)


def functional_density(algebra, w):
    """Density blocks of the functional ``x -> w @ x.vec()``."""
    w = np.asarray(w, dtype=complex)
    off = algebra.offsets
    return [w[off[k]:off[k + 1]].reshape(n, n).T.copy() for k, n in enumerate(algebra.block_dims)]


def _psd_sqrt(d):
    vals, vecs = np.linalg.eigh(d)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


class GnsSpace:
    """GNS space of a state on a block algebra.

    The hat map sends ``x`` to the concatenation of ``vec(x_k rho_k^{1/2})``;
    with that choice the Euclidean inner product of hat vectors equals
    ``phi(y* x)``, so hat coordinates are orthonormal coordinates.
    """

    def __init__(self, algebra, state):
        self.algebra = algebra
        self.state = state
        self._sqrt = tuple(_psd_sqrt(d) for d in state.density)

    @property
    def faithful(self):
        return self.state.is_faithful

    def hat(self, x):
        return np.concatenate([(b @ s).ravel() for b, s in zip(x.blocks, self._sqrt)])

    @cached_property
    def hat_matrix(self):
        """Matrix of the hat map on algebra coordinates."""
        return _block_diag([np.kron(np.eye(n), s.T) for s, n in zip(self._sqrt, self.algebra.block_dims)])

    @cached_property
    def unhat_matrix(self):
        if not self.faithful:
            raise FaithfulnessError("hat map is not invertible for a non-faithful state",
                                    residual=-self.state.min_eigenvalue)
        return np.linalg.inv(self.hat_matrix)

    def unhat(self, v):
        return self.algebra.from_vec(self.unhat_matrix @ v)

    def inner(self, x, y):
        """``<x^, y^> = phi(y* x)``."""
        return complex(np.vdot(self.hat(y), self.hat(x)))

    def norm(self, x):
        return float(np.linalg.norm(self.hat(x)))

    def pi(self, a):
        """Left representation ``pi(a) x^ = (a x)^`` in hat coordinates."""
        return _block_diag([np.kron(b, np.eye(n)) for b, n in zip(a.blocks, self.algebra.block_dims)])

    def gram(self, elements):
        V = np.column_stack([self.hat(e) for e in elements])
        return V.conj().T @ V


def gns(algebra, phi):
    """GNS space of a faithful state; non-faithful states raise."""
    if phi.algebra != algebra:
        raise ValidationError("state lives on a different algebra")
    if not phi.is_faithful:
        raise FaithfulnessError("GNS of a non-faithful state requires a quotient", residual=-phi.min_eigenvalue)
    return GnsSpace(algebra, phi)
