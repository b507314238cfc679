"""Noncrossing partitions: enumeration, nesting forests, Moebius function.

Positions are ``0 .. n-1``.  Blocks are canonicalized as increasing tuples
sorted by their smallest element.
"""

from __future__ import annotations

import math
import os
from itertools import combinations, product
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import ValidationError

if os.environ.get("AMALGAM_PURE_PYTHON") == "1":
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels as kernels
    except ImportError:  # extension not built
        from . import _kernels_py as kernels

BACKEND = "compiled" if kernels.__name__.endswith("._kernels") else "python"

MAX_N = 12


def catalan(n):
    return math.comb(2 * n, n) // (n + 1)


def _check_n(n):
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_N:
        raise ValidationError(f"n must be an integer in [1, {MAX_N}], got {n!r}")


def is_noncrossing(blocks):
    """Direct check of the definition over all 4-tuples ``a < b < c < d``."""
    labels = _labels_from_blocks(blocks)
    return bool(kernels.noncrossing_mask(labels[None, :])[0])


def _labels_from_blocks(blocks):
    n = sum(len(b) for b in blocks)
    labels = np.full(n, -1, dtype=np.int64)
    for k, b in enumerate(sorted(blocks, key=min)):
        for i in b:
            labels[i] = k
    return labels


@dataclass(frozen=True)
class NestingForest:
    """Parent/child structure of the blocks of a noncrossing partition.

    ``children[k][g]`` lists the child blocks of block ``k`` sitting in the
    gap between its ``g``-th and ``g+1``-th elements, left to right.
    """

    parent: tuple
    children: tuple
    roots: tuple


@dataclass(frozen=True)
class NCPartition:
    n: int
    blocks: tuple

    def __post_init__(self):
        blocks = tuple(sorted((tuple(sorted(int(i) for i in b)) for b in self.blocks), key=lambda b: b[0]))
        flat = sorted(i for b in blocks for i in b)
        if any(len(b) == 0 for b in blocks) or flat != list(range(self.n)):
            raise ValidationError(f"blocks {self.blocks} do not partition range({self.n})")
        object.__setattr__(self, "blocks", blocks)
        if not is_noncrossing(blocks):
            raise ValidationError(f"partition {blocks} is crossing")

    @classmethod
    def from_labels(cls, labels):
        groups = {}
        for i, lab in enumerate(labels):
            groups.setdefault(int(lab), []).append(i)
        obj = cls.__new__(cls)
        object.__setattr__(obj, "n", len(labels))
        object.__setattr__(obj, "blocks", tuple(tuple(g) for g in sorted(groups.values(), key=min)))
        return obj

    @cached_property
    def labels(self):
        return tuple(int(v) for v in _labels_from_blocks(self.blocks))

    @cached_property
    def forest(self):
        return nesting_forest(self)

    def refines(self, other):
        """``self <= other`` in the refinement order."""
        lab = other.labels
        return all(len({lab[i] for i in b}) == 1 for b in self.blocks)

    def __str__(self):
        return "{" + ", ".join("{" + ",".join(str(i + 1) for i in b) + "}" for b in self.blocks) + "}"


def nesting_forest(pi):
    blocks = pi.blocks
    m = len(blocks)
    parent = [None] * m
    gap_of = [None] * m
    for k, b in enumerate(blocks):
        lo, hi = b[0], b[-1]
        best = None
        for j, c in enumerate(blocks):
            if j == k or c[0] > lo or c[-1] < hi:
                continue
            # c nests b: find the gap of c containing b
            g = max(idx for idx, v in enumerate(c) if v < lo)
            if best is None or c[g] > blocks[best[0]][best[1]]:
                best = (j, g)
        if best is not None:
            parent[k], gap_of[k] = best
    children = [[[] for _ in range(len(b) - 1)] for b in blocks]
    roots = []
    for k in range(m):
        if parent[k] is None:
            roots.append(k)
        else:
            children[parent[k]][gap_of[k]].append(k)
    return NestingForest(tuple(parent),
                         tuple(tuple(tuple(g) for g in ch) for ch in children),
                         tuple(roots))


@lru_cache(maxsize=None)
def nc_labels(n):
    """Canonical restricted growth strings of NC(n), lexicographically sorted."""
    _check_n(n)
    lab = np.asarray(kernels.nc_labels(n))
    order = np.lexsort(lab.T[::-1])
    lab = lab[order]
    lab.setflags(write=False)
    return lab


@lru_cache(maxsize=None)
def enumerate_nc(n):
    """All noncrossing partitions of ``n`` points (tuple, deterministic order)."""
    return tuple(NCPartition.from_labels(row) for row in nc_labels(n))


def enumerate_nc_recursive(n):
    """Enumeration by the block containing the first point.

    That block splits the remaining points into independent intervals, each
    partitioned recursively.  Kept as a cross-check of the kernel.
    """
    _check_n(n)

    @lru_cache(maxsize=None)
    def interval(lo, hi):
        if lo >= hi:
            return ((),)
        out = []
        rest = list(range(lo + 1, hi))
        for r in range(len(rest) + 1):
            for extra in combinations(rest, r):
                block = (lo,) + extra
                edges = list(block) + [hi]
                parts = [interval(edges[i] + 1, edges[i + 1]) for i in range(len(block))]
                for combo in product(*parts):
                    out.append((block,) + tuple(b for p in combo for b in p))
        return tuple(out)

    return [NCPartition(n, blocks) for blocks in interval(0, n)]


def kreweras(pi):
    """Kreweras complement, via permutations: ``K(pi) = pi^{-1} gamma``."""
    n = pi.n
    perm = [0] * n
    for b in pi.blocks:
        for a, c in zip(b, b[1:] + b[:1]):
            perm[a] = c
    inv = [0] * n
    for i, j in enumerate(perm):
        inv[j] = i
    k = [inv[(i + 1) % n] for i in range(n)]
    seen, blocks = set(), []
    for i in range(n):
        if i in seen:
            continue
        cyc, j = [], i
        while j not in seen:
            seen.add(j)
            cyc.append(j)
            j = k[j]
        blocks.append(tuple(sorted(cyc)))
    return NCPartition(n, blocks)


@lru_cache(maxsize=None)
def moebius_nc(n):
    """``mu(0, 1)`` on NC(n) by the interval recursion.

    ``[0, sigma]`` factors as a product of ``NC(|V|)`` over blocks ``V``, so
    ``mu(0, sigma)`` is the product of smaller values, memoized by size.
    """
    _check_n(n)
    if n == 1:
        return 1
    total = 0
    for sigma in enumerate_nc(n):
        if len(sigma.blocks) == 1:
            continue
        term = 1
        for b in sigma.blocks:
            term *= moebius_nc(len(b))
        total += term
    return -total


def moebius(pi, sigma):
    """``mu(pi, sigma)`` for ``pi <= sigma``, by interval factorization.

    The interval factors over the blocks ``W`` of ``sigma`` into
    ``[pi|W, 1_W]``, each isomorphic to ``[0, K(pi|W)]``.
    """
    if pi.n != sigma.n:
        raise ValidationError("partitions of different sizes")
    if not pi.refines(sigma):
        return 0
    value = 1
    for W in sigma.blocks:
        index = {p: i for i, p in enumerate(W)}
        sub = [tuple(index[p] for p in b) for b in pi.blocks if b[0] in index]
        restricted = NCPartition(len(W), sub)
        for V in kreweras(restricted).blocks:
            value *= moebius_nc(len(V))
    return value


def moebius_to_top(pi):
    """``mu(pi, 1_n)``."""
    value = 1
    for V in kreweras(pi).blocks:
        value *= moebius_nc(len(V))
    return value


@lru_cache(maxsize=None)
def nc_table(n):
    """``(partitions, mu(pi, 1))`` for NC(n), cached for the moment engines."""
    parts = enumerate_nc(n)
    return parts, tuple(moebius_to_top(p) for p in parts)


def monochrome_indices(colors):
    """Indices into ``enumerate_nc(len(colors))`` of partitions with single-colored blocks."""
    lab = nc_labels(len(colors))
    return np.flatnonzero(kernels.monochrome_mask(lab, np.asarray(colors, dtype=np.int64)))
