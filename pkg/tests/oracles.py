"""Independent reference computations and random model builders for the tests.

Nothing here calls the engines under test: partitions are brute-forced
from all set partitions, Moebius values from the poset definition, scalar
free moments from classical moment/cumulant recursions.
"""

import itertools
from functools import lru_cache

import numpy as np

from amalgam.finalg import BlockAlgebra, FaithfulState
from amalgam.ovfree import AmalgamatedModel, Arm, multiplicity_embedding


# --- partitions --------------------------------------------------------------

def set_partitions(n):
    """All set partitions of range(n), as lists of sorted blocks."""
    if n == 0:
        yield []
        return
    for part in set_partitions(n - 1):
        for k in range(len(part)):
            yield part[:k] + [part[k] + [n - 1]] + part[k + 1:]
        yield part + [[n - 1]]


def crosses(part):
    where = {i: k for k, b in enumerate(part) for i in b}
    n = len(where)
    for a, b, c, d in itertools.combinations(range(n), 4):
        if where[a] == where[c] and where[b] == where[d] and where[a] != where[b]:
            return True
    return False


def brute_nc(n):
    return [p for p in set_partitions(n) if not crosses(p)]


def canon(part):
    return tuple(sorted(tuple(sorted(b)) for b in part))


def finer(p, q):
    lab = {i: k for k, b in enumerate(q) for i in b}
    return all(len({lab[i] for i in b}) == 1 for b in p)


@lru_cache(maxsize=None)
def poset_moebius(n):
    """``{(p, q): mu(p, q)}`` on NC(n) from ``mu(p,p)=1``, ``sum_{p<=r<=q} mu(p,r) = 0``."""
    elems = [canon(p) for p in brute_nc(n)]
    elems.sort(key=len, reverse=True)  # finer first
    mu = {}
    for p in elems:
        above = [q for q in elems if finer(p, q)]
        above.sort(key=len, reverse=True)
        for q in above:
            if q == p:
                mu[p, q] = 1
            else:
                mu[p, q] = -sum(mu[p, r] for r in above if (p, r) in mu and finer(r, q) and r != q)
    return mu


# --- scalar free probability -------------------------------------------------

def classical_free_cumulants(moments):
    """Free cumulants ``k_1..k_N`` from moments ``m_1..m_N`` via the brute-force NC sum."""
    N = len(moments)
    kappa = []
    for n in range(1, N + 1):
        total = 0.0
        for p in brute_nc(n):
            if len(p) == 1:
                continue
            term = 1.0
            for b in p:
                term *= kappa[len(b) - 1]
            total += term
        kappa.append(moments[n - 1] - total)
    return kappa


def scalar_free_moment(arms, cumulants):
    """``phi(x_{a_1} ... x_{a_n})`` for free variables from their scalar cumulants."""
    n = len(arms)
    total = 0.0
    for p in brute_nc(n):
        if any(len({arms[i] for i in b}) > 1 for b in p):
            continue
        term = 1.0
        for b in p:
            term *= cumulants[arms[b[0]]][len(b) - 1]
        total += term
    return total


def measure_moments(atoms, masses, N):
    atoms, masses = np.asarray(atoms), np.asarray(masses)
    return [float(np.sum(masses * atoms ** k)) for k in range(1, N + 1)]


def scalar_arm_model(measures):
    """Base C, arms C^s with the given atoms/masses (built directly, no fps helpers)."""
    C = BlockAlgebra((1,))
    psi = FaithfulState(C, [[[1.0]]])
    arms = []
    for atoms, masses in measures:
        A = BlockAlgebra((1,) * len(atoms))
        E = np.asarray(masses, dtype=complex)[None, :]
        arms.append(Arm(C, A, np.ones((A.dim, 1)), E, A.element([[[a]] for a in atoms])))
    return AmalgamatedModel(C, psi, arms)


# --- dense oracle for the rotated-projection model --------------------------

def diag_part(m):
    return np.diag(np.diag(m))


def rotated_projection(t):
    s = np.sqrt(t * (1 - t))
    return np.array([[t, s], [s, 1 - t]])


# --- random models -----------------------------------------------------------

BASES = [(1,), (1, 1), (2,), (1, 2), (1, 1, 1)]


def random_density(A, rng, floor=0.05):
    blocks = []
    for n in A.block_dims:
        g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        blocks.append(g @ g.conj().T + floor * np.eye(n))
    total = sum(np.trace(b).real for b in blocks)
    return [b / total for b in blocks]


def random_positive(A, rng, commuting_with=None):
    blocks = []
    for n in A.block_dims:
        g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        blocks.append(g @ g.conj().T + 0.2 * np.eye(n))
    return A.element(blocks)


def random_multiplicities(base, rng, max_block=2):
    """Multiplicity matrix whose arm blocks have size at most ``max_block`` (or the base block)."""
    dims = base.block_dims
    rows = []
    for _ in range(rng.integers(1, 3)):
        while True:
            row = rng.integers(0, 2, len(dims))
            if row.sum() == 0:
                continue
            size = int(row @ np.array(dims))
            if size <= max(max_block, max(dims)):
                break
        rows.append(row)
    # every base block must appear somewhere so the embedding is injective
    for j in range(len(dims)):
        if not any(r[j] for r in rows):
            extra = np.zeros(len(dims), dtype=int)
            extra[j] = 1
            rows.append(extra)
    return np.array(rows)


def random_arm(base, rng, max_block=2):
    """Arm whose expectation preserves a density of the form ``iota(h) k`` with ``k`` in the
    relative commutant, so the expectation exists; the variable is a random Hermitian."""
    mult = random_multiplicities(base, rng, max_block)
    dims = tuple(int(r @ np.array(base.block_dims)) for r in mult)
    A = BlockAlgebra(dims)
    iota = multiplicity_embedding(base, A, mult)
    h = random_positive(base, rng)
    emb_h = A.from_vec(iota @ h.vec())
    # k: positive scalars on each copy of each base block commute with iota(B)
    kblocks = []
    for r, N in zip(mult, dims):
        diag = []
        for j, m in enumerate(r):
            for _ in range(m):
                diag.extend([rng.uniform(0.5, 2.0)] * base.block_dims[j])
        kblocks.append(np.diag(diag).astype(complex))
    k = A.element(kblocks)
    rho = emb_h @ k
    rho = (rho + rho.adjoint()) * 0.5
    total = sum(np.trace(b).real for b in rho.blocks)
    state = FaithfulState(A, [b / total for b in rho.blocks])
    x = A.random_element(rng, hermitian=True)
    tmp = Arm.from_state(base, A, iota, state, x)
    return Arm(base, A, iota, tmp.expectation, x)


def random_model(rng, n_arms=2, base_dims=None):
    dims = base_dims or BASES[rng.integers(len(BASES))]
    B = BlockAlgebra(dims)
    psi = FaithfulState(B, random_density(B, rng))
    return AmalgamatedModel(B, psi, [random_arm(B, rng) for _ in range(n_arms)])


def random_base_element(B, rng):
    return B.random_element(rng)
