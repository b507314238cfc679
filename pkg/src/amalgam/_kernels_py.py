"""Pure-Python noncrossing-partition kernels (fallback for ``_kernels``).

Partitions are restricted growth strings: ``labels[i]`` is the block of
position ``i``, blocks numbered in order of first appearance.
"""

import numpy as np

MAX_N = 16


def nc_labels(n):
    """All noncrossing partitions of ``n`` points as a ``(count, n)`` int8 array.

    Depth-first over positions, keeping a stack of blocks that can still be
    joined: joining a block closes every block opened after it.
    """
    if not 0 <= n <= MAX_N:
        raise ValueError(f"n must be in [0, {MAX_N}], got {n}")
    rows = []
    labels = [0] * n

    def dfs(i, stack, nblocks):
        if i == n:
            rows.append(tuple(labels))
            return
        for d in range(len(stack)):
            labels[i] = stack[d]
            dfs(i + 1, stack[:d + 1], nblocks)
        labels[i] = nblocks
        dfs(i + 1, stack + [nblocks], nblocks + 1)

    dfs(0, [], 0)
    return np.array(rows, dtype=np.int8).reshape(len(rows), n)


def noncrossing_mask(labels):
    """Row-wise test: no ``a < b < c < d`` with ``a, c`` and ``b, d`` in two distinct blocks."""
    labels = np.asarray(labels)
    out = np.ones(labels.shape[0], dtype=bool)
    n = labels.shape[1]
    for r in range(labels.shape[0]):
        lab = labels[r]
        ok = True
        for a in range(n):
            for c in range(a + 2, n):
                if lab[a] != lab[c]:
                    continue
                for b in range(a + 1, c):
                    if lab[b] == lab[a]:
                        continue
                    for d in range(c + 1, n):
                        if lab[d] == lab[b]:
                            ok = False
                            break
                    if not ok:
                        break
                if not ok:
                    break
            if not ok:
                break
        out[r] = ok
    return out


def monochrome_mask(labels, colors):
    """Rows whose blocks each carry a single color."""
    labels = np.asarray(labels)
    colors = list(colors)
    out = np.ones(labels.shape[0], dtype=bool)
    n = labels.shape[1]
    for r in range(labels.shape[0]):
        seen = {}
        for i in range(n):
            c = seen.setdefault(int(labels[r, i]), colors[i])
            if c != colors[i]:
                out[r] = False
                break
    return out
