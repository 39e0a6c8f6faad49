"""Numpy implementations of the triplet-marking kernels.

Same signatures and results as the compiled ``_ckernels`` module; used when the
extension is not built or ``TIMECONS_PURE=1`` is set.
"""

import numpy as np


def rule1_mark(lca_depth, lca_vertex, leaf_sp, is_spec, k, mark):
    """Mark ``ab|c`` for every leaf triple whose odd-one-out lca is a speciation.

    ``lca_depth[i, j]`` / ``lca_vertex[i, j]`` hold the depth and id of the lca of
    local leaves ``i`` and ``j`` (one component of the transfer forest).
    ``mark`` is a flat uint8 array indexed ``(a*k + b)*k + c`` with ``a < b``.
    """
    m = lca_depth.shape[0]
    sp = np.asarray(leaf_sp, dtype=np.int64)
    spec = np.asarray(is_spec, dtype=bool)
    for i in range(m - 2):
        js = slice(i + 1, m)
        d_ij = lca_depth[i, js][:, None]  # pair (i, j)
        d_il = lca_depth[i, js][None, :]  # pair (i, l)
        d_jl = lca_depth[js, js]
        upper = np.triu(np.ones(d_jl.shape, dtype=bool), 1)
        si = sp[i]
        sj = sp[js][:, None]
        sl = sp[js][None, :]
        distinct = upper & (sj != si) & (sl != si) & (sj != sl)
        if not distinct.any():
            continue
        vij = lca_vertex[i, js][:, None]
        vil = lca_vertex[i, js][None, :]
        # odd one out: the deeper pair forms the cherry, the triple lca is the other
        for pair_deeper, top, a, b, c in (
            ((d_ij > d_il), np.broadcast_to(vil, d_jl.shape), si, sj, sl),
            ((d_il > d_ij), np.broadcast_to(vij, d_jl.shape), si, sl, sj),
            ((d_jl > d_ij) & (d_ij == d_il), np.broadcast_to(vij, d_jl.shape), sj, sl, si),
        ):
            sel = distinct & pair_deeper
            if not sel.any():
                continue
            sel &= spec[top]
            if not sel.any():
                continue
            A = np.broadcast_to(a, d_jl.shape)[sel]
            B = np.broadcast_to(b, d_jl.shape)[sel]
            C = np.broadcast_to(c, d_jl.shape)[sel]
            lo = np.minimum(A, B)
            hi = np.maximum(A, B)
            mark[(lo * k + hi) * k + C] = 1


def rule2_mark(side_a, side_b, k, mark):
    """Mark ``ab|c`` for species pairs on one side of a transfer edge and ``c`` on the other."""
    for pairs_side, other in ((side_a, side_b), (side_b, side_a)):
        p = np.asarray(pairs_side, dtype=np.int64)
        q = np.asarray(other, dtype=np.int64)
        if len(p) < 2 or len(q) == 0:
            continue
        iu, ju = np.triu_indices(len(p), 1)
        lo = np.minimum(p[iu], p[ju])
        hi = np.maximum(p[iu], p[ju])
        base = (lo * k + hi) * k
        codes = base[:, None] + q[None, :]
        ok = (q[None, :] != lo[:, None]) & (q[None, :] != hi[:, None])
        mark[codes[ok]] = 1
