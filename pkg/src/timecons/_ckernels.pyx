# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled triplet-marking kernels; see ``_pykernels`` for the reference semantics."""

from libc.stdint cimport int32_t, uint8_t


def rule1_mark(const int32_t[:, ::1] lca_depth, const int32_t[:, ::1] lca_vertex,
               const int32_t[::1] leaf_sp, const uint8_t[::1] is_spec,
               Py_ssize_t k, uint8_t[::1] mark):
    cdef Py_ssize_t m = lca_depth.shape[0]
    cdef Py_ssize_t i, j, l
    cdef int32_t dab, dac, dbc, top
    cdef Py_ssize_t a, b, c, t
    with nogil:
        for i in range(m):
            for j in range(i + 1, m):
                if leaf_sp[i] == leaf_sp[j]:
                    continue
                dab = lca_depth[i, j]
                for l in range(j + 1, m):
                    a = leaf_sp[i]
                    b = leaf_sp[j]
                    c = leaf_sp[l]
                    if c == a or c == b:
                        continue
                    dac = lca_depth[i, l]
                    dbc = lca_depth[j, l]
                    if dab > dac:
                        top = lca_vertex[i, l]
                    elif dac > dab:
                        top = lca_vertex[i, j]
                        t = b
                        b = c
                        c = t
                    elif dbc > dab:
                        top = lca_vertex[i, j]
                        t = a
                        a = c
                        c = t
                    else:
                        continue
                    if not is_spec[top]:
                        continue
                    if a > b:
                        t = a
                        a = b
                        b = t
                    mark[(a * k + b) * k + c] = 1


def rule2_mark(side_a, side_b, Py_ssize_t k, uint8_t[::1] mark):
    cdef const int32_t[::1] p
    cdef const int32_t[::1] q
    cdef Py_ssize_t i, j, l, a, b, c, t
    import numpy as np
    for first, second in ((side_a, side_b), (side_b, side_a)):
        p = np.ascontiguousarray(first, dtype=np.int32)
        q = np.ascontiguousarray(second, dtype=np.int32)
        with nogil:
            for i in range(p.shape[0]):
                for j in range(i + 1, p.shape[0]):
                    a = p[i]
                    b = p[j]
                    if a == b:
                        continue
                    if a > b:
                        t = a
                        a = b
                        b = t
                    for l in range(q.shape[0]):
                        c = q[l]
                        if c != a and c != b:
                            mark[(a * k + b) * k + c] = 1
