# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled lexicographic search and k-way merge over (key, tag) uint64 pairs."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport malloc, free

cnp.import_array()


cdef inline bint _le(uint64_t ak, uint64_t at, uint64_t bk, uint64_t bt) noexcept nogil:
    return ak < bk or (ak == bk and at <= bt)


cdef inline bint _lt(uint64_t ak, uint64_t at, uint64_t bk, uint64_t bt) noexcept nogil:
    return ak < bk or (ak == bk and at < bt)


cdef inline int64_t _search(const uint64_t[:] keys, const uint64_t[:] tags,
                            int64_t lo, int64_t hi, uint64_t pk, uint64_t pt,
                            bint right) noexcept nogil:
    # first position in [lo, hi) whose element is > probe (right) or >= probe (left)
    cdef int64_t mid
    while lo < hi:
        mid = lo + ((hi - lo) >> 1)
        if right:
            if _le(keys[mid], tags[mid], pk, pt):
                lo = mid + 1
            else:
                hi = mid
        else:
            if _lt(keys[mid], tags[mid], pk, pt):
                lo = mid + 1
            else:
                hi = mid
    return lo


def lex_searchsorted(const uint64_t[:] keys, const uint64_t[:] tags,
                     const uint64_t[:] pkeys, const uint64_t[:] ptags, bint right):
    cdef Py_ssize_t m = pkeys.shape[0], j
    cdef int64_t n = keys.shape[0]
    out = np.empty(m, dtype=np.int64)
    cdef int64_t[:] o = out
    with nogil:
        for j in range(m):
            o[j] = _search(keys, tags, 0, n, pkeys[j], ptags[j], right)
    return out


def seg_searchsorted(const uint64_t[:] keys, const uint64_t[:] tags,
                     const int64_t[:] offsets,
                     const uint64_t[:] pkeys, const uint64_t[:] ptags, bint right):
    cdef Py_ssize_t nseg = offsets.shape[0] - 1, m = pkeys.shape[0], q, j
    cdef int64_t lo, hi, i, logn
    cdef bint sorted_probes = True
    out = np.empty((nseg, m), dtype=np.int64)
    cdef int64_t[:, :] o = out
    with nogil:
        for j in range(1, m):
            if _lt(pkeys[j], ptags[j], pkeys[j - 1], ptags[j - 1]):
                sorted_probes = False
                break
        for q in range(nseg):
            lo = offsets[q]
            hi = offsets[q + 1]
            logn = 1
            while (1 << logn) <= hi - lo:
                logn += 1
            if sorted_probes and hi - lo + m < m * logn:
                # one linear walk serves every probe in order
                i = lo
                for j in range(m):
                    if right:
                        while i < hi and _le(keys[i], tags[i], pkeys[j], ptags[j]):
                            i += 1
                    else:
                        while i < hi and _lt(keys[i], tags[i], pkeys[j], ptags[j]):
                            i += 1
                    o[q, j] = i - lo
            else:
                for j in range(m):
                    o[q, j] = _search(keys, tags, lo, hi, pkeys[j], ptags[j], right) - lo
    return out


cdef inline bint _before(const uint64_t[:] keys, const uint64_t[:] tags,
                         int64_t a, int64_t b) noexcept nogil:
    # positions grow with the run index, so ties fall back to run order
    if keys[a] != keys[b]:
        return keys[a] < keys[b]
    if tags[a] != tags[b]:
        return tags[a] < tags[b]
    return a < b


def merge_runs(const uint64_t[:] keys, const uint64_t[:] tags, const int64_t[:] offsets):
    """Permutation merging the sorted runs ``[offsets[r], offsets[r+1])``."""
    cdef Py_ssize_t nruns = offsets.shape[0] - 1
    cdef int64_t n = keys.shape[0]
    out = np.empty(n, dtype=np.int64)
    cdef int64_t[:] o = out
    cdef int64_t *heap = <int64_t *> malloc((nruns + 1) * sizeof(int64_t))
    cdef int64_t *pos = <int64_t *> malloc((nruns + 1) * sizeof(int64_t))
    if heap == NULL or pos == NULL:
        free(heap)
        free(pos)
        raise MemoryError()
    cdef Py_ssize_t size = 0, r, i, c, child
    cdef int64_t w = 0, top, a, b
    with nogil:
        # heap of run ids keyed by the element at pos[run]
        for r in range(nruns):
            pos[r] = offsets[r]
            if offsets[r] < offsets[r + 1]:
                i = size
                size += 1
                heap[i] = r
                while i > 0:
                    c = (i - 1) >> 1
                    a = pos[heap[i]]
                    b = pos[heap[c]]
                    if _before(keys, tags, a, b):
                        heap[i], heap[c] = heap[c], heap[i]
                        i = c
                    else:
                        break
        while size > 0:
            top = heap[0]
            o[w] = pos[top]
            w += 1
            pos[top] += 1
            if pos[top] >= offsets[top + 1]:
                size -= 1
                heap[0] = heap[size]
            i = 0
            while True:
                child = 2 * i + 1
                if child >= size:
                    break
                if child + 1 < size:
                    a = pos[heap[child + 1]]
                    b = pos[heap[child]]
                    if _before(keys, tags, a, b):
                        child += 1
                a = pos[heap[child]]
                b = pos[heap[i]]
                if _before(keys, tags, a, b):
                    heap[i], heap[child] = heap[child], heap[i]
                    i = child
                else:
                    break
    free(heap)
    free(pos)
    return out
