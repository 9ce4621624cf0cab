"""Pure numpy fallback for the lexicographic search and merge kernels.

A tagged key is the pair ``(key, tag)`` of two uint64 values. numpy has no
128-bit integer type, so the pair is packed into a 16-byte big-endian record
and viewed as ``S16``; byte-string comparison then coincides with the
lexicographic order on the pair.
"""

import numpy as np

_PAIR = np.dtype([("k", ">u8"), ("t", ">u8")])


def pack(keys, tags):
    rec = np.empty(len(keys), dtype=_PAIR)
    rec["k"] = keys
    rec["t"] = tags
    return rec.view("S16")


def lex_searchsorted(keys, tags, pkeys, ptags, right):
    if len(pkeys) == 0:
        return np.zeros(0, dtype=np.int64)
    side = "right" if right else "left"
    return np.searchsorted(pack(keys, tags), pack(pkeys, ptags), side=side).astype(np.int64)


def seg_searchsorted(keys, tags, offsets, pkeys, ptags, right):
    nseg = len(offsets) - 1
    out = np.zeros((nseg, len(pkeys)), dtype=np.int64)
    if len(pkeys) == 0:
        return out
    side = "right" if right else "left"
    packed = pack(keys, tags)
    probes = pack(pkeys, ptags)
    for q in range(nseg):
        lo, hi = offsets[q], offsets[q + 1]
        if hi > lo:
            out[q] = np.searchsorted(packed[lo:hi], probes, side=side)
    return out


def merge_runs(keys, tags, offsets):
    # lexsort is stable and the pair order is strict for tagged data, so the
    # result equals the k-way merge of the runs.
    return np.lexsort((tags, keys)).astype(np.int64)
