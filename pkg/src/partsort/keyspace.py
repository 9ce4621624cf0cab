"""Input generation, duplicate tagging and ground-truth rank oracles."""

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels

TAG_SHIFT = 32
_IDX_MASK = (1 << TAG_SHIFT) - 1
U64_MAX = np.iinfo(np.uint64).max

# rng stream identifiers, first element of every SeedSequence spawn key
STREAM_INPUT = 0
STREAM_PARTITION = 1
STREAM_ROOT = 2
STREAM_QUERY = 3


def rng_for(seed, *path):
    """Independent generator for ``(seed, *path)``; same path, same stream."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(x) for x in path))
    return np.random.Generator(np.random.PCG64(ss))


class DistributionKind(enum.Enum):
    UNIF = "unif"
    SKEW1 = "skew1"
    SKEW2 = "skew2"
    SKEW3 = "skew3"
    GAUSS = "gauss"
    ALLZEROS = "zeros"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        for kind in cls:
            if key in (kind.value, kind.name.lower()):
                return kind
        raise ValueError(f"unknown distribution {name!r}")


@dataclass(frozen=True, order=True)
class TaggedKey:
    """A key made unique by its origin; ordering is lexicographic on (key, proc, idx)."""

    key: int
    proc: int
    idx: int

    @property
    def tag(self):
        return (self.proc << TAG_SHIFT) | self.idx

    @classmethod
    def from_tag(cls, key, tag):
        tag = int(tag)
        return cls(int(key), tag >> TAG_SHIFT, tag & _IDX_MASK)


# virtual key above every real tagged key (real tags have proc < 2**32)
POS_INF = TaggedKey(int(U64_MAX), int(U64_MAX) >> TAG_SHIFT, int(U64_MAX) & _IDX_MASK)


def make_tags(proc, n, start=0):
    return (np.uint64(proc) << np.uint64(TAG_SHIFT)) | np.arange(start, start + n, dtype=np.uint64)


class TaggedArray:
    """Column store of tagged keys: parallel uint64 ``keys`` and ``tags`` arrays."""

    __slots__ = ("keys", "tags")

    def __init__(self, keys, tags):
        self.keys = np.asarray(keys, dtype=np.uint64)
        self.tags = np.asarray(tags, dtype=np.uint64)
        if self.keys.shape != self.tags.shape:
            raise ValueError("keys and tags must have the same shape")

    @classmethod
    def empty(cls):
        return cls(np.zeros(0, np.uint64), np.zeros(0, np.uint64))

    @classmethod
    def concat(cls, parts):
        parts = [x for x in parts if x is not None]
        if not parts:
            return cls.empty()
        return cls(np.concatenate([x.keys for x in parts]), np.concatenate([x.tags for x in parts]))

    @classmethod
    def from_keys(cls, keys, proc):
        keys = np.asarray(keys, dtype=np.uint64)
        return cls(keys, make_tags(proc, len(keys)))

    @classmethod
    def of(cls, items):
        items = list(items)
        return cls(np.array([t.key for t in items], dtype=np.uint64),
                   np.array([t.tag for t in items], dtype=np.uint64))

    def __len__(self):
        return len(self.keys)

    def __getitem__(self, i):
        if isinstance(i, (int, np.integer)):
            return TaggedKey.from_tag(self.keys[i], self.tags[i])
        return TaggedArray(self.keys[i], self.tags[i])

    def __iter__(self):
        for k, t in zip(self.keys.tolist(), self.tags.tolist()):
            yield TaggedKey.from_tag(k, t)

    def __repr__(self):
        return f"TaggedArray(n={len(self)})"

    def argsort(self):
        return np.lexsort((self.tags, self.keys))

    def sorted(self):
        return self[self.argsort()]

    def is_sorted(self, strict=True):
        k, t = self.keys, self.tags
        if len(k) < 2:
            return True
        gt = (k[1:] > k[:-1]) | ((k[1:] == k[:-1]) & (t[1:] > t[:-1]))
        if strict:
            return bool(gt.all())
        eq = (k[1:] == k[:-1]) & (t[1:] == t[:-1])
        return bool((gt | eq).all())

    def searchsorted(self, probes, side="right"):
        """Counts of elements ``<= probe`` (right) or ``< probe`` (left); self must be sorted."""
        return _kernels.lex_searchsorted(self.keys, self.tags, probes.keys, probes.tags,
                                         right=(side == "right"))

    def equals(self, other):
        return (len(self) == len(other) and np.array_equal(self.keys, other.keys)
                and np.array_equal(self.tags, other.tags))


@dataclass
class DistributedInput:
    """``p`` per-processor key sequences plus generation metadata.

    ``per_proc`` holds raw uint64 arrays until :func:`tag_input` is applied,
    then :class:`TaggedArray` instances.
    """

    per_proc: list
    n_total: int
    p: int
    dist: DistributionKind = DistributionKind.UNIF
    seed: int = 0
    tagged: bool = False
    locally_sorted: bool = False
    meta: dict = field(default_factory=dict)

    def sizes(self):
        return np.array([len(x) for x in self.per_proc], dtype=np.int64)

    def offsets(self):
        return np.concatenate([[0], np.cumsum(self.sizes())]).astype(np.int64)

    def flat(self):
        """Concatenated ``(keys, tags, offsets)`` of a tagged input."""
        if not self.tagged:
            raise ValueError("flat() requires a tagged input")
        keys = np.concatenate([x.keys for x in self.per_proc]) if self.p else np.zeros(0, np.uint64)
        tags = np.concatenate([x.tags for x in self.per_proc]) if self.p else np.zeros(0, np.uint64)
        return keys, tags, self.offsets()

    def all_keys(self):
        if self.tagged:
            return TaggedArray.concat(self.per_proc)
        return np.concatenate(self.per_proc)

    def with_parts(self, per_proc, **changes):
        n = sum(len(x) for x in per_proc)
        return replace(self, per_proc=list(per_proc), n_total=n, p=len(per_proc), **changes)


def local_sizes(n_total, p):
    """Balanced local sizes; the first ``n_total % p`` processors get one extra key."""
    base, extra = divmod(n_total, p)
    return [base + (1 if i < extra else 0) for i in range(p)]


def _draw(dist, n, rng):
    if dist is DistributionKind.UNIF:
        return rng.integers(0, 1 << 64, size=n, dtype=np.uint64)
    if dist is DistributionKind.SKEW1:
        half = n // 2
        # narrow block [0, 1000) sits below the wide draw, so the two never overlap
        wide = rng.integers(1000, 1 << 64, size=n - half, dtype=np.uint64)
        narrow = rng.integers(0, 1000, size=half, dtype=np.uint64)
        out = np.concatenate([wide, narrow])
        rng.shuffle(out)
        return out
    if dist is DistributionKind.SKEW2:
        return rng.integers(0, 100, size=n, dtype=np.uint64, endpoint=True)
    if dist is DistributionKind.SKEW3:
        a = rng.integers(0, 1 << 64, size=n, dtype=np.uint64)
        b = rng.integers(0, 1 << 64, size=n, dtype=np.uint64)
        return a & b
    if dist is DistributionKind.GAUSS:
        x = rng.normal(2.0 ** 63, 2.0 ** 59, size=n)
        x = np.clip(x, 0.0, np.nextafter(2.0 ** 64, 0.0))
        return x.astype(np.uint64)
    if dist is DistributionKind.ALLZEROS:
        return np.zeros(n, dtype=np.uint64)
    raise ValueError(f"unsupported distribution {dist!r}")


def generate_input(dist, n_total, p, seed):
    """Untagged input; processor ``i`` draws from its own stream ``(seed, i)``."""
    dist = DistributionKind.parse(dist)
    if p < 1:
        raise ValueError("p must be >= 1")
    if n_total < p:
        raise ValueError("n_total must be >= p")
    parts = [_draw(dist, n, rng_for(seed, STREAM_INPUT, i))
             for i, n in enumerate(local_sizes(n_total, p))]
    return DistributedInput(parts, int(n_total), int(p), dist, int(seed))


def local_sort(inp):
    """Sort every processor's sequence (raw or tagged)."""
    if inp.tagged:
        parts = [x.sorted() for x in inp.per_proc]
    else:
        parts = [np.sort(x) for x in inp.per_proc]
    return replace(inp, per_proc=parts, locally_sorted=True)


def tag_input(raw):
    """Replace key ``k`` at local position ``j`` of processor ``i`` by ``(k, i, j)``.

    Applied after the local sort, the tagged sequences stay sorted.
    """
    if raw.tagged:
        return raw
    parts = [TaggedArray.from_keys(x, i) for i, x in enumerate(raw.per_proc)]
    return replace(raw, per_proc=parts, tagged=True)


def prepare_input(dist, n_total, p, seed):
    """generate -> local sort -> tag, the standard pre-partition pipeline."""
    return tag_input(local_sort(generate_input(dist, n_total, p, seed)))


def from_global(keys, p, dist=DistributionKind.UNIF, seed=0):
    """Distribute a global key sequence in order, ``local_sizes`` per processor."""
    keys = np.asarray(keys, dtype=np.uint64)
    bounds = np.concatenate([[0], np.cumsum(local_sizes(len(keys), p))])
    parts = [keys[bounds[i]:bounds[i + 1]] for i in range(p)]
    return DistributedInput(parts, len(keys), p, DistributionKind.parse(dist), seed)


def ideal_splitter_ranks(n_total, p):
    """``floor(n_total * i / p)`` for ``i = 1 .. p-1``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    return [(n_total * i) // p for i in range(1, p)]


def global_order(inp):
    """All tagged keys of ``inp`` in sorted order (test oracle, O(N log N))."""
    return tag_input(inp).all_keys().sorted()


def rank_oracle(inp, key):
    """Number of keys in the whole input strictly less than ``key``.

    Materializes and sorts the full input; meant for tests only.
    """
    allk = global_order(inp)
    if isinstance(key, TaggedArray):
        return allk.searchsorted(key, side="left")
    return int(allk.searchsorted(TaggedArray.of([key]), side="left")[0])
