"""Approximate latent cache with similarity-graded reuse.

Entries hold denoising latents for a request, snapshotted at several
step depths. A lookup embeds the incoming request, finds the most
similar stored entry by cosine similarity, and maps that similarity to
a reuse depth: the closer the match, the later the snapshot we can
safely resume from, and the more denoising steps are skipped. A depth
of zero is a miss.

Capacity is a byte budget; eviction is LRU over logical ticks that
advance on every lookup and insert, so recency is well defined without
wall clocks. All tie-breaks are total orders, which keeps replays
bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, EntryTooLarge, ZeroNormEmbedding

__all__ = [
    "RESOLUTIONS",
    "DEFAULT_LATENT_BYTES",
    "DEFAULT_STORED_DEPTHS",
    "DEFAULT_POLICY",
    "DEFAULT_DIM",
    "normalize",
    "ReuseDepthPolicy",
    "reuse_depth",
    "CacheEntry",
    "LookupResult",
    "CacheState",
]

RESOLUTIONS: tuple[str, ...] = ("720p", "1080p", "2k")

# Per-step latent footprints in bytes (GB = 1e9 bytes throughout).
DEFAULT_LATENT_BYTES: dict[str, int] = {
    "720p": 16_000_000,
    "1080p": 40_000_000,
    "2k": 70_000_000,
}

# Snapshot depths kept per entry; an entry's byte size is
# len(stored_depths) * latent_bytes[resolution].
DEFAULT_STORED_DEPTHS: tuple[int, ...] = (5, 10, 15, 20, 25)

DEFAULT_DIM = 768


def normalize(vec, tol: float = 1e-9) -> np.ndarray:
    """Return ``vec`` as a unit-norm float64 vector.

    Vectors already within ``tol`` of unit norm are passed through
    undivided, so normalizing twice is the identity bit-for-bit.
    Raises :class:`ZeroNormEmbedding` for the zero vector.
    """
    arr = np.array(vec, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(f"expected a 1-d vector, got shape {arr.shape}")
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        raise ZeroNormEmbedding("cannot normalize the zero vector")
    if abs(norm - 1.0) > tol:
        arr /= norm
    return arr


@dataclass(frozen=True)
class ReuseDepthPolicy:
    """Maps cosine similarity to reuse depth via threshold bands.

    ``bands`` are (exclusive lower bound, depth) pairs with strictly
    decreasing bounds; a similarity falls into the first band whose
    bound it exceeds, and below every bound the depth is 0.
    """

    bands: tuple[tuple[float, int], ...]

    def __post_init__(self):
        bands = tuple((float(t), int(d)) for t, d in self.bands)
        if not bands:
            raise ValueError("at least one band is required")
        bounds = [t for t, _ in bands]
        depths = [d for _, d in bands]
        if any(bounds[i] <= bounds[i + 1] for i in range(len(bounds) - 1)):
            raise ValueError("band bounds must be strictly decreasing")
        if any(d < 0 for d in depths):
            raise ValueError("depths must be nonnegative")
        if any(depths[i] < depths[i + 1] for i in range(len(depths) - 1)):
            raise ValueError("depths must be nonincreasing as bounds decrease")
        object.__setattr__(self, "bands", bands)

    def depth_for(self, similarity: float) -> int:
        for bound, depth in self.bands:
            if similarity > bound:
                return depth
        return 0

    @property
    def max_depth(self) -> int:
        return max(d for _, d in self.bands)


DEFAULT_POLICY = ReuseDepthPolicy(
    bands=((0.95, 25), (0.90, 20), (0.85, 15), (0.75, 10), (0.65, 5))
)


def reuse_depth(similarity: float, policy: ReuseDepthPolicy = DEFAULT_POLICY) -> int:
    """Reuse depth for a similarity under ``policy`` (default bands above)."""
    return policy.depth_for(similarity)


@dataclass
class CacheEntry:
    """One cached request: its embedding, footprint, and recency state."""

    entry_id: int
    embedding: np.ndarray
    resolution: str
    byte_size: int
    stored_depths: tuple[int, ...]
    created: int
    last_used: int


@dataclass(frozen=True)
class LookupResult:
    """Outcome of one lookup.

    ``depth`` > 0 means a hit at that reuse depth. ``similarity`` and
    ``matched_id`` describe the best candidate even when its similarity
    was too low to count as a hit; both are None on an empty cache.
    """

    hit: bool
    depth: int
    similarity: float | None
    matched_id: int | None
    tick: int


class CacheState:
    """Byte-budgeted LRU cache over unit-norm embeddings.

    Candidate scoring is a single matrix-vector product against a
    packed embedding matrix; evicted rows are swap-removed so the
    matrix stays contiguous. A logical tick counter advances on every
    lookup and on every successful insert; the operation is stamped
    with the pre-advance value, so all ``last_used`` values are unique.

    Tie-breaks are exact: among equal similarities the most recently
    used entry wins, then the lowest entry id; eviction removes the
    least recently used entry, then the lowest entry id.
    """

    def __init__(
        self,
        capacity_bytes: int,
        dim: int = DEFAULT_DIM,
        policy: ReuseDepthPolicy = DEFAULT_POLICY,
        match_same_resolution: bool = True,
        stored_depths: Sequence[int] = DEFAULT_STORED_DEPTHS,
        latent_bytes: Mapping[str, int] = DEFAULT_LATENT_BYTES,
    ):
        if capacity_bytes < 0:
            raise ValueError("capacity_bytes must be nonnegative")
        if dim < 1:
            raise ValueError("dim must be at least 1")
        self.capacity_bytes = int(capacity_bytes)
        self.dim = int(dim)
        self.policy = policy
        self.match_same_resolution = bool(match_same_resolution)
        self.stored_depths = tuple(sorted(int(d) for d in stored_depths))
        self.latent_bytes = dict(latent_bytes)
        self.tick = 0
        self.occupied_bytes = 0
        self.entries: dict[int, CacheEntry] = {}
        self._next_id = 0
        self._n = 0
        cap0 = 64
        self._emb = np.zeros((cap0, self.dim), dtype=np.float64)
        self._ids = np.zeros(cap0, dtype=np.int64)
        self._last_used = np.zeros(cap0, dtype=np.int64)
        self._res = np.zeros(cap0, dtype=np.int8)
        self._byte_sizes = np.zeros(cap0, dtype=np.int64)
        self._row_of: dict[int, int] = {}
        self._evicted: list[int] = []

    def __len__(self) -> int:
        return self._n

    def _res_code(self, resolution: str) -> int:
        try:
            return RESOLUTIONS.index(resolution)
        except ValueError:
            raise ValueError(f"unknown resolution {resolution!r}") from None

    def _check_vec(self, embedding) -> np.ndarray:
        vec = normalize(embedding)
        if vec.shape[0] != self.dim:
            raise DimensionMismatch(
                f"expected dimension {self.dim}, got {vec.shape[0]}"
            )
        return vec

    def entry_byte_size(self, resolution: str) -> int:
        """Default footprint: one latent per stored depth."""
        self._res_code(resolution)
        return len(self.stored_depths) * int(self.latent_bytes[resolution])

    # -- core operations ----------------------------------------------------

    def lookup(self, embedding, resolution: str) -> LookupResult:
        """Score the query against all candidates and grade the best one.

        Always consumes one tick. A hit refreshes the matched entry's
        recency; a below-threshold best match does not.
        """
        vec = self._check_vec(embedding)
        res_code = self._res_code(resolution)
        tick = self.tick
        self.tick += 1

        n = self._n
        if n == 0:
            return LookupResult(False, 0, None, None, tick)
        if self.match_same_resolution:
            rows = np.nonzero(self._res[:n] == res_code)[0]
            if rows.size == 0:
                return LookupResult(False, 0, None, None, tick)
            sims = self._emb[rows] @ vec
        else:
            rows = np.arange(n)
            sims = self._emb[:n] @ vec

        best_sim = float(np.max(sims))
        tied = rows[sims == best_sim]
        if tied.size > 1:
            recency = self._last_used[tied]
            tied = tied[recency == recency.max()]
            if tied.size > 1:
                tied = tied[[int(np.argmin(self._ids[tied]))]]
        row = int(tied[0])
        matched_id = int(self._ids[row])

        depth = self.policy.depth_for(best_sim)
        if depth > 0:
            self._last_used[row] = tick
            self.entries[matched_id].last_used = tick
            return LookupResult(True, depth, best_sim, matched_id, tick)
        return LookupResult(False, 0, best_sim, matched_id, tick)

    def insert(
        self, embedding, resolution: str, byte_size: int | None = None
    ) -> tuple[CacheEntry, list[int]]:
        """Add an entry, evicting LRU victims until it fits.

        ``byte_size`` defaults to ``entry_byte_size(resolution)``.
        Returns the new entry and the ids evicted by this insert, in
        eviction order. Raises :class:`EntryTooLarge` before consuming
        a tick or evicting anything when the entry alone exceeds the
        budget.
        """
        vec = self._check_vec(embedding)
        self._res_code(resolution)
        if byte_size is None:
            byte_size = self.entry_byte_size(resolution)
        byte_size = int(byte_size)
        if byte_size <= 0:
            raise ValueError("byte_size must be positive")
        if byte_size > self.capacity_bytes:
            raise EntryTooLarge(
                f"entry of {byte_size} bytes exceeds capacity "
                f"{self.capacity_bytes} bytes"
            )
        tick = self.tick
        self.tick += 1

        evicted_before = len(self._evicted)
        while self.occupied_bytes + byte_size > self.capacity_bytes:
            self._evict_one()
        evicted_now = self._evicted[evicted_before:]

        entry = CacheEntry(
            entry_id=self._next_id,
            embedding=vec,
            resolution=resolution,
            byte_size=byte_size,
            stored_depths=self.stored_depths,
            created=tick,
            last_used=tick,
        )
        self._next_id += 1
        self._append_row(entry)
        self.entries[entry.entry_id] = entry
        self.occupied_bytes += byte_size
        return entry, evicted_now

    def evicted_ids(self) -> list[int]:
        """Ids evicted so far, in eviction order."""
        return list(self._evicted)

    # -- internals ----------------------------------------------------------

    def _append_row(self, entry: CacheEntry) -> None:
        if self._n == self._emb.shape[0]:
            grow = self._n * 2
            self._emb = np.resize(self._emb, (grow, self.dim))
            self._ids = np.resize(self._ids, grow)
            self._last_used = np.resize(self._last_used, grow)
            self._res = np.resize(self._res, grow)
            self._byte_sizes = np.resize(self._byte_sizes, grow)
        row = self._n
        self._emb[row] = entry.embedding
        self._ids[row] = entry.entry_id
        self._last_used[row] = entry.last_used
        self._res[row] = self._res_code(entry.resolution)
        self._byte_sizes[row] = entry.byte_size
        self._row_of[entry.entry_id] = row
        self._n += 1

    def _evict_one(self) -> None:
        n = self._n
        lu = self._last_used[:n]
        tied = np.nonzero(lu == lu.min())[0]
        if tied.size > 1:
            victim_row = int(tied[np.argmin(self._ids[tied])])
        else:
            victim_row = int(tied[0])
        victim_id = int(self._ids[victim_row])
        self.occupied_bytes -= int(self._byte_sizes[victim_row])
        del self.entries[victim_id]
        del self._row_of[victim_id]
        self._evicted.append(victim_id)
        last = n - 1
        if victim_row != last:
            self._emb[victim_row] = self._emb[last]
            self._ids[victim_row] = self._ids[last]
            self._last_used[victim_row] = self._last_used[last]
            self._res[victim_row] = self._res[last]
            self._byte_sizes[victim_row] = self._byte_sizes[last]
            self._row_of[int(self._ids[victim_row])] = victim_row
        self._n = last
