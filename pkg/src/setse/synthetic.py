"""Peel's quintet block models and random connected test graphs."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .graph import GraphError, PreparedGraph, balance_continuous, expand_categorical

log = logging.getLogger(__name__)

SUBCLASSES = ("a1", "a2", "b1", "b2")
SUBCLASS_SIZE = 10

# Upper-triangular block edge counts over (a1, a2, b1, b2).
PEEL_BLOCKS: dict[str, tuple[tuple[int, ...], ...]] = {
    "A": ((10, 20, 20, 20), (0, 10, 20, 20), (0, 0, 10, 20), (0, 0, 0, 10)),
    "B": ((38, 2, 20, 20), (0, 0, 20, 20), (0, 0, 0, 2), (0, 0, 0, 38)),
    "C": ((38, 2, 0, 0), (0, 0, 80, 0), (0, 0, 10, 20), (0, 0, 0, 10)),
    "D": ((10, 20, 0, 0), (0, 10, 80, 0), (0, 0, 10, 20), (0, 0, 0, 10)),
    "E": ((38, 2, 0, 0), (0, 0, 80, 0), (0, 0, 0, 2), (0, 0, 0, 38)),
}
QUINTET_TYPES = tuple(PEEL_BLOCKS)


@dataclass(frozen=True)
class QuintetSpec:
    type: str
    blocks: np.ndarray
    subclass_size: int = SUBCLASS_SIZE

    @classmethod
    def of(cls, type_: str) -> "QuintetSpec":
        t = type_.upper()
        if t not in PEEL_BLOCKS:
            raise ValueError(f"unknown quintet type {type_!r}; expected one of {', '.join(QUINTET_TYPES)}")
        return cls(t, np.array(PEEL_BLOCKS[t], dtype=np.int64))


@dataclass(frozen=True)
class QuintetInstance:
    type: str
    seed: int
    node_ids: tuple[str, ...]
    edges: np.ndarray  # (m, 2) node indices
    classes: tuple[str, ...]
    subclasses: tuple[str, ...]

    def prepared(self, k: float = 1000.0, d: float = 1.0) -> PreparedGraph:
        return PreparedGraph.from_edges(
            self.node_ids, self.edges, attach_quintet_forces(self.classes), k=k, d=d, dimension_names=["class=a"]
        )


def _is_connected(n: int, edges: np.ndarray) -> bool:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    groups = n
    for i, j in edges:
        ri, rj = find(int(i)), find(int(j))
        if ri != rj:
            parent[ri] = rj
            groups -= 1
    return groups == 1


def _sample_blocks(spec: QuintetSpec, rng: np.random.Generator) -> np.ndarray:
    size = spec.subclass_size
    members = [np.arange(b * size, (b + 1) * size) for b in range(len(SUBCLASSES))]
    chunks = []
    for r in range(len(SUBCLASSES)):
        for c in range(r, len(SUBCLASSES)):
            count = int(spec.blocks[r, c])
            if count == 0:
                continue
            if r == c:
                pairs = np.array(list(itertools.combinations(members[r], 2)))
            else:
                pairs = np.array(list(itertools.product(members[r], members[c])))
            if count > len(pairs):
                raise ValueError(f"block {SUBCLASSES[r]}-{SUBCLASSES[c]} asks for {count} of {len(pairs)} pairs")
            chunks.append(pairs[rng.permutation(len(pairs))[:count]])
    return np.concatenate(chunks).astype(np.int64)


def generate_peel(type_: str, seed: int = 0, max_resamples: int = 1000) -> QuintetInstance:
    """Sample one 40-node quintet graph with exact block edge counts.

    Disconnected samples are discarded and redrawn with ``seed + 1``,
    ``seed + 2``, ...; ``QuintetInstance.seed`` is the seed actually used.
    """
    spec = QuintetSpec.of(type_)
    n = spec.subclass_size * len(SUBCLASSES)
    for attempt in range(max_resamples):
        used = seed + attempt
        edges = _sample_blocks(spec, np.random.default_rng(used))
        if _is_connected(n, edges):
            break
    else:
        raise RuntimeError(f"no connected type {spec.type} sample within {max_resamples} draws")
    if attempt:
        log.info("quintet type %s seed %d: %d disconnected samples rejected", spec.type, seed, attempt)
    subclasses = tuple(s for s in SUBCLASSES for _ in range(spec.subclass_size))
    node_ids = tuple(f"{s}_{i:02d}" for s in SUBCLASSES for i in range(spec.subclass_size))
    return QuintetInstance(spec.type, used, node_ids, edges, tuple(s[0] for s in subclasses), subclasses)


def attach_quintet_forces(classes) -> np.ndarray:
    """Single balanced dimension from a binary class label (first level positive)."""
    (_, forces), _ = expand_categorical(list(classes))
    return forces.reshape(-1, 1)


def generate_random_graph(
    n: int,
    *,
    p: float | None = None,
    m: int | None = None,
    seed: int = 0,
    tree: bool = False,
) -> np.ndarray:
    """Connected simple graph as an ``(m, 2)`` index array.

    With ``m``: a random spanning tree plus ``m - (n - 1)`` uniformly chosen
    extra edges. With ``p``: G(n, p), then components are joined by random
    edges until connected. ``tree=True`` is ``m = n - 1``.
    """
    if n < 1:
        raise GraphError("n must be at least 1")
    rng = np.random.default_rng(seed)
    if tree:
        m = n - 1
    if (p is None) == (m is None):
        raise GraphError("give exactly one of p or m")
    if m is not None:
        max_m = n * (n - 1) // 2
        if m < n - 1:
            raise GraphError(f"m={m} edges cannot connect {n} nodes (need at least {n - 1})")
        if m > max_m:
            raise GraphError(f"m={m} exceeds the {max_m} possible edges")
        order = rng.permutation(n)
        parents = order[(rng.random(n - 1) * np.arange(1, n)).astype(np.int64)]
        edges = np.column_stack([order[1:], parents]).astype(np.int64)
        return _add_random_edges(n, edges, m - (n - 1), rng)
    if not 0.0 <= p <= 1.0:
        raise GraphError("p must lie in [0, 1]")
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    edges = np.column_stack([iu[keep], ju[keep]]).astype(np.int64)
    return _connect(n, edges, rng)


def _add_random_edges(n: int, edges: np.ndarray, extra: int, rng: np.random.Generator) -> np.ndarray:
    if extra <= 0:
        return edges
    present = set((min(i, j), max(i, j)) for i, j in edges.tolist())
    total = n * (n - 1) // 2
    if extra + len(present) > total * 0.5:
        iu, ju = np.triu_indices(n, k=1)
        cand = [(i, j) for i, j in zip(iu.tolist(), ju.tolist()) if (i, j) not in present]
        pick = rng.permutation(len(cand))[:extra]
        added = np.array([cand[x] for x in sorted(pick)], dtype=np.int64)
        return np.concatenate([edges, added])
    added = []
    while len(added) < extra:
        batch = rng.integers(0, n, size=(2 * (extra - len(added)) + 16, 2))
        for i, j in batch.tolist():
            if i == j:
                continue
            key = (min(i, j), max(i, j))
            if key in present:
                continue
            present.add(key)
            added.append(key)
            if len(added) == extra:
                break
    return np.concatenate([edges, np.array(added, dtype=np.int64)])


def _connect(n: int, edges: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    adj = coo_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n)) if len(edges) else None
    if adj is None:
        n_comp, labels = n, np.arange(n)
    else:
        n_comp, labels = connected_components(adj, directed=False)
    if n_comp == 1:
        return edges
    reps = [rng.choice(np.flatnonzero(labels == c)) for c in range(n_comp)]
    order = rng.permutation(n_comp)
    links = [(int(reps[order[i]]), int(reps[order[i + 1]])) for i in range(n_comp - 1)]
    return np.concatenate([edges.reshape(-1, 2), np.array(links, dtype=np.int64)])


def attach_pendant_chains(
    n: int, edges: np.ndarray, n_chains: int, max_length: int = 3, seed: int = 0
) -> tuple[int, np.ndarray]:
    """Hang ``n_chains`` paths of 1..max_length new nodes off random existing nodes."""
    rng = np.random.default_rng(seed)
    extra = []
    next_id = n
    for _ in range(n_chains):
        anchor = int(rng.integers(0, next_id))
        for _ in range(int(rng.integers(1, max_length + 1))):
            extra.append((anchor, next_id))
            anchor = next_id
            next_id += 1
    if not extra:
        return n, edges
    return next_id, np.concatenate([edges, np.array(extra, dtype=np.int64)])


def random_forces(n: int, n_dims: int = 1, seed: int = 0, scale: float = 1.0) -> np.ndarray:
    """Gaussian node forces, mean-centred per dimension."""
    rng = np.random.default_rng(seed)
    raw = rng.normal(0.0, scale, size=(n, n_dims))
    return np.column_stack([balance_continuous(raw[:, q]) for q in range(n_dims)])


def random_prepared_graph(
    n: int, m: int, seed: int = 0, n_dims: int = 1, k: float = 1000.0, d: float = 1.0
) -> PreparedGraph:
    edges = generate_random_graph(n, m=m, seed=seed)
    return PreparedGraph.from_edges(n, edges, random_forces(n, n_dims, seed + 1), k=k, d=d)
