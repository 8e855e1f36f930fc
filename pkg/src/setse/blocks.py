"""Block-wise embedding through the block-cut tree.

A graph is split into its bi-connected components (blocks). Each block is
solved on its own with the net force of everything hanging off its
articulation nodes folded into those nodes, and the block solutions are
shifted back together at the shared articulation nodes.
"""

from __future__ import annotations

import math
import os
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .autotune import AutoTuneParams, UntunableError, auto_setse
from .engine import Embeddings, build_embeddings, check_component_balance, default_tolerance
from .graph import GraphError, PreparedGraph, component_labels

__all__ = [
    "Block",
    "BlockCutTree",
    "decompose",
    "balance_block_forces",
    "solve_single_spring",
    "abs_elevation",
    "setse_biconnected",
    "default_workers",
]


@dataclass(frozen=True)
class Block:
    nodes: np.ndarray  # parent node indices, ascending
    edges: np.ndarray  # parent edge indices, ascending

    @property
    def n_edges(self) -> int:
        return int(self.edges.size)


@dataclass
class BlockCutTree:
    blocks: list[Block]
    articulation: frozenset[int]
    node_blocks: dict[int, list[int]] = field(default_factory=dict)

    def blocks_of(self, node: int) -> list[int]:
        return self.node_blocks.get(node, [])

    def origin(self) -> int:
        """Largest block: most edges, then most nodes, then lowest smallest node index."""
        return min(
            range(len(self.blocks)),
            key=lambda b: (-self.blocks[b].n_edges, -self.blocks[b].nodes.size, int(self.blocks[b].nodes[0])),
        )


def decompose(graph: PreparedGraph) -> BlockCutTree:
    """Bi-connected components by iterative DFS low-link with an edge stack."""
    n = graph.n_nodes
    if n and graph.n_edges:
        n_comp, _ = component_labels(graph)
        if n_comp > 1:
            raise GraphError(f"graph has {n_comp} connected components; decompose each component separately")
    elif n > 1:
        raise GraphError(f"graph has {n} connected components; decompose each component separately")

    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for e, (i, j) in enumerate(zip(graph.src.tolist(), graph.dst.tolist())):
        adj[i].append((j, e))
        adj[j].append((i, e))

    disc = [-1] * n
    low = [0] * n
    blocks: list[Block] = []
    articulation: set[int] = set()
    counter = 0
    for root in range(n):
        if disc[root] != -1 or not adj[root]:
            continue
        disc[root] = low[root] = counter
        counter += 1
        root_children = 0
        edge_stack: list[int] = []
        # Frames: (node, parent edge, next neighbour position).
        stack = [[root, -1, 0]]
        while stack:
            frame = stack[-1]
            u, pe, pos = frame
            if pos < len(adj[u]):
                frame[2] += 1
                w, e = adj[u][pos]
                if e == pe:
                    continue
                if disc[w] == -1:
                    edge_stack.append(e)
                    disc[w] = low[w] = counter
                    counter += 1
                    stack.append([w, e, 0])
                    if u == root:
                        root_children += 1
                elif disc[w] < disc[u]:
                    edge_stack.append(e)
                    low[u] = min(low[u], disc[w])
                continue
            stack.pop()
            if not stack:
                break
            parent = stack[-1][0]
            low[parent] = min(low[parent], low[u])
            if low[u] >= disc[parent]:
                if parent != root:
                    articulation.add(parent)
                edges = []
                while True:
                    top = edge_stack.pop()
                    edges.append(top)
                    if top == pe:
                        break
                edges_arr = np.array(sorted(edges), dtype=np.int64)
                nodes = np.unique(np.concatenate([graph.src[edges_arr], graph.dst[edges_arr]]))
                blocks.append(Block(nodes, edges_arr))
        if root_children > 1:
            articulation.add(root)

    node_blocks: dict[int, list[int]] = {}
    for b, block in enumerate(blocks):
        for v in block.nodes.tolist():
            node_blocks.setdefault(v, []).append(b)
    return BlockCutTree(blocks, frozenset(articulation), node_blocks)


def _bfs_blocks(tree: BlockCutTree, origin: int):
    """Yield ``(block, parent articulation or None)`` in BFS order from ``origin``."""
    seen = {origin}
    queue = deque([(origin, None)])
    while queue:
        b, via = queue.popleft()
        yield b, via
        for a in tree.blocks[b].nodes.tolist():
            if a not in tree.articulation or a == via:
                continue
            for nb in tree.node_blocks[a]:
                if nb not in seen:
                    seen.add(nb)
                    queue.append((nb, a))


def balance_block_forces(tree: BlockCutTree, forces: np.ndarray) -> list[np.ndarray]:
    """Force vectors per block, rows aligned with ``block.nodes``.

    Inside a block, an articulation node carries its own force plus the net
    force of everything reachable through it outside the block. Each block's
    forces then sum to zero whenever the parent forces do.
    """
    forces = np.asarray(forces, dtype=np.float64)
    if forces.ndim == 1:
        forces = forces.reshape(-1, 1)
    if not tree.blocks:
        return []
    origin = tree.origin()
    order = list(_bfs_blocks(tree, origin))
    parent_art = {b: via for b, via in order}
    # subtree[b]: forces of block b's own non-parent nodes plus everything below them.
    subtree = {}
    art_subtree: dict[tuple[int, int], np.ndarray] = {}
    for b, via in reversed(order):
        total = np.zeros(forces.shape[1])
        for v in tree.blocks[b].nodes.tolist():
            if v == via:
                continue
            below = forces[v].copy()
            if v in tree.articulation:
                for nb in tree.node_blocks[v]:
                    if nb != b and parent_art.get(nb) == v:
                        below += subtree[nb]
            art_subtree[(b, v)] = below
            total += below
        subtree[b] = total
    out = []
    for b, block in enumerate(tree.blocks):
        via = parent_art[b]
        rows = np.empty((block.nodes.size, forces.shape[1]))
        for r, v in enumerate(block.nodes.tolist()):
            rows[r] = -subtree[b] if v == via else art_subtree[(b, v)]
        out.append(rows)
    return out


def solve_single_spring(force: np.ndarray, k: float, d: float) -> np.ndarray:
    """Equilibrium of one spring pulled by ``+force`` / ``-force`` at its ends.

    Returns the elevation difference ``z_src - z_dst``: parallel to ``force``
    with magnitude ``s`` solving ``k * s * (1 - d / sqrt(s^2 + d^2)) = |force|``.
    """
    force = np.asarray(force, dtype=np.float64)
    g = float(np.linalg.norm(force))
    if g == 0.0:
        return np.zeros_like(force)

    def residual(s):
        return k * s * (1.0 - d / math.hypot(s, d)) - g

    hi = (2.0 * g * d * d / k) ** (1.0 / 3.0) + g / k
    while residual(hi) < 0:
        hi *= 2.0
    s = brentq(residual, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return force * (s / g)


def default_workers() -> int:
    env = os.environ.get("SETSE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _solve_block(graph: PreparedGraph, block: Block, forces: np.ndarray, params: AutoTuneParams, index: int):
    if block.n_edges == 1:
        e = int(block.edges[0])
        i, j = int(graph.src[e]), int(graph.dst[e])
        rows = {int(v): r for r, v in enumerate(block.nodes.tolist())}
        diff = solve_single_spring(forces[rows[i]], float(graph.k[e]), float(graph.d[e]))
        z = np.zeros_like(forces)
        z[rows[i]] = diff / 2
        z[rows[j]] = -diff / 2
        return z, True, 0
    sub = graph.subgraph(block.nodes, block.edges, forces)
    block_params = params
    if params.tolerance is not None:
        # Share the absolute tolerance in proportion to the block's force.
        total = float(np.abs(graph.forces).sum())
        share = float(np.abs(forces).sum()) / total if total else 0.0
        block_params = _replace(params, tolerance=params.tolerance * share)
    try:
        emb, trace = auto_setse(sub, block_params)
    except UntunableError as exc:
        raise UntunableError(f"block {index} ({block.nodes.size} nodes): {exc}", exc.trace) from None
    return emb.node_elevation, emb.converged, emb.iterations


def _replace(params, **kw):
    from dataclasses import replace

    return replace(params, **kw)


def abs_elevation(tree: BlockCutTree, block_elevations: list[np.ndarray | None], n_nodes: int) -> np.ndarray:
    """Stitch block-relative elevations into one absolute profile.

    The largest block is left in place. Blocks are attached breadth-first;
    each is shifted so its articulation node sits where that node was already
    placed.
    """
    if len(block_elevations) != len(tree.blocks):
        raise GraphError("need one elevation array per block")
    for b, z in enumerate(block_elevations):
        if z is None:
            raise GraphError(f"block {b} has not been solved")
    n_dims = block_elevations[0].shape[1] if block_elevations else 1
    out = np.zeros((n_nodes, n_dims))
    if not tree.blocks:
        return out
    placed = np.zeros(n_nodes, dtype=bool)
    for b, via in _bfs_blocks(tree, tree.origin()):
        nodes = tree.blocks[b].nodes
        z = np.asarray(block_elevations[b], dtype=np.float64)
        if via is not None:
            r = int(np.searchsorted(nodes, via))
            z = z - z[r] + out[via]
        fresh = ~placed[nodes]
        out[nodes[fresh]] = z[fresh]
        placed[nodes] = True
    return out


def setse_biconnected(
    graph: PreparedGraph,
    params: AutoTuneParams | None = None,
    *,
    workers: int | None = None,
) -> Embeddings:
    """Embed block by block and reassemble.

    Single-edge blocks are solved in closed form; larger blocks go through
    :func:`auto_setse`. Elevations are mean-centred per dimension. The
    reported residual and ``eta`` are recomputed on the whole graph.
    """
    params = params or AutoTuneParams()
    check_component_balance(graph)
    start = time.perf_counter()
    tree = decompose(graph)
    block_forces = balance_block_forces(tree, graph.forces)
    workers = default_workers() if workers is None else workers

    jobs = [(graph, blk, f, params, b) for b, (blk, f) in enumerate(zip(tree.blocks, block_forces))]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda job: _solve_block(*job), jobs))
    else:
        results = [_solve_block(*job) for job in jobs]

    z = abs_elevation(tree, [r[0] for r in results], graph.n_nodes)
    if graph.n_nodes:
        z -= z.mean(axis=0)
    tol = default_tolerance(graph) if params.tolerance is None else params.tolerance
    emb = build_embeddings(
        graph,
        z,
        tolerance=tol,
        iterations=max((r[2] for r in results), default=0),
        params={
            "mode": "biconnected",
            "n_blocks": len(tree.blocks),
            "n_articulation": len(tree.articulation),
            "blocks_converged": all(r[1] for r in results),
        },
        wall_time=time.perf_counter() - start,
    )
    return emb
