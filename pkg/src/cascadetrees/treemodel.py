"""Chow-Liu and star trees for a Gaussian correlation structure.

A tree model keeps the source's variances and its correlations on the tree
edges; every other correlation is the product of edge correlations along the
unique tree path (zero between components). The precision matrix of such a
covariance is non-zero only on the diagonal and on the tree edges.
"""

from dataclasses import dataclass

import numpy as np

from .errors import CyclicEdges, InvalidCenter, InvalidCorrelation, NotSquare
from .symcore import kl_gauss

DEFAULT_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class TreeModel:
    """Spanning tree or forest over ``n`` nodes with its induced covariance.

    ``edges`` holds ``(u, v, rho)`` with ``u < v`` and ``rho`` the source
    correlation of the pair. ``components`` lists node tuples, each sorted,
    ordered by their lowest node.
    """

    n: int
    edges: tuple
    components: tuple
    covariance: np.ndarray

    @property
    def edge_set(self):
        return {(u, v) for u, v, _ in self.edges}

    def adjacency(self):
        adj = [[] for _ in range(self.n)]
        for u, v, _ in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        for nbrs in adj:
            nbrs.sort()
        return adj


class _DisjointSet:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        # keep the lower label as representative
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


def traverse(n, edges):
    """Parent-first walk of a forest.

    Each component is rooted at its lowest node and visited in depth-first
    preorder with children in ascending order; components follow the order of
    their roots. Returns ``(order, parent)`` where ``parent[root] == -1``.
    """
    adj = [[] for _ in range(n)]
    for u, v, *_ in edges:
        adj[u].append(v)
        adj[v].append(u)
    parent = [-1] * n
    seen = [False] * n
    order = []
    for root in range(n):
        if seen[root]:
            continue
        seen[root] = True
        stack = [root]
        while stack:
            node = stack.pop()
            order.append(node)
            children = sorted(c for c in adj[node] if not seen[c])
            for c in children:
                seen[c] = True
                parent[c] = node
            stack.extend(reversed(children))
    return order, parent


def _components(order, parent):
    groups = []
    for node in order:
        if parent[node] == -1:
            groups.append([node])
        else:
            groups[-1].append(node)
    return tuple(tuple(sorted(g)) for g in groups)


def _check_edges(n, edges):
    dsu = _DisjointSet(n)
    clean = []
    for u, v, rho in edges:
        u, v, rho = int(u), int(v), float(rho)
        if not (0 <= u < n and 0 <= v < n) or u == v:
            raise CyclicEdges(f"edge ({u}, {v}) is not a valid pair of distinct nodes")
        if not abs(rho) < 1.0:
            raise InvalidCorrelation(f"edge ({u}, {v}) has |rho| = {abs(rho)} >= 1")
        if not dsu.union(u, v):
            raise CyclicEdges(f"edge ({u}, {v}) closes a cycle")
        clean.append((min(u, v), max(u, v), rho))
    return clean


def _path_product_cov(n, edges, order, parent):
    rho = {}
    for u, v, r in edges:
        rho[u, v] = rho[v, u] = r
    cov = np.eye(n)
    placed = []
    for node in order:
        p = parent[node]
        if p != -1:
            # every node placed so far lies outside node's subtree
            idx = np.asarray(placed)
            row = rho[node, p] * cov[p, idx]
            cov[node, idx] = row
            cov[idx, node] = row
        placed.append(node)
    return cov


def tree_covariance(n, edges, variances=None):
    """Covariance of the Gaussian tree model with the given edge correlations.

    Entry ``(u, v)`` is the product of edge correlations on the tree path from
    ``u`` to ``v``, scaled by ``sqrt(var_u * var_v)`` when ``variances`` is
    given (unit variances otherwise).
    """
    if variances is not None:
        variances = np.asarray(variances, dtype=float)
    return np.array(_build(n, edges, variances).covariance)


def _build(n, edges, variances):
    edges = _check_edges(n, edges)
    order, parent = traverse(n, edges)
    cov = _path_product_cov(n, edges, order, parent)
    if variances is not None:
        sd = np.sqrt(variances)
        cov = cov * np.outer(sd, sd)
    cov.setflags(write=False)
    return TreeModel(
        n=n,
        edges=tuple(sorted(edges)),
        components=_components(order, parent),
        covariance=cov,
    )


def _correlations(source):
    s = np.array(source, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise NotSquare(f"expected a square matrix, got shape {s.shape}")
    s = 0.5 * (s + s.T)
    var = np.diag(s).copy()
    if np.any(var <= 0):
        raise InvalidCorrelation("non-positive variance on the diagonal")
    sd = np.sqrt(var)
    r = s / np.outer(sd, sd)
    np.fill_diagonal(r, 1.0)
    unit = bool(np.all(np.abs(var - 1.0) <= 1e-10))
    return r, (None if unit else var)


def mutual_information(rho):
    """Gaussian mutual information ``-0.5 * log(1 - rho**2)`` (nats)."""
    return -0.5 * np.log1p(-np.square(rho))


def chow_liu(source, zero_tol=DEFAULT_ZERO_TOL):
    """Maximum mutual-information spanning forest of ``source``.

    Kruskal's algorithm over all pairs with ``|rho| > zero_tol``, heaviest
    first; equal weights are taken in lexicographic ``(u, v)`` order. Pairs
    at or below ``zero_tol`` never become edges, so an (almost) block-diagonal
    source yields a forest.

    A source with non-unit diagonal is treated through its correlations and
    the returned covariance keeps its variances.
    """
    if not 0 <= zero_tol < 1:
        raise ValueError(f"zero_tol must lie in [0, 1), got {zero_tol}")
    r, var = _correlations(source)
    n = r.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    rho = r[iu, ju]
    keep = np.abs(rho) > zero_tol
    iu, ju, rho = iu[keep], ju[keep], rho[keep]
    bad = np.abs(rho) >= 1.0
    if np.any(bad):
        k = int(np.argmax(bad))
        raise InvalidCorrelation(
            f"|rho({iu[k]}, {ju[k]})| = {abs(rho[k])} >= 1; the source is singular"
        )
    weight = mutual_information(rho)
    # primary key: weight descending; then u, then v ascending
    rank = np.lexsort((ju, iu, -weight))
    dsu = _DisjointSet(n)
    edges = []
    for k in rank:
        u, v = int(iu[k]), int(ju[k])
        if dsu.union(u, v):
            edges.append((u, v, float(rho[k])))
            if len(edges) == n - 1:
                break
    return _build(n, edges, var)


def star_tree(source, center, leaves=None):
    """Star model with ``center`` joined to every node in ``leaves``.

    ``leaves`` defaults to all other nodes. Nodes left out stay isolated. The
    covariance equals the source on the center row and column, and the
    conditional covariance of the leaves given the center is diagonal.
    """
    r, var = _correlations(source)
    n = r.shape[0]
    if not 0 <= center < n:
        raise InvalidCenter(f"center {center} outside 0..{n - 1}")
    if leaves is None:
        leaves = [v for v in range(n) if v != center]
    leaves = sorted(set(int(v) for v in leaves))
    if center in leaves:
        raise InvalidCenter(f"center {center} cannot also be a leaf")
    edges = [(center, v, float(r[center, v])) for v in leaves]
    return _build(n, edges, var)


def best_star(source):
    """Star tree with the lowest KL divergence to ``source``.

    Returns ``(center, tree)``; ties go to the lowest center index.
    """
    s = np.asarray(source, dtype=float)
    best = None
    for c in range(s.shape[0]):
        tree = star_tree(s, c)
        kl = kl_gauss(s, tree.covariance)
        if best is None or kl < best[0]:
            best = (kl, c, tree)
    return best[1], best[2]


def tree_kl(source, tree):
    """KL divergence from ``source`` to the tree model."""
    return kl_gauss(source, tree.covariance)
