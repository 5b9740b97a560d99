"""
Link analysis between detected domains and their WHOIS attributes.

Builds the bipartite domain -> attribute graph, ranks it with PageRank
or HITS, and clusters bulk-registration campaigns.
"""
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from models.graph import GraphNode, LinkGraph, NodeKind, RankAlgorithm, RankResult
from models.samples import WhoisRecord
from sentinel.errors import DataError

logger = logging.getLogger(__name__)

CREATION_BUCKET_SECS = 3600
DEFAULT_DAMPING = 0.85
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100


def _attributes(record: WhoisRecord) -> List[Tuple[str, str]]:
    attrs = []
    if record.registrant_name:
        attrs.append(("registrant_name", record.registrant_name))
    if record.registrant_email:
        attrs.append(("registrant_email", record.registrant_email))
    if record.registrar:
        attrs.append(("registrar", record.registrar))
    for ns in record.name_servers:
        attrs.append(("name_server", ns))
    if record.created is not None:
        attrs.append(("creation_bucket", str(record.created // CREATION_BUCKET_SECS)))
    return attrs


def build_graph(records: Sequence[WhoisRecord]) -> LinkGraph:
    """Domain nodes take ids 0..D-1, attribute nodes follow in first-seen order."""
    if not records:
        raise DataError("at least one WHOIS record is required")

    domain_ids: Dict[str, int] = {}
    for record in records:
        domain_ids.setdefault(record.domain, len(domain_ids))
    nodes = [GraphNode(id=i, kind=NodeKind.DOMAIN, value=d) for d, i in domain_ids.items()]

    attr_ids: Dict[Tuple[str, str], int] = {}
    edges: Dict[Tuple[int, int], None] = {}
    for record in records:
        source = domain_ids[record.domain]
        for attribute, value in _attributes(record):
            key = (attribute, value)
            if key not in attr_ids:
                attr_ids[key] = len(nodes)
                nodes.append(GraphNode(id=len(nodes), kind=NodeKind.ATTRIBUTE, value=value, attribute=attribute))
            edges[(source, attr_ids[key])] = None

    graph = LinkGraph(nodes=nodes, edges=list(edges))
    logger.info(
        "Built WHOIS graph: %d domains, %d attributes, %d edges",
        len(domain_ids), len(attr_ids), len(graph.edges),
    )
    return graph


def _adjacency(graph: LinkGraph) -> sparse.csr_matrix:
    n = graph.size
    if not graph.edges:
        return sparse.csr_matrix((n, n), dtype=np.float64)
    rows, cols = zip(*graph.edges)
    data = np.ones(len(rows), dtype=np.float64)
    return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))


def pagerank(
    graph: LinkGraph,
    damping: float = DEFAULT_DAMPING,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    sweep: str = "red-black",
) -> RankResult:
    """PageRank over the symmetrized edge set.

    Solves the linear form z = 1 + d * P^T z (dangling rows left empty) and
    reports x = z / sum(z), which is the damped power-iteration fixed point
    with dangling mass spread uniformly. The default sweep updates domain
    nodes and then attribute nodes (Gauss-Seidel across the bipartition);
    ``sweep="jacobi"`` updates every node from the previous iterate.
    """
    if graph.size == 0:
        raise DataError("cannot rank an empty graph")
    if not 0.0 < damping < 1.0:
        raise DataError(f"damping must lie in (0, 1), got {damping}")
    if sweep not in ("red-black", "jacobi"):
        raise DataError(f"unknown sweep {sweep!r}")

    directed = _adjacency(graph)
    sym = (directed + directed.T).tocsr()
    sym.data[:] = 1.0
    degree = np.asarray(sym.sum(axis=1)).ravel()
    inv_degree = np.divide(1.0, degree, out=np.zeros_like(degree), where=degree > 0)

    z = np.where(degree > 0, 1.0 / (1.0 - damping), 1.0)
    x = z / z.sum()
    is_domain = np.array([node.kind == NodeKind.DOMAIN for node in graph.nodes])
    blocks = [np.flatnonzero(is_domain), np.flatnonzero(~is_domain)]
    block_rows = [sym[idx] for idx in blocks]

    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        if sweep == "jacobi":
            z = 1.0 + damping * (sym @ (z * inv_degree))
        else:
            for idx, rows in zip(blocks, block_rows):
                if idx.size:
                    z[idx] = 1.0 + damping * (rows @ (z * inv_degree))
        x_next = z / z.sum()
        delta = float(np.abs(x_next - x).sum())
        x = x_next
        if delta < tol:
            converged = True
            break

    logger.debug("PageRank finished after %d sweeps (converged=%s)", iterations, converged)
    return RankResult(
        algorithm=RankAlgorithm.PAGERANK,
        scores=x.tolist(),
        iterations=iterations,
        converged=converged,
    )


DEGENERATE_RTOL = 1e-9


def _dominant_authorities(adjacency: sparse.csr_matrix, start_hubs: np.ndarray) -> np.ndarray:
    """Authority vector the hub/authority power iteration converges to.

    The limit is the start authority vector projected onto the dominant
    eigenspace of A^T A, so it is read off a symmetric eigendecomposition
    of the Gram matrix restricted to nodes with incoming edges.
    """
    start = adjacency.T @ start_hubs
    cited = np.flatnonzero(np.asarray(adjacency.sum(axis=0)).ravel())
    block = adjacency[:, cited]
    eigenvalues, eigenvectors = np.linalg.eigh((block.T @ block).toarray())
    top = eigenvectors[:, eigenvalues >= eigenvalues[-1] * (1.0 - DEGENERATE_RTOL)]
    authorities = np.zeros_like(start)
    authorities[cited] = top @ (top.T @ start[cited])
    return authorities / np.linalg.norm(authorities)


def hits(graph: LinkGraph, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> RankResult:
    """Hubs and authorities on the directed domain -> attribute edges.

    The iteration starts from the spectral limit of the power method begun
    at uniform hubs, so it settles in a step or two even when the leading
    eigenvalues of A^T A are nearly tied.
    """
    if not graph.edges:
        raise DataError("HITS needs at least one edge")

    adjacency = _adjacency(graph)
    adjacency.data[:] = 1.0
    transposed = adjacency.T.tocsr()
    uniform = np.full(graph.size, 1.0 / np.sqrt(graph.size))
    authorities = _dominant_authorities(adjacency, uniform)
    hubs = adjacency @ authorities
    hubs /= np.linalg.norm(hubs)

    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        next_auth = transposed @ hubs
        next_auth /= np.linalg.norm(next_auth)
        next_hubs = adjacency @ next_auth
        next_hubs /= np.linalg.norm(next_hubs)
        delta = float(np.abs(next_auth - authorities).sum() + np.abs(next_hubs - hubs).sum())
        hubs, authorities = next_hubs, next_auth
        if delta < tol:
            converged = True
            break

    if not converged:
        logger.warning("HITS did not converge within %d iterations", max_iter)
    scores = [
        float(hubs[node.id]) if node.kind == NodeKind.DOMAIN else float(authorities[node.id])
        for node in graph.nodes
    ]
    return RankResult(
        algorithm=RankAlgorithm.HITS,
        scores=scores,
        hubs=hubs.tolist(),
        authorities=authorities.tolist(),
        iterations=iterations,
        converged=converged,
    )


def rank(graph: LinkGraph, algorithm: RankAlgorithm, **kwargs) -> RankResult:
    if algorithm == RankAlgorithm.PAGERANK:
        return pagerank(graph, **kwargs)
    return hits(graph, **kwargs)


def ranked(graph: LinkGraph, result: RankResult, top: Optional[int] = None) -> List[Tuple[str, str, float]]:
    """(kind, label, score) rows ordered by descending score, then node value."""
    order = sorted(graph.nodes, key=lambda node: (-result.scores[node.id], node.value, node.id))
    if top is not None:
        order = order[:top]
    return [(node.kind.value, node.label, result.scores[node.id]) for node in order]


class _DisjointSet:
    def __init__(self, items: Sequence[str]):
        self.parent = {item: item for item in items}

    def find(self, item: str) -> str:
        root = item
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[item] != root:
            self.parent[item], item = root, self.parent[item]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def campaigns(records: Sequence[WhoisRecord], window: int) -> List[List[str]]:
    """Bulk-registration clusters.

    Two domains are linked when they share a registrant email or name
    (compared case-insensitively with whitespace collapsed), or
    when they use the same registrar and were created at most `window`
    seconds apart. Clusters are the connected components of size >= 2.
    """
    if window <= 0:
        raise DataError(f"window must be positive, got {window}")

    domains = list(dict.fromkeys(record.domain for record in records))
    forest = _DisjointSet(domains)
    first_owner: Dict[Tuple[str, str], str] = {}
    by_registrar: Dict[str, List[Tuple[int, str]]] = {}

    for record in records:
        for attribute in ("registrant_email", "registrant_name"):
            value = " ".join((getattr(record, attribute) or "").split()).lower()
            if value:
                owner = first_owner.setdefault((attribute, value), record.domain)
                forest.union(owner, record.domain)
        if record.registrar and record.created is not None:
            by_registrar.setdefault(record.registrar, []).append((record.created, record.domain))

    for registrations in by_registrar.values():
        registrations.sort()
        for (t0, d0), (t1, d1) in zip(registrations, registrations[1:]):
            if t1 - t0 <= window:
                forest.union(d0, d1)

    clusters: Dict[str, List[str]] = {}
    for domain in domains:
        clusters.setdefault(forest.find(domain), []).append(domain)
    result = sorted(sorted(members) for members in clusters.values() if len(members) > 1)
    logger.info("Found %d campaign clusters among %d domains", len(result), len(domains))
    return result


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def to_dot(graph: LinkGraph, result: Optional[RankResult] = None) -> str:
    """Graphviz digraph text; scores are appended to labels when given."""
    lines = ["digraph whois {"]
    for node in graph.nodes:
        label = _dot_escape(node.label)
        if result is not None:
            label = f"{label}\\n{result.scores[node.id]:.6f}"
        shape = "box" if node.kind == NodeKind.DOMAIN else "ellipse"
        lines.append(f'  n{node.id} [label="{label}", shape={shape}];')
    for source, target in graph.edges:
        lines.append(f"  n{source} -> n{target};")
    lines.append("}")
    return "\n".join(lines) + "\n"
