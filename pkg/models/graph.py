# models/graph.py
from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, Field


class NodeKind(str, Enum):
    DOMAIN = "domain"
    ATTRIBUTE = "attribute"


class GraphNode(BaseModel):
    id: int
    kind: NodeKind
    value: str
    attribute: Optional[str] = Field(
        None, description="WHOIS field for attribute nodes, e.g. registrant_email."
    )

    @property
    def label(self) -> str:
        if self.kind == NodeKind.DOMAIN:
            return self.value
        return f"{self.attribute}={self.value}"


class LinkGraph(BaseModel):
    """Bipartite domain -> WHOIS attribute graph with dense node ids."""
    nodes: List[GraphNode] = Field(default_factory=list)
    edges: List[Tuple[int, int]] = Field(
        default_factory=list, description="Directed (domain node, attribute node) pairs."
    )

    @property
    def size(self) -> int:
        return len(self.nodes)


class RankAlgorithm(str, Enum):
    PAGERANK = "pagerank"
    HITS = "hits"


class RankResult(BaseModel):
    algorithm: RankAlgorithm
    scores: List[float] = Field(
        ..., description="Per-node score; for HITS, hub score on domains and authority on attributes."
    )
    hubs: Optional[List[float]] = None
    authorities: Optional[List[float]] = None
    iterations: int
    converged: bool
