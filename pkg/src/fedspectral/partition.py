"""Edge distribution across simulated clients with controlled overlap.

Every shard spans the full node universe (nodes with no local edges are
simply isolated there); each global edge is replicated onto r distinct
clients chosen uniformly at random, r = max(1, round(overlap * C)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError, ParseError
from .graph import (
    Graph,
    adjacency_from_edges,
    degrees_from_edges,
    normalized_laplacian_from_adjacency,
)

__all__ = [
    "ClientShard",
    "replication_count",
    "distribute_edges",
    "write_shard",
    "read_shard",
]


@dataclass(frozen=True)
class ClientShard:
    """One client's private edge subset over the full node universe."""

    client_id: int
    num_nodes: int
    edges: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "weights", weights)
        if self.num_nodes <= 0:
            raise ContractError("shard must span a non-empty node universe")
        if len(edges) != len(weights):
            raise ContractError("edges and weights length mismatch")
        if len(edges) and (edges.min() < 0 or edges.max() >= self.num_nodes):
            raise ContractError("shard edge endpoint outside node universe")

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        return degrees_from_edges(self.num_nodes, self.edges, self.weights)

    def adjacency(self) -> np.ndarray:
        return adjacency_from_edges(self.num_nodes, self.edges, self.weights)

    def normalized_laplacian(self) -> np.ndarray:
        return normalized_laplacian_from_adjacency(self.adjacency())


def replication_count(overlap: float, num_clients: int) -> int:
    """Map an overlap fraction to a per-edge replication count.

    r = max(1, round(overlap * C)) with ties rounding up; always within
    1..C for overlap in (0, 1].
    """
    if not 0.0 < overlap <= 1.0:
        raise ConfigError(f"overlap must be in (0, 1], got {overlap}")
    return max(1, int(math.floor(overlap * num_clients + 0.5)))


def distribute_edges(
    g: Graph,
    num_clients: int,
    overlap: float,
    seed: int,
    *,
    replication: int | None = None,
) -> list[ClientShard]:
    """Assign every edge to exactly r distinct clients chosen uniformly.

    The per-edge client subsets are sampled independently (no balancing);
    the union of all shards is the global edge set, and the output is
    deterministic for a fixed seed. ``replication`` overrides the rounding
    of overlap * C when given.
    """
    if num_clients < 1:
        raise ConfigError(f"num_clients must be >= 1, got {num_clients}")
    r = replication_count(overlap, num_clients) if replication is None else replication
    if not 1 <= r <= num_clients:
        raise ConfigError(f"replication must be in 1..{num_clients}, got {r}")

    rng = np.random.default_rng(seed)
    num_edges = g.num_edges
    member = np.zeros((num_edges, num_clients), dtype=bool)
    if num_edges:
        if r == num_clients:
            member[:] = True
        else:
            # the r smallest of C iid uniform keys form a uniform r-subset;
            # stable argsort keeps the draw reproducible across versions
            keys = rng.random((num_edges, num_clients))
            chosen = np.argsort(keys, axis=1, kind="stable")[:, :r]
            member[np.arange(num_edges)[:, None], chosen] = True

    return [
        ClientShard(
            client_id=c,
            num_nodes=g.num_nodes,
            edges=g.edges[member[:, c]],
            weights=g.weights[member[:, c]],
        )
        for c in range(num_clients)
    ]


def write_shard(shard: ClientShard, path, seed: int | None = None) -> None:
    """Write a shard as SNAP edge-list text with a provenance header.

    The '# nodes:' header preserves the full node universe, which the bare
    edge list cannot represent for isolated nodes.
    """
    lines = [f"# client_id: {shard.client_id}"]
    if seed is not None:
        lines.append(f"# seed: {seed}")
    lines.append(f"# nodes: {shard.num_nodes}")
    lines.extend(f"{u} {v}" for u, v in shard.edges)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_shard(path) -> ClientShard:
    """Read a shard file written by write_shard."""
    client_id = None
    num_nodes = None
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("client_id:"):
                    client_id = int(body.split(":", 1)[1])
                elif body.startswith("nodes:"):
                    num_nodes = int(body.split(":", 1)[1])
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(f"line {lineno}: expected two integer tokens")
            try:
                pairs.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise ParseError(f"line {lineno}: non-integer token") from None
    if client_id is None or num_nodes is None:
        raise ParseError("shard file is missing its client_id/nodes header")
    edges = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    return ClientShard(
        client_id=client_id,
        num_nodes=num_nodes,
        edges=edges,
        weights=np.ones(len(edges), dtype=np.float64),
    )
