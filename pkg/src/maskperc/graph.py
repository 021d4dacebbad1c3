"""Two-type configuration-model contact networks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .degree import DegreeDistribution, sampler_args

MASKED = 1
UNMASKED = 2


@dataclass(frozen=True)
class MaskModelParams:
    """Mask fraction ``m`` and the directional transmissibilities.

    ``T[i][j]`` is the probability that an infected type-``i`` node infects a
    susceptible type-``j`` neighbour (type 1 = masked, type 2 = unmasked).
    """

    m: float
    T11: float
    T12: float
    T21: float
    T22: float
    # Set only when built with :meth:`factored`; kept for output rows.
    T_base: float | None = None
    T_mask1: float | None = None
    T_mask2: float | None = None

    def __post_init__(self) -> None:
        for name in ("m", "T11", "T12", "T21", "T22"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and 0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0,1], got {v!r}")

    @classmethod
    def factored(cls, m: float, T: float, T_mask1: float, T_mask2: float,
                 T21: float | None = None) -> "MaskModelParams":
        """Baseline ``T`` scaled by inward (``T_mask1``) and outward (``T_mask2``) factors.

        ``T11 = T_mask1*T_mask2*T``, ``T12 = T_mask2*T``, ``T22 = T``. The
        unmasked-to-masked entry defaults to ``T_mask1*T`` (the susceptible's
        mask only), which makes ``T diag(m, 1-m)`` rank one; pass ``T21`` to
        override it.
        """
        for name, v in (("T", T), ("T_mask1", T_mask1), ("T_mask2", T_mask2)):
            if not (math.isfinite(v) and 0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0,1], got {v!r}")
        t21 = T_mask1 * T if T21 is None else T21
        return cls(m=m, T11=T_mask1 * T_mask2 * T, T12=T_mask2 * T, T21=t21, T22=T,
                   T_base=T, T_mask1=T_mask1, T_mask2=T_mask2)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.T11, self.T12], [self.T21, self.T22]], dtype=float)

    def as_dict(self) -> dict[str, float | None]:
        return {"m": self.m, "T11": self.T11, "T12": self.T12, "T21": self.T21, "T22": self.T22,
                "T": self.T_base, "T_mask1": self.T_mask1, "T_mask2": self.T_mask2}


@dataclass(frozen=True, eq=False)
class ContactNetwork:
    """An undirected multigraph on nodes ``0..n-1`` with mask labels.

    ``edges`` holds one row per edge (self-loops and parallel edges allowed);
    ``offsets``/``neighbors`` is the CSR adjacency and ``slot_edge`` maps each
    adjacency slot back to its edge id. ``node_type`` is 1 (masked) or 2.
    """

    n: int
    edges: np.ndarray
    offsets: np.ndarray
    neighbors: np.ndarray
    slot_edge: np.ndarray
    node_type: np.ndarray
    _counts: tuple[int, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        masked = int(np.count_nonzero(self.node_type == MASKED))
        object.__setattr__(self, "_counts", (masked, self.n - masked))

    @classmethod
    def from_edges(cls, n: int, edges: np.ndarray, node_type: np.ndarray) -> "ContactNetwork":
        edges = np.asarray(edges, dtype=np.int32).reshape(-1, 2)
        node_type = np.asarray(node_type, dtype=np.int8)
        if node_type.shape != (n,):
            raise ValueError(f"node_type must have length {n}")
        if not np.all((node_type == MASKED) | (node_type == UNMASKED)):
            raise ValueError("node types must be 1 (masked) or 2 (unmasked)")
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            raise ValueError("edge endpoint out of range")
        eu = np.ascontiguousarray(edges[:, 0])
        ev = np.ascontiguousarray(edges[:, 1])
        offsets, nbrs, slot_edge = _kernels.csr(n, eu, ev)
        return cls(n=n, edges=edges, offsets=offsets, neighbors=nbrs, slot_edge=slot_edge,
                   node_type=node_type)

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    def degrees(self) -> np.ndarray:
        return np.diff(self.offsets)

    def simplified(self) -> "ContactNetwork":
        """Erased configuration model: drop self-loops and collapse parallel edges."""
        e = self.edges[self.edges[:, 0] != self.edges[:, 1]]
        e = np.sort(e, axis=1)
        e = np.unique(e, axis=0)
        return ContactNetwork.from_edges(self.n, e, self.node_type)

    def same_as(self, other: "ContactNetwork") -> bool:
        return (self.n == other.n and np.array_equal(self.edges, other.edges)
                and np.array_equal(self.node_type, other.node_type))


def build_network(dist: DegreeDistribution, n: int, m: float, rng_seed: int,
                  simple: bool = False) -> ContactNetwork:
    """Configuration-model network with i.i.d. Bernoulli(m) mask labels.

    Degrees come from :func:`maskperc.degree.sample_degrees` semantics (odd
    totals repaired), stubs are matched uniformly at random and the resulting
    self-loops and multi-edges are kept unless ``simple`` is set.
    """
    n = int(n)
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 0.0 <= m <= 1.0:
        raise ValueError(f"m must lie in [0,1], got {m!r}")
    cdf, support = sampler_args(dist, n)
    types, eu, ev = _kernels.build(np.random.default_rng(rng_seed), cdf, support, n, float(m))
    offsets, nbrs, slot_edge = _kernels.csr(n, eu, ev)
    net = ContactNetwork(n=n, edges=np.column_stack((eu, ev)), offsets=offsets, neighbors=nbrs,
                         slot_edge=slot_edge, node_type=types)
    return net.simplified() if simple else net


def type_counts(net: ContactNetwork) -> tuple[int, int]:
    """``(n_masked, n_unmasked)``."""
    return net._counts


def save_edgelist(net: ContactNetwork, path: str | Path) -> None:
    """Write ``# n``, a ``types`` block (one label per line) and ``u v`` edge lines."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# maskperc network\nn {net.n}\ntypes\n")
        np.savetxt(fh, net.node_type, fmt="%d")
        fh.write(f"edges {net.n_edges}\n")
        np.savetxt(fh, net.edges, fmt="%d")


def load_edgelist(path: str | Path) -> ContactNetwork:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    try:
        key, n = lines[0].split()
        if key != "n" or lines[1] != "types":
            raise ValueError
        n = int(n)
        types = np.array([int(x) for x in lines[2:2 + n]], dtype=np.int8)
        key, n_edges = lines[2 + n].split()
        if key != "edges":
            raise ValueError
        body = lines[3 + n:3 + n + int(n_edges)]
        if len(body) != int(n_edges):
            raise ValueError
        edges = np.array([[int(a) for a in ln.split()] for ln in body], dtype=np.int32).reshape(-1, 2)
    except (ValueError, IndexError):
        raise ValueError(f"{path}: not a maskperc edge-list file") from None
    return ContactNetwork.from_edges(n, edges, types)
