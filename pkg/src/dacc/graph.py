"""Leader-follower digraphs: distance partition, robustness and misbehavior checks.

An edge ``(j, i)`` means agent ``i`` receives information from agent ``j``.
Node identifiers are opaque strings; insertion order is preserved everywhere
so that matrices built from a graph have a stable row order.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

DEFAULT_ENUMERATION_CAP = 20


class GraphError(ValueError):
    pass


class UnreachableFollower(GraphError):
    def __init__(self, node: str):
        super().__init__(f"follower {node!r} is not reachable from any leader")
        self.node = node


class EmptySet(GraphError):
    pass


class TooLarge(GraphError):
    pass


class EdgeNotFound(GraphError):
    pass


class EdgeExists(GraphError):
    pass


@dataclass(frozen=True)
class LevelPartition:
    levels: tuple[frozenset[str], ...]
    distance: dict[str, int] = field(compare=False)

    @property
    def depth(self) -> int:
        return len(self.levels)

    def level(self, n: int) -> frozenset[str]:
        """Followers at leader-distance exactly ``n`` (1-based); empty outside 1..h."""
        if 1 <= n <= self.depth:
            return self.levels[n - 1]
        return frozenset()


class LeaderFollowerGraph:
    """Directed leader-follower communication graph.

    Construction validates the invariants: disjoint leader/follower sets, no
    self-loops, every follower has an in-neighbor and is reachable from a
    leader.
    """

    def __init__(self, leaders: Iterable[str], followers: Iterable[str],
                 edges: Iterable[tuple[str, str]]):
        self.leaders: tuple[str, ...] = tuple(dict.fromkeys(str(x) for x in leaders))
        self.followers: tuple[str, ...] = tuple(dict.fromkeys(str(x) for x in followers))
        overlap = set(self.leaders) & set(self.followers)
        if overlap:
            raise GraphError(f"nodes are both leader and follower: {sorted(overlap)}")
        if not self.leaders:
            raise GraphError("at least one leader is required")
        self.node_ids: tuple[str, ...] = self.leaders + self.followers
        self.index = {n: k for k, n in enumerate(self.node_ids)}

        self._in: dict[str, list[str]] = {n: [] for n in self.node_ids}
        self._out: dict[str, list[str]] = {n: [] for n in self.node_ids}
        seen: set[tuple[str, str]] = set()
        for j, i in edges:
            j, i = str(j), str(i)
            if j not in self.index or i not in self.index:
                raise GraphError(f"edge ({j}, {i}) references an unknown node")
            if j == i:
                raise GraphError(f"self-loop on {i!r}")
            if (j, i) in seen:
                continue
            seen.add((j, i))
            self._in[i].append(j)
            self._out[j].append(i)
        self.edges: frozenset[tuple[str, str]] = frozenset(seen)
        for i in self.followers:
            if not self._in[i]:
                raise GraphError(f"follower {i!r} has no incoming edge")
        self.partition = partition_by_distance(self)

    def in_neighbors(self, i: str) -> tuple[str, ...]:
        # sorted by node order, not by edge insertion order
        return tuple(sorted(self._in[i], key=self.index.__getitem__))

    def out_neighbors(self, j: str) -> tuple[str, ...]:
        return tuple(sorted(self._out[j], key=self.index.__getitem__))

    def in_degree(self, i: str) -> int:
        return len(self._in[i])

    @property
    def depth(self) -> int:
        return self.partition.depth

    @property
    def d_max(self) -> int:
        """Maximum in-degree over all agents, leader edges included."""
        return max(self.in_degree(n) for n in self.node_ids)

    def effective_degree(self, i: str) -> int:
        """In-neighbors inside the set that Assumption-1 style counting looks at.

        Leaders for level-1 followers, the previous level for deeper ones.
        """
        n = self.partition.distance[i]
        pool = set(self.leaders) if n == 1 else self.partition.level(n - 1)
        return sum(1 for j in self._in[i] if j in pool)

    @property
    def effective_d_max(self) -> int:
        return max(self.effective_degree(i) for i in self.followers)

    def is_leader(self, n: str) -> bool:
        return n in self.leaders

    def adjacency(self) -> np.ndarray:
        """0/1 matrix ``M[i, j] = 1`` iff ``(j, i)`` is an edge, in ``node_ids`` order."""
        m = np.zeros((len(self.node_ids), len(self.node_ids)))
        for j, i in self.edges:
            m[self.index[i], self.index[j]] = 1.0
        return m

    def with_edges(self, edges: Iterable[tuple[str, str]]) -> "LeaderFollowerGraph":
        return LeaderFollowerGraph(self.leaders, self.followers, edges)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LeaderFollowerGraph):
            return NotImplemented
        return (self.leaders == other.leaders and set(self.followers) == set(other.followers)
                and self.edges == other.edges)

    def __repr__(self) -> str:
        return (f"LeaderFollowerGraph(leaders={len(self.leaders)}, "
                f"followers={len(self.followers)}, edges={len(self.edges)})")


def partition_by_distance(g: LeaderFollowerGraph) -> LevelPartition:
    """Multi-source BFS from every leader; level n holds followers at distance n."""
    dist: dict[str, int] = {l: 0 for l in g.leaders}
    queue = deque(g.leaders)
    while queue:
        j = queue.popleft()
        for i in g._out[j]:
            if i not in dist:
                dist[i] = dist[j] + 1
                queue.append(i)
    for i in g.followers:
        if i not in dist:
            raise UnreachableFollower(i)
    follower_dist = {i: dist[i] for i in g.followers}
    depth = max(follower_dist.values(), default=0)
    levels = tuple(frozenset(i for i, d in follower_dist.items() if d == n)
                   for n in range(1, depth + 1))
    return LevelPartition(levels, follower_dist)


def is_r_reachable(g: LeaderFollowerGraph, s: Iterable[str], r: int) -> bool:
    s = set(s)
    if not s:
        raise EmptySet("r-reachability is defined for nonempty sets only")
    unknown = s - set(g.node_ids)
    if unknown:
        raise GraphError(f"unknown nodes {sorted(unknown)}")
    return any(sum(1 for j in g._in[i] if j not in s) >= r for i in s)


def robustness_candidates(g: LeaderFollowerGraph, p: LevelPartition | None = None) -> list[str]:
    p = p or g.partition
    v1 = p.level(1)
    return [i for i in g.followers if i not in v1]


def is_r_robust(g: LeaderFollowerGraph, p: LevelPartition | None = None, r: int = 1,
                cap: int = DEFAULT_ENUMERATION_CAP) -> bool:
    """Exact r-robustness check by enumerating every candidate subset.

    The candidates are the followers outside level 1; the enumeration is
    vectorised over bitmasks and refuses to run above ``cap`` candidates.
    """
    p = p or g.partition
    if len(p.level(1)) < r:
        return False
    cand = robustness_candidates(g, p)
    n = len(cand)
    if n == 0:
        return True
    if n > cap:
        raise TooLarge(f"{n} candidate nodes exceed the enumeration cap of {cap}")
    pos = {c: b for b, c in enumerate(cand)}
    masks = np.arange(1, 1 << n, dtype=np.int64)
    reachable = np.zeros(masks.shape, dtype=bool)
    for b, i in enumerate(cand):
        fixed = sum(1 for j in g._in[i] if j not in pos)
        inside = [pos[j] for j in g._in[i] if j in pos]
        count = np.full(masks.shape, fixed, dtype=np.int64)
        for q in inside:
            count += 1 - ((masks >> q) & 1)
        member = ((masks >> b) & 1).astype(bool)
        reachable |= member & (count >= r)
    return bool(reachable.all())


def check_assumption1(g: LeaderFollowerGraph, p: LevelPartition | None, gg: int, f: int) -> bool:
    """Each level-1 follower has g+f leader in-neighbors; each level-n follower
    has g+f in-neighbors on level n-1."""
    if gg < 1 or f < 0:
        raise ValueError("need g >= 1 and f >= 0")
    p = p or g.partition
    if set().union(*p.levels) != set(g.followers):
        raise GraphError("partition does not match the graph's followers")
    need = gg + f
    leaders = set(g.leaders)
    for n in range(1, p.depth + 1):
        pool = leaders if n == 1 else p.level(n - 1)
        for i in p.level(n):
            if sum(1 for j in g._in[i] if j in pool) < need:
                return False
    return True


@dataclass(frozen=True)
class MisbehaviorTopology:
    m1: frozenset[str] = frozenset()
    m2: frozenset[str] = frozenset()
    f_bound: int = 0

    def __post_init__(self):
        object.__setattr__(self, "m1", frozenset(self.m1))
        object.__setattr__(self, "m2", frozenset(self.m2))
        if self.f_bound < 0:
            raise ValueError("f_bound must be nonnegative")

    @property
    def misbehaving(self) -> frozenset[str]:
        return self.m1 | self.m2

    def normal_followers(self, g: LeaderFollowerGraph) -> tuple[str, ...]:
        bad = self.misbehaving
        return tuple(i for i in g.followers if i not in bad)

    def normal_leaders(self, g: LeaderFollowerGraph) -> tuple[str, ...]:
        bad = self.misbehaving
        return tuple(l for l in g.leaders if l not in bad)

    def validate(self, g: LeaderFollowerGraph) -> None:
        if not self.m1 <= set(g.followers):
            raise GraphError(f"cut-off set must contain followers only: {sorted(self.m1 - set(g.followers))}")
        if not self.m2 <= set(g.node_ids):
            raise GraphError(f"unknown misbehaving nodes {sorted(self.m2 - set(g.node_ids))}")


def misbehaving_in_count(g: LeaderFollowerGraph, m: MisbehaviorTopology, i: str,
                         include_leaders: bool = False) -> int:
    bad = m.misbehaving
    return sum(1 for j in g._in[i] if j in bad and (include_leaders or j not in g.leaders))


def is_f_local(g: LeaderFollowerGraph, m: MisbehaviorTopology, f: int,
               include_leaders: bool = False) -> bool:
    """Every normal follower has at most ``f`` misbehaving in-neighbors.

    By default only misbehaving *followers* are counted, which is how the
    IEEE33 scenario is classified (2-local, then 3-local) even though level-1
    agents additionally see corrupted tertiary channels. Pass
    ``include_leaders=True`` for the strict count.
    """
    m.validate(g)
    return all(misbehaving_in_count(g, m, i, include_leaders) <= f
               for i in m.normal_followers(g))


def build_virtual_graph(g: LeaderFollowerGraph,
                        edge_swaps: Iterable[tuple[tuple[str, str], tuple[str, str]]]
                        ) -> LeaderFollowerGraph:
    """Apply balanced edge swaps ``(remove, add)`` and return the rewired graph."""
    edges = set(g.edges)
    for remove, add in edge_swaps:
        remove = (str(remove[0]), str(remove[1]))
        add = (str(add[0]), str(add[1]))
        if remove not in edges:
            raise EdgeNotFound(f"edge {remove} is not in the graph")
        edges.discard(remove)
        if add in edges:
            raise EdgeExists(f"edge {add} already exists")
        edges.add(add)
    return g.with_edges(sorted(edges, key=lambda e: (g.index[e[1]], g.index[e[0]])))


# -- edge-list text format ---------------------------------------------------

def read_graph(path: str | Path) -> LeaderFollowerGraph:
    return parse_graph(Path(path).read_text())


def parse_graph(text: str) -> LeaderFollowerGraph:
    leaders: list[str] | None = None
    followers: list[str] | None = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition(":")
        if sep and key.strip() in ("leaders", "followers"):
            ids = rest.split()
            if key.strip() == "leaders":
                leaders = ids
            else:
                followers = ids
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphError(f"line {lineno}: expected 'j i', got {raw!r}")
        edges.append((parts[0], parts[1]))
    if leaders is None or followers is None:
        raise GraphError("graph file needs 'leaders:' and 'followers:' header lines")
    return LeaderFollowerGraph(leaders, followers, edges)


def format_graph(g: LeaderFollowerGraph) -> str:
    lines = ["leaders: " + " ".join(g.leaders), "followers: " + " ".join(g.followers)]
    for j, i in sorted(g.edges, key=lambda e: (g.index[e[1]], g.index[e[0]])):
        lines.append(f"{j} {i}")
    return "\n".join(lines) + "\n"


def write_graph(g: LeaderFollowerGraph, path: str | Path) -> None:
    Path(path).write_text(format_graph(g))


# -- the IEEE33 communication network -----------------------------------------

IEEE33_LEVELS = (("19", "11", "7", "28", "22"),
                 ("20", "13", "8", "30", "23"),
                 ("21", "15", "9", "32", "24"),
                 ("17", "10"))
IEEE33_CHANNELS = ("L1", "L2", "L3", "L4", "L5")


def ieee33_graph() -> LeaderFollowerGraph:
    """Five tertiary channels feed a fully connected first level; every deeper
    DES listens to all five DESs one level up."""
    edges = []
    first = IEEE33_LEVELS[0]
    for i in first:
        edges += [(l, i) for l in IEEE33_CHANNELS]
        edges += [(j, i) for j in first if j != i]
    for prev, cur in zip(IEEE33_LEVELS, IEEE33_LEVELS[1:]):
        for i in cur:
            edges += [(j, i) for j in prev]
    followers = [i for level in IEEE33_LEVELS for i in level]
    return LeaderFollowerGraph(IEEE33_CHANNELS, followers, edges)
