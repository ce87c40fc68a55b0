"""Weighted n-marked dual graphs: stability, tails, contractions, Z_K.

Vertices carry genera, edges form a multiset of unordered pairs (self-loops
allowed), and each mark 1..n sits on exactly one vertex as a leg.  The total
genus is the vertex genus sum plus the first Betti number.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from .complexes import SimplicialComplex, is_at_least_triparted


@dataclass(frozen=True)
class MarkedGraph:
    genus: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]
    legs: tuple[int, ...]

    def __post_init__(self):
        nv = len(self.genus)
        if nv < 1:
            raise ValueError("graph needs at least one vertex")
        norm = tuple(sorted(tuple(sorted(e)) for e in self.edges))
        object.__setattr__(self, "edges", norm)
        object.__setattr__(self, "genus", tuple(int(g) for g in self.genus))
        object.__setattr__(self, "legs", tuple(int(v) for v in self.legs))
        for u, v in self.edges:
            if not (0 <= u < nv and 0 <= v < nv):
                raise ValueError(f"edge ({u},{v}) out of range")
        for v in self.legs:
            if not 0 <= v < nv:
                raise ValueError(f"leg vertex {v} out of range")
        if any(g < 0 for g in self.genus):
            raise ValueError("negative genus")
        if not self._connected():
            raise ValueError("graph not connected")

    def _connected(self) -> bool:
        nv = len(self.genus)
        seen = {0}
        frontier = [0]
        adj = self.adjacency()
        while frontier:
            v = frontier.pop()
            for w, _ in adj[v]:
                if w not in seen:
                    seen.add(w)
                    frontier.append(w)
        return len(seen) == nv

    @property
    def num_vertices(self) -> int:
        return len(self.genus)

    @property
    def n_marks(self) -> int:
        return len(self.legs)

    def adjacency(self) -> list[list[tuple[int, int]]]:
        """adjacency()[v] = list of (neighbor, edge index); loops appear twice."""
        adj: list[list[tuple[int, int]]] = [[] for _ in self.genus]
        for i, (u, v) in enumerate(self.edges):
            adj[u].append((v, i))
            adj[v].append((u, i))
        return adj

    def betti(self) -> int:
        return len(self.edges) - self.num_vertices + 1

    def total_genus(self) -> int:
        return sum(self.genus) + self.betti()

    def valence(self, v: int) -> int:
        return sum((u == v) + (w == v) for u, w in self.edges)

    def legs_at(self, v: int) -> tuple[int, ...]:
        return tuple(i + 1 for i, host in enumerate(self.legs) if host == v)

    def special_count(self, v: int) -> int:
        return self.valence(v) + len(self.legs_at(v))

    def canonical_form(self) -> tuple:
        """Minimum over vertex relabelings; equal iff marked-isomorphic."""
        nv = self.num_vertices
        best = None
        for perm in itertools.permutations(range(nv)):
            genus = [0] * nv
            for old, g in enumerate(self.genus):
                genus[perm[old]] = g
            edges = tuple(sorted(
                tuple(sorted((perm[u], perm[v]))) for u, v in self.edges
            ))
            legs = tuple(perm[v] for v in self.legs)
            enc = (tuple(genus), edges, legs)
            if best is None or enc < best:
                best = enc
        return best

    def to_json(self) -> dict:
        return {
            "vertices": [
                {"genus": g, "legs": list(self.legs_at(v))}
                for v, g in enumerate(self.genus)
            ],
            "edges": [list(e) for e in self.edges],
        }

    @staticmethod
    def from_json(data: dict) -> "MarkedGraph":
        genus = tuple(int(v["genus"]) for v in data["vertices"])
        legs_map: dict[int, int] = {}
        for vid, v in enumerate(data["vertices"]):
            for mark in v.get("legs", ()):
                if mark in legs_map:
                    raise ValueError(f"mark {mark} appears twice")
                legs_map[int(mark)] = vid
        n = len(legs_map)
        if sorted(legs_map) != list(range(1, n + 1)):
            raise ValueError(f"marks must be exactly 1..{n}")
        legs = tuple(legs_map[i] for i in range(1, n + 1))
        edges = tuple(tuple(e) for e in data["edges"])
        return MarkedGraph(genus, edges, legs)


@dataclass(frozen=True)
class Tail:
    """Connected subgraph of edge-valence 1, rooted at its leading edge."""

    vertices: frozenset[int]
    leading_edge: int
    marks: frozenset[int]


def is_stable(g: MarkedGraph) -> bool:
    """Genus-0 vertices need 3 special points, genus-1 vertices need 1."""
    for v, gv in enumerate(g.genus):
        count = g.special_count(v)
        if gv == 0 and count < 3:
            return False
        if gv == 1 and count < 1:
            return False
    return True


def _reachable(g: MarkedGraph, start: int, skip_edge: int) -> frozenset[int]:
    seen = {start}
    frontier = [start]
    adj = g.adjacency()
    while frontier:
        v = frontier.pop()
        for w, ei in adj[v]:
            if ei != skip_edge and w not in seen:
                seen.add(w)
                frontier.append(w)
    return frozenset(seen)


def subgraph_genus(g: MarkedGraph, vertices: Iterable[int]) -> int:
    vs = set(vertices)
    internal = sum(1 for u, v in g.edges if u in vs and v in vs)
    return sum(g.genus[v] for v in vs) + internal - len(vs) + 1


def tails(g: MarkedGraph) -> list[Tail]:
    """All tails (edge-valence-1 connected subgraphs), both sides of each bridge."""
    out = []
    for ei, (u, v) in enumerate(g.edges):
        if u == v:
            continue
        side_u = _reachable(g, u, ei)
        if v in side_u:
            continue
        side_v = _reachable(g, v, ei)
        for side in (side_u, side_v):
            marks = frozenset(
                i + 1 for i, host in enumerate(g.legs) if host in side
            )
            out.append(Tail(vertices=side, leading_edge=ei, marks=marks))
    out.sort(key=lambda t: (sorted(t.vertices), t.leading_edge))
    return out


def rational_tails(g: MarkedGraph) -> list[Tail]:
    return [t for t in tails(g) if subgraph_genus(g, t.vertices) == 0]


def contract_edge_with_map(
    g: MarkedGraph, edge_index: int
) -> tuple[MarkedGraph, tuple[int, ...]]:
    """Contract one edge; returns the new graph and the old->new vertex map.

    Merging sums genera; contracting a self-loop instead bumps the genus of
    its vertex by one, so the total genus is preserved either way.
    """
    if not 0 <= edge_index < len(g.edges):
        raise ValueError(f"no edge with index {edge_index}")
    u, v = g.edges[edge_index]
    rest = [e for i, e in enumerate(g.edges) if i != edge_index]
    if u == v:
        genus = list(g.genus)
        genus[u] += 1
        vmap = tuple(range(g.num_vertices))
        return MarkedGraph(tuple(genus), tuple(rest), g.legs), vmap
    keep, drop = (u, v) if u < v else (v, u)

    def remap(w: int) -> int:
        if w == drop:
            return keep
        return w - 1 if w > drop else w

    genus = [gv for i, gv in enumerate(g.genus) if i != drop]
    genus[remap(keep)] += g.genus[drop]
    edges = tuple((remap(a), remap(b)) for a, b in rest)
    legs = tuple(remap(w) for w in g.legs)
    vmap = tuple(remap(w) for w in range(g.num_vertices))
    return MarkedGraph(tuple(genus), edges, legs), vmap


def contract_edge(g: MarkedGraph, edge_index: int) -> MarkedGraph:
    return contract_edge_with_map(g, edge_index)[0]


def _guard(g: MarkedGraph, cx: SimplicialComplex) -> None:
    if g.n_marks != cx.n:
        raise ValueError(f"graph has {g.n_marks} marks, complex is on [{cx.n}]")
    if g.total_genus() == 0 and not is_at_least_triparted(cx):
        raise ValueError("genus 0 requires an at least triparted complex")


def z_k(g: MarkedGraph, cx: SimplicialComplex) -> frozenset[int]:
    """Vertices of all rational tails whose mark set is a face of ``cx``."""
    _guard(g, cx)
    out: set[int] = set()
    for t in rational_tails(g):
        if cx.has_face(t.marks):
            out |= t.vertices
    return frozenset(out)


def z_k_components(
    g: MarkedGraph, cx: SimplicialComplex
) -> list[tuple[frozenset[int], int]]:
    """Connected components of z_k with their unique leading edges."""
    z = z_k(g, cx)
    seen: set[int] = set()
    adj = g.adjacency()
    comps = []
    for v in sorted(z):
        if v in seen:
            continue
        comp = {v}
        frontier = [v]
        while frontier:
            w = frontier.pop()
            for x, _ in adj[w]:
                if x in z and x not in comp:
                    comp.add(x)
                    frontier.append(x)
        seen |= comp
        leading = [
            ei for ei, (a, b) in enumerate(g.edges)
            if (a in comp) != (b in comp)
        ]
        if len(leading) != 1:
            raise RuntimeError(f"z_k component {sorted(comp)} is not a tail")
        comps.append((frozenset(comp), leading[0]))
    return comps


def rho_k(g: MarkedGraph, cx: SimplicialComplex):
    """Contract every z_k component to a collided smooth point; see curves.

    The output is a nodal curve model whose collision groups are the mark
    sets of the contracted components; it is checked to be K-stable.
    """
    from .curves import CurveModel, Singularity, MarkedPoint, is_k_stable

    comps = z_k_components(g, cx)
    z = frozenset().union(*(c for c, _ in comps)) if comps else frozenset()
    if len(z) == g.num_vertices:
        raise RuntimeError("z_k covers the whole graph")
    retained = [v for v in range(g.num_vertices) if v not in z]
    new_id = {v: i for i, v in enumerate(retained)}
    components = tuple(g.genus[v] for v in retained)
    sings = tuple(
        Singularity(genus=0, branches=(new_id[u], new_id[v]))
        for u, v in g.edges
        if u in new_id and v in new_id
    )
    points = []
    for v in retained:
        for mark in g.legs_at(v):
            points.append(MarkedPoint(component=new_id[v], marks=(mark,)))
    for comp, leading in comps:
        u, v = g.edges[leading]
        host = u if u in new_id else v
        marks = tuple(sorted(
            i + 1 for i, w in enumerate(g.legs) if w in comp
        ))
        points.append(MarkedPoint(component=new_id[host], marks=marks))
    model = CurveModel(
        components=components,
        singularities=sings,
        points=tuple(sorted(points, key=lambda p: (p.component, p.marks))),
    )
    report = is_k_stable(model, cx)
    if not report.ok:
        raise RuntimeError(f"rho_k output not K-stable: {report.violations}")
    return model


@lru_cache(maxsize=None)
def enumerate_stable_graphs(g: int, n: int) -> tuple[MarkedGraph, ...]:
    """All stable graphs of genus g with marks 1..n, one per isomorphism class.

    Brute force over vertex counts up to 2g-2+n (each vertex contributes at
    least 1 to the degree of the log canonical), with canonical-form
    deduplication.  Intended scale: (0, n<=6) and (1, n<=4).
    """
    if g < 0 or n < 0 or (g == 0 and n < 3) or (g == 1 and n < 1):
        raise ValueError(f"no stable graphs for (g, n) = ({g}, {n})")
    max_v = max(1, 2 * g - 2 + n)
    found: dict[tuple, MarkedGraph] = {}
    for nv in range(1, max_v + 1):
        pairs = [(i, j) for i in range(nv) for j in range(i, nv)]
        for gvec in itertools.product(range(g + 1), repeat=nv):
            b1 = g - sum(gvec)
            if b1 < 0:
                continue
            ne = b1 + nv - 1
            if ne < 0:
                continue
            for emul in itertools.combinations_with_replacement(pairs, ne):
                if not _edges_connect(nv, emul):
                    continue
                for legassign in itertools.product(range(nv), repeat=n):
                    graph = MarkedGraph(gvec, emul, legassign)
                    if not is_stable(graph):
                        continue
                    key = graph.canonical_form()
                    if key not in found:
                        found[key] = graph
    return tuple(found[k] for k in sorted(found))


def _edges_connect(nv: int, edges: Sequence[tuple[int, int]]) -> bool:
    if nv == 1:
        return True
    seen = {0}
    frontier = [0]
    adj: list[list[int]] = [[] for _ in range(nv)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    while frontier:
        v = frontier.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                frontier.append(w)
    return len(seen) == nv
