"""Tropical curves with edge lengths in a free monoid, and their PL functions.

Lengths live in N^r over named generators.  The distance-from-core function
lambda, radial alignment, subdivisions at a radius, tail functions, face
contractions (killing generators), and the multidegree of the twisted
dualizing sheaf are all computed here.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Collection, Iterable, Sequence

from .graphs import MarkedGraph, rational_tails, subgraph_genus


@dataclass(frozen=True)
class MonoidElement:
    gens: tuple[str, ...]
    coeffs: tuple[int, ...]

    def __post_init__(self):
        if len(self.gens) != len(self.coeffs):
            raise ValueError("generator/coefficient length mismatch")
        if any(c < 0 for c in self.coeffs):
            raise ValueError(f"negative coefficient in {self.coeffs}")

    def _check(self, other: "MonoidElement") -> None:
        if self.gens != other.gens:
            raise ValueError(f"mixed monoids: {self.gens} vs {other.gens}")

    def __add__(self, other: "MonoidElement") -> "MonoidElement":
        self._check(other)
        return MonoidElement(
            self.gens, tuple(a + b for a, b in zip(self.coeffs, other.coeffs))
        )

    def __sub__(self, other: "MonoidElement") -> "MonoidElement":
        self._check(other)
        diff = tuple(a - b for a, b in zip(self.coeffs, other.coeffs))
        if any(c < 0 for c in diff):
            raise ValueError(f"{other} does not divide {self}")
        return MonoidElement(self.gens, diff)

    def __mul__(self, k: int) -> "MonoidElement":
        return MonoidElement(self.gens, tuple(k * c for c in self.coeffs))

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def leq(self, other: "MonoidElement") -> bool:
        self._check(other)
        return all(a <= b for a, b in zip(self.coeffs, other.coeffs))

    def comparable(self, other: "MonoidElement") -> bool:
        return self.leq(other) or other.leq(self)

    def project(self, kept: tuple[str, ...]) -> "MonoidElement":
        index = {g: i for i, g in enumerate(self.gens)}
        return MonoidElement(kept, tuple(self.coeffs[index[g]] for g in kept))

    def as_dict(self) -> dict[str, int]:
        return {g: c for g, c in zip(self.gens, self.coeffs) if c}

    def __repr__(self):
        terms = [
            (f"{c}*{g}" if c != 1 else g)
            for g, c in zip(self.gens, self.coeffs)
            if c
        ]
        return " + ".join(terms) if terms else "0"


def zero(gens: tuple[str, ...]) -> MonoidElement:
    return MonoidElement(gens, (0,) * len(gens))


def generator(gens: tuple[str, ...], name: str) -> MonoidElement:
    return MonoidElement(gens, tuple(1 if g == name else 0 for g in gens))


@dataclass(frozen=True)
class TropicalCurve:
    graph: MarkedGraph
    gens: tuple[str, ...]
    lengths: tuple[MonoidElement, ...]

    def __post_init__(self):
        if len(self.lengths) != len(self.graph.edges):
            raise ValueError("one length per edge required")
        for ell in self.lengths:
            if ell.gens != self.gens:
                raise ValueError("edge length in the wrong monoid")
            if ell.is_zero():
                raise ValueError("edge lengths must be nonzero")

    def genus(self) -> int:
        return self.graph.total_genus()

    def to_json(self) -> dict:
        return {
            "generators": list(self.gens),
            "graph": self.graph.to_json(),
            "lengths": [list(ell.coeffs) for ell in self.lengths],
        }

    @staticmethod
    def from_json(data: dict) -> "TropicalCurve":
        gens = tuple(data["generators"])
        graph = MarkedGraph.from_json(data["graph"])
        lengths = tuple(MonoidElement(gens, tuple(c)) for c in data["lengths"])
        return TropicalCurve(graph, gens, lengths)


@dataclass(frozen=True)
class PLFunction:
    """Vertex values in the monoid plus a nonnegative slope on each leg."""

    curve: TropicalCurve
    values: tuple[MonoidElement, ...]
    leg_slopes: tuple[int, ...]

    def __post_init__(self):
        g = self.curve.graph
        if len(self.values) != g.num_vertices or len(self.leg_slopes) != g.n_marks:
            raise ValueError("values/slopes do not match the curve")
        if any(s < 0 for s in self.leg_slopes):
            raise ValueError("leg slopes must be nonnegative")
        for i, (u, v) in enumerate(g.edges):
            edge_slope(self, i, u, v)  # raises when not an integer multiple

    def value(self, v: int) -> MonoidElement:
        return self.values[v]

    def to_json(self) -> dict:
        return {
            "values": [list(m.coeffs) for m in self.values],
            "leg_slopes": list(self.leg_slopes),
        }


def edge_slope(f: PLFunction, edge_index: int, from_v: int, to_v: int) -> int:
    """Integer t with f(to) - f(from) = t * length(edge), in the group hull."""
    ell = f.curve.lengths[edge_index]
    diff = [
        b - a for a, b in zip(f.values[from_v].coeffs, f.values[to_v].coeffs)
    ]
    pivot = next((i for i, c in enumerate(ell.coeffs) if c), None)
    if pivot is None:
        raise ValueError("zero edge length")
    if diff[pivot] % ell.coeffs[pivot]:
        raise ValueError(f"value difference not a multiple on edge {edge_index}")
    t = diff[pivot] // ell.coeffs[pivot]
    if any(d != t * c for d, c in zip(diff, ell.coeffs)):
        raise ValueError(f"value difference not a multiple on edge {edge_index}")
    return t


def zero_function(curve: TropicalCurve) -> PLFunction:
    z = zero(curve.gens)
    return PLFunction(
        curve, (z,) * curve.graph.num_vertices, (0,) * curve.graph.n_marks
    )


def build_curve(
    genus: Sequence[int],
    edge_length_pairs: Sequence[tuple[tuple[int, int], MonoidElement]],
    legs: Sequence[int],
    gens: tuple[str, ...],
) -> tuple[TropicalCurve, list[int]]:
    """Construct a tropical curve keeping edges and lengths aligned.

    MarkedGraph normalizes and sorts its edge list, so edges and lengths are
    sorted jointly here first.  Returns the curve and, for each input pair
    index, its edge index in the finished curve.
    """
    normalized = [
        (tuple(sorted(e)), ell, i)
        for i, (e, ell) in enumerate(edge_length_pairs)
    ]
    normalized.sort(key=lambda item: (item[0], item[1].coeffs))
    graph = MarkedGraph(
        tuple(genus), tuple(e for e, _, _ in normalized), tuple(legs)
    )
    if graph.edges != tuple(e for e, _, _ in normalized):
        raise AssertionError("edge order drifted during construction")
    curve = TropicalCurve(graph, gens, tuple(ell for _, ell, _ in normalized))
    placement = [0] * len(normalized)
    for pos, (_, _, original) in enumerate(normalized):
        placement[original] = pos
    return curve, placement


def core(curve: TropicalCurve) -> frozenset[int]:
    """Iteratively strip genus-0 leaves; what remains carries the genus."""
    g = curve.graph
    alive = set(range(g.num_vertices))
    edges = list(g.edges)
    while True:
        degree = {v: 0 for v in alive}
        for u, v in edges:
            if u in alive and v in alive:
                degree[u] += 1
                degree[v] += 1
        prune = [
            v for v in alive if g.genus[v] == 0 and degree[v] == 1
        ]
        if not prune or len(alive) == 1:
            return frozenset(alive)
        for v in prune:
            alive.remove(v)
        edges = [(u, v) for u, v in edges if u in alive and v in alive]


def lambda_function(curve: TropicalCurve) -> PLFunction:
    """Distance from the core, slope 1 on every leg (genus one only)."""
    if curve.genus() != 1:
        raise ValueError("lambda is defined for genus-one curves")
    g = curve.graph
    c = core(curve)
    values: list[MonoidElement | None] = [None] * g.num_vertices
    for v in c:
        values[v] = zero(curve.gens)
    frontier = sorted(c)
    adj = g.adjacency()
    while frontier:
        nxt = []
        for v in frontier:
            for w, ei in adj[v]:
                if values[w] is None:
                    values[w] = values[v] + curve.lengths[ei]
                    nxt.append(w)
        frontier = nxt
    assert all(val is not None for val in values)
    return PLFunction(curve, tuple(values), (1,) * g.n_marks)


def is_radially_aligned(curve: TropicalCurve) -> bool:
    lam = lambda_function(curve)
    for a, b in itertools.combinations(lam.values, 2):
        if not a.comparable(b):
            return False
    return True


def radii(curve: TropicalCurve) -> list[MonoidElement]:
    """Distinct nonzero lambda values in increasing order."""
    lam = lambda_function(curve)
    distinct: list[MonoidElement] = []
    for val in lam.values:
        if not val.is_zero() and val not in distinct:
            distinct.append(val)
    for a, b in itertools.combinations(distinct, 2):
        if not a.comparable(b):
            raise ValueError(f"radii {a} and {b} are incomparable")
    distinct.sort(key=lambda m: sum(m.coeffs))
    for a, b in zip(distinct, distinct[1:]):
        assert a.leq(b)
    return distinct


@dataclass(frozen=True)
class Subdivision:
    """A curve subdivided at the locus lambda = rho.

    Original vertices keep their ids; subdivision vertices are appended.
    ``vertex_origin`` records, for each new vertex, the edge ("edge", index)
    or leg ("leg", mark) of the original curve it was inserted on.
    """

    original: TropicalCurve
    rho: MonoidElement
    curve: TropicalCurve
    lam: PLFunction
    vertex_origin: dict[int, tuple[str, int]] = field(compare=False)

    @property
    def new_vertices(self) -> list[int]:
        return sorted(self.vertex_origin)

    def delta(self) -> frozenset[int]:
        return frozenset(
            v
            for v, val in enumerate(self.lam.values)
            if val.leq(self.rho) and val != self.rho
        )

    def delta_bar(self) -> frozenset[int]:
        return frozenset(
            v for v, val in enumerate(self.lam.values) if val.leq(self.rho)
        )


def subdivide_at(curve: TropicalCurve, rho: MonoidElement) -> Subdivision:
    """Insert valence-2 vertices wherever lambda = rho crosses the interior
    of an edge or leg; no vertex is added where one already sits at rho."""
    lam = lambda_function(curve)
    for val in lam.values:
        if not val.comparable(rho):
            raise ValueError(f"rho {rho} incomparable with lambda value {val}")
    g = curve.graph
    genus = list(g.genus)
    legs = list(g.legs)
    new_edges: list[tuple[int, int]] = []
    new_lengths: list[MonoidElement] = []
    values = list(lam.values)
    origin: dict[int, tuple[str, int]] = {}

    def strictly_below(a: MonoidElement, b: MonoidElement) -> bool:
        return a.leq(b) and a != b

    pairs: list[tuple[tuple[int, int], MonoidElement]] = []
    for ei, (u, v) in enumerate(g.edges):
        lo, hi = (u, v) if lam.values[u].leq(lam.values[v]) else (v, u)
        if strictly_below(lam.values[lo], rho) and strictly_below(rho, lam.values[hi]):
            x = len(genus)
            genus.append(0)
            values.append(rho)
            origin[x] = ("edge", ei)
            pairs.append(((lo, x), rho - lam.values[lo]))
            pairs.append(((x, hi), lam.values[hi] - rho))
        else:
            pairs.append(((u, v), curve.lengths[ei]))
    for mark_index in range(g.n_marks):
        r = legs[mark_index]
        if strictly_below(values[r], rho):
            y = len(genus)
            genus.append(0)
            values.append(rho)
            origin[y] = ("leg", mark_index + 1)
            pairs.append(((r, y), rho - values[r]))
            legs[mark_index] = y

    refined, _ = build_curve(genus, pairs, legs, curve.gens)
    lam_refined = PLFunction(refined, tuple(values), (1,) * g.n_marks)
    return Subdivision(
        original=curve,
        rho=rho,
        curve=refined,
        lam=lam_refined,
        vertex_origin=origin,
    )


def stable_rational_tails(curve: TropicalCurve) -> list[frozenset[int]]:
    """Vertex sets of the rational tails all of whose vertices have valence
    (edges plus legs) at least three in the ambient curve."""
    g = curve.graph
    out = []
    for t in rational_tails(g):
        if all(g.special_count(v) >= 3 for v in t.vertices):
            out.append(t.vertices)
    return out


def _leading_edge(g: MarkedGraph, verts: frozenset[int]) -> int:
    crossing = [
        ei for ei, (u, v) in enumerate(g.edges) if (u in verts) != (v in verts)
    ]
    if len(crossing) != 1:
        raise ValueError(f"{sorted(verts)} does not have edge-valence one")
    return crossing[0]


def tail_function(
    curve: TropicalCurve, tails: Sequence[Iterable[int]]
) -> PLFunction:
    """The PL function with slope (marks beyond the edge) - 1 into each tail.

    ``tails`` lists the vertex sets of pairwise disjoint stable rational
    tails; the function vanishes elsewhere and on all legs.
    """
    g = curve.graph
    tail_sets = [frozenset(t) for t in tails]
    seen: set[int] = set()
    for t in tail_sets:
        if t & seen:
            raise ValueError("tails must be pairwise disjoint")
        seen |= t
        if t not in stable_rational_tails(curve):
            raise ValueError(f"{sorted(t)} is not a stable rational tail")
    if len(seen) >= g.num_vertices:
        raise ValueError("tails must not exhaust the curve")

    values: list[MonoidElement] = [zero(curve.gens)] * g.num_vertices
    adj = g.adjacency()
    for t in tail_sets:
        lead = _leading_edge(g, t)
        u, v = g.edges[lead]
        root_inside = v if v in t else u

        def marks_beyond(inside: frozenset[int]) -> int:
            return sum(1 for host in g.legs if host in inside)

        def descend(vertex: int, entering_edge: int, upstream: MonoidElement):
            below = _component_beyond(g, t, vertex, entering_edge)
            n_e = marks_beyond(below)
            val = upstream + (n_e - 1) * curve.lengths[entering_edge]
            values[vertex] = val
            for w, ei in adj[vertex]:
                if ei != entering_edge and w in t and values[w].is_zero():
                    descend(w, ei, val)

        descend(root_inside, lead, zero(curve.gens))
    return PLFunction(curve, tuple(values), (0,) * g.n_marks)


def _component_beyond(
    g: MarkedGraph, tail: frozenset[int], start: int, blocked_edge: int
) -> frozenset[int]:
    """Vertices of ``tail`` reachable from ``start`` without the blocked edge."""
    seen = {start}
    frontier = [start]
    adj = g.adjacency()
    while frontier:
        v = frontier.pop()
        for w, ei in adj[v]:
            if ei != blocked_edge and w in tail and w not in seen:
                seen.add(w)
                frontier.append(w)
    return frozenset(seen)


def support(f: PLFunction) -> frozenset[int]:
    return frozenset(
        v for v, val in enumerate(f.values) if not val.is_zero()
    )


def tail_decomposition(f: PLFunction) -> list[frozenset[int]] | None:
    """The disjoint stable rational tails supporting ``f`` when it is a tail
    function, else None."""
    if any(s != 0 for s in f.leg_slopes):
        return None
    sup = support(f)
    g = f.curve.graph
    comps: list[frozenset[int]] = []
    remaining = set(sup)
    adj = g.adjacency()
    while remaining:
        v = remaining.pop()
        comp = {v}
        frontier = [v]
        while frontier:
            w = frontier.pop()
            for x, _ in adj[w]:
                if x in sup and x not in comp:
                    comp.add(x)
                    frontier.append(x)
        remaining -= comp
        comps.append(frozenset(comp))
    comps.sort(key=sorted)
    stable = stable_rational_tails(f.curve)
    if any(c not in stable for c in comps):
        return None
    if sup and len(sup) >= g.num_vertices:
        return None
    try:
        candidate = tail_function(f.curve, comps)
    except ValueError:
        return None
    if candidate != f:
        return None
    return comps


@dataclass(frozen=True)
class FaceContraction:
    """Generator-killing contraction from ``source`` onto ``target``.

    Edges whose projected length vanishes are contracted; ``vertex_map``
    sends source vertices onto target vertices, ``edge_map`` is None on
    contracted edges.
    """

    source: TropicalCurve
    target: TropicalCurve
    killed: frozenset[str]
    vertex_map: tuple[int, ...]
    edge_map: tuple[int | None, ...]

    def project(self, elem: MonoidElement) -> MonoidElement:
        return elem.project(self.target.gens)

    def preimage(self, target_vertex: int) -> frozenset[int]:
        return frozenset(
            v for v, w in enumerate(self.vertex_map) if w == target_vertex
        )


def face_contract(
    curve: TropicalCurve, kill: Collection[str]
) -> FaceContraction:
    """Set the named generators to zero and contract the collapsed edges."""
    killset = frozenset(kill)
    unknown = killset - set(curve.gens)
    if unknown:
        raise ValueError(f"unknown generators {sorted(unknown)}")
    kept = tuple(g for g in curve.gens if g not in killset)
    g = curve.graph
    projected = [ell.project(kept) for ell in curve.lengths]

    parent = list(range(g.num_vertices))
    extra = [0] * g.num_vertices

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for ei, (u, v) in enumerate(g.edges):
        if projected[ei].is_zero():
            ru, rv = find(u), find(v)
            if ru == rv:
                extra[ru] += 1
            else:
                parent[rv] = ru
                extra[ru] += extra[rv]
    reps = sorted({find(v) for v in range(g.num_vertices)})
    new_id = {r: i for i, r in enumerate(reps)}
    genus = [0] * len(reps)
    for v in range(g.num_vertices):
        genus[new_id[find(v)]] += g.genus[v]
    for r in reps:
        genus[new_id[r]] += extra[r]
    vertex_map = tuple(new_id[find(v)] for v in range(g.num_vertices))

    pairs: list[tuple[tuple[int, int], MonoidElement]] = []
    kept_source: list[int] = []
    for ei, (u, v) in enumerate(g.edges):
        if not projected[ei].is_zero():
            pairs.append(((vertex_map[u], vertex_map[v]), projected[ei]))
            kept_source.append(ei)
    legs = tuple(vertex_map[v] for v in g.legs)
    target, placement = build_curve(genus, pairs, legs, kept)
    edge_map_final: list[int | None] = [None] * len(g.edges)
    for pair_index, ei in enumerate(kept_source):
        edge_map_final[ei] = placement[pair_index]
    return FaceContraction(
        source=curve,
        target=target,
        killed=killset,
        vertex_map=vertex_map,
        edge_map=tuple(edge_map_final),
    )


def pullback_tail_function(
    contraction: FaceContraction, mu: PLFunction
) -> PLFunction:
    """Transport a tail function through a face contraction.

    ``mu`` lives on the contraction source (the curve with the full monoid);
    the result lives on the target and is supported exactly on the vertices
    whose whole preimage lies in the support of ``mu``.
    """
    if mu.curve != contraction.source:
        raise ValueError("function does not live on the contraction source")
    if tail_decomposition(mu) is None:
        raise ValueError("not a tail function")
    sup = support(mu)
    t_graph = contraction.target.graph
    target_support = [
        v
        for v in range(t_graph.num_vertices)
        if contraction.preimage(v) <= sup
    ]
    comps: list[frozenset[int]] = []
    remaining = set(target_support)
    adj = t_graph.adjacency()
    while remaining:
        v = remaining.pop()
        comp = {v}
        frontier = [v]
        while frontier:
            w = frontier.pop()
            for x, _ in adj[w]:
                if x in target_support and x not in comp:
                    comp.add(x)
                    frontier.append(x)
        remaining -= set(comp)
        comps.append(frozenset(comp))
    comps.sort(key=sorted)
    return tail_function(contraction.target, comps)


def multidegree(curve: TropicalCurve, f: PLFunction) -> tuple[int, ...]:
    """Fiberwise degree of omega(marks) twisted by O(f), per vertex:
    2g(v) - 2 + (edge ends at v) + (legs at v) + outgoing slopes of f."""
    if f.curve != curve:
        raise ValueError("function does not live on this curve")
    g = curve.graph
    degrees = []
    for v in range(g.num_vertices):
        deg = 2 * g.genus[v] - 2 + g.valence(v) + len(g.legs_at(v))
        for ei, (a, b) in enumerate(g.edges):
            if a == v and b == v:
                continue  # loop: both outgoing slopes vanish
            if a == v:
                deg += edge_slope(f, ei, a, b)
            elif b == v:
                deg += edge_slope(f, ei, b, a)
        for i, host in enumerate(g.legs):
            if host == v:
                deg += f.leg_slopes[i]
        degrees.append(deg)
    return tuple(degrees)
