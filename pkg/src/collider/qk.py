"""Layer trees, contraction data, and the (Q,K) dictionary in genus one.

A contraction datum on a radially aligned genus-one curve is a radius rho
together with a tail function on the subdivision at lambda = rho whose
support avoids the inner locus.  Universal data over all layer trees
correspond to pairs (Q, K) of a Q-set and a non-overlapping complex; the
combinatorial contraction collapses the inner locus to one elliptic
singularity and each tail to a collided smooth point.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

from .complexes import SimplicialComplex, do_not_overlap, mask_of
from .curves import CurveModel, MarkedPoint, Singularity
from .graphs import MarkedGraph, is_stable
from .partitions import (
    Partition,
    QSet,
    all_partitions,
    canonical,
    discrete_partition,
    format_partition,
    num_parts,
    partition_with_block,
    qset,
    refines,
    validate_qset,
)
from .tropical import (
    FaceContraction,
    MonoidElement,
    PLFunction,
    Subdivision,
    TropicalCurve,
    build_curve,
    face_contract,
    is_radially_aligned,
    lambda_function,
    pullback_tail_function,
    radii,
    stable_rational_tails,
    subdivide_at,
    support,
    tail_function,
    zero,
)

__all__ = [
    "ContractionDatum",
    "chain_to_layer_tree",
    "check_layer_relations",
    "contract",
    "datum_to_qk",
    "do_not_overlap",
    "enumerate_contraction_data",
    "limit_model",
    "one_layer_tree",
    "part_at_radius",
    "universal_datum",
    "validate_chain",
    "validate_qset",
]

CLOSED, OPEN = "closed", "open"


def validate_chain(n: int, chain: Sequence[Partition]) -> None:
    """A chain is strictly increasing under refinement, nothing discrete."""
    disc = discrete_partition(n)
    for p in chain:
        if p == disc:
            raise ValueError("chain partitions must not be discrete")
        if sorted(i for b in p for i in b) != list(range(1, n + 1)):
            raise ValueError(f"{p} is not a partition of [1..{n}]")
    for a, b in zip(chain, chain[1:]):
        if a == b or not refines(b, a):
            raise ValueError(
                f"chain must properly refine: {format_partition(a)} "
                f"then {format_partition(b)}"
            )


@lru_cache(maxsize=None)
def chain_to_layer_tree(n: int, chain: tuple[Partition, ...]) -> TropicalCurve:
    """The unique layer tree with the given partition type.

    Vertex 0 is the genus-one core.  A part of the i-th partition gets a
    vertex at radius rho_i when it splits at the next layer (large parts
    split at the final layer); its edge runs to the nearest branching
    ancestor, and every mark hangs off its deepest branching part.
    """
    validate_chain(n, chain)
    k = len(chain)
    gens = tuple(f"e{i}" for i in range(1, k + 1))
    extended = list(chain) + [discrete_partition(n)]

    def splits(i: int, part: tuple[int, ...]) -> bool:
        return part not in extended[i]  # i is 0-based index of the next layer

    vertex_of: dict[tuple[int, Partition | tuple[int, ...]], int] = {}
    genus = [1]
    vertex_layer = {0: 0}
    for i in range(1, k + 1):
        for part in chain[i - 1]:
            if splits(i, part):
                vertex_of[(i, part)] = len(genus)
                vertex_layer[len(genus)] = i
                genus.append(0)

    def radius(i: int) -> MonoidElement:
        return MonoidElement(gens, tuple(1 if j < i else 0 for j in range(k)))

    pairs = []
    for (i, part), vid in vertex_of.items():
        ancestor = 0
        layer = 0
        for j in range(i - 1, 0, -1):
            container = next(b for b in chain[j - 1] if set(part) <= set(b))
            if (j, container) in vertex_of:
                ancestor = vertex_of[(j, container)]
                layer = j
                break
        pairs.append(((ancestor, vid), radius(i) - radius(layer)))

    legs = []
    for mark in range(1, n + 1):
        host = 0
        for i in range(k, 0, -1):
            container = next(b for b in chain[i - 1] if mark in b)
            if (i, container) in vertex_of:
                host = vertex_of[(i, container)]
                break
        legs.append(host)

    curve, _ = build_curve(genus, pairs, legs, gens)
    if not is_stable(curve.graph):
        raise AssertionError("layer tree is not stable")
    if not is_radially_aligned(curve):
        raise AssertionError("layer tree is not radially aligned")
    for i, p in enumerate(chain, start=1):
        if part_at_radius(curve, radius(i)) != p:
            raise AssertionError(f"layer {i} partition mismatch")
    return curve


def one_layer_tree(n: int, p: Partition) -> TropicalCurve:
    return chain_to_layer_tree(n, (p,))


def part_at_radius(curve: TropicalCurve, rho: MonoidElement) -> Partition:
    """Partition of the marks by connected components of the locus where
    lambda >= rho, after subdividing there."""
    if rho not in radii(curve):
        raise ValueError(f"{rho} is not a radius of the curve")
    sub = subdivide_at(curve, rho)
    g = sub.curve.graph
    keep = [
        v
        for v in range(g.num_vertices)
        if rho.leq(sub.lam.values[v])
    ]
    keepset = set(keep)
    parent = {v: v for v in keep}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for u, v in g.edges:
        if u in keepset and v in keepset:
            parent[find(u)] = find(v)
    blocks: dict[int, set[int]] = {}
    for mark_index, host in enumerate(g.legs):
        blocks.setdefault(find(host), set()).add(mark_index + 1)
    return canonical(blocks.values())


@dataclass(frozen=True)
class ContractionDatum:
    """A radius with a compatible tail function on the subdivision there."""

    subdivision: Subdivision
    mu: PLFunction
    mode: str = CLOSED

    @property
    def rho(self) -> MonoidElement:
        return self.subdivision.rho

    @property
    def curve(self) -> TropicalCurve:
        return self.subdivision.original

    def mu_support(self) -> frozenset[int]:
        return support(self.mu)

    def support_marks(self) -> list[frozenset[int]]:
        """Mark sets of the connected components of the support."""
        g = self.subdivision.curve.graph
        comps = _components_within(g, self.mu_support())
        return sorted(
            (frozenset(
                i + 1 for i, host in enumerate(g.legs) if host in comp
            ) for comp in comps),
            key=sorted,
        )

    def is_trivial(self) -> bool:
        return self.rho.is_zero() and self.mu_support() == frozenset()

    def to_json(self) -> dict:
        return {
            "rho": list(self.rho.coeffs),
            "mu_support": sorted(self.mu_support()),
            "mode": self.mode,
        }


def _components_within(
    g: MarkedGraph, vertices: frozenset[int]
) -> list[frozenset[int]]:
    adj = g.adjacency()
    remaining = set(vertices)
    comps = []
    while remaining:
        v = remaining.pop()
        comp = {v}
        frontier = [v]
        while frontier:
            w = frontier.pop()
            for x, _ in adj[w]:
                if x in vertices and x not in comp:
                    comp.add(x)
                    frontier.append(x)
        remaining -= comp
        comps.append(frozenset(comp))
    comps.sort(key=sorted)
    return comps


def validate_datum(datum: ContractionDatum) -> None:
    """Mode condition plus the never-contract-everything guard."""
    sub = datum.subdivision
    sup = datum.mu_support()
    if datum.mode == CLOSED:
        if sup & sub.delta_bar():
            raise ValueError("support meets the closed inner locus")
    elif datum.mode == OPEN:
        if sup & sub.delta():
            raise ValueError("support meets the open inner locus")
    else:
        raise ValueError(f"unknown mode {datum.mode!r}")
    if len(sup | sub.delta()) >= sub.curve.graph.num_vertices:
        raise ValueError("datum would contract the whole curve")


def _datum(sub: Subdivision, tails: Sequence[frozenset[int]], mode: str) -> ContractionDatum:
    mu = tail_function(sub.curve, tails)
    datum = ContractionDatum(subdivision=sub, mu=mu, mode=mode)
    validate_datum(datum)
    return datum


def enumerate_contraction_data(
    curve: TropicalCurve, mode: str = CLOSED
) -> list[ContractionDatum]:
    """All valid (rho, mu): rho over 0 and the radii, mu over unions of
    pairwise disjoint stable rational tails allowed by the mode."""
    _require_basic(curve)
    out = []
    for rho in [zero(curve.gens)] + radii(curve):
        sub = subdivide_at(curve, rho)
        locus = sub.delta_bar() if mode == CLOSED else sub.delta()
        candidates = [
            t for t in stable_rational_tails(sub.curve) if not (t & locus)
        ]
        supports: dict[frozenset[int], list[frozenset[int]]] = {}
        for k in range(len(candidates) + 1):
            for combo in itertools.combinations(candidates, k):
                if any(
                    a & b for a, b in itertools.combinations(combo, 2)
                ):
                    continue
                union = frozenset().union(*combo) if combo else frozenset()
                comps = _components_within(sub.curve.graph, union)
                supports.setdefault(union, comps)
        for union in sorted(supports, key=sorted):
            out.append(_datum(sub, supports[union], mode))
    return out


def _require_basic(curve: TropicalCurve) -> None:
    if curve.genus() != 1:
        raise ValueError("contraction data live on genus-one curves")
    if not is_stable(curve.graph):
        raise ValueError("curve must be stable")
    if not is_radially_aligned(curve):
        raise ValueError("curve must be radially aligned")


def universal_datum(
    q: QSet,
    cx: SimplicialComplex,
    curve: TropicalCurve,
    mode: str = CLOSED,
) -> ContractionDatum:
    """The contraction datum a non-overlapping (Q, K) imposes on a curve:
    the largest radius whose partition lies in Q, and the tail function on
    every admissible tail whose marks form a face."""
    if not do_not_overlap(q, cx):
        raise ValueError("Q and the complex overlap")
    _require_basic(curve)
    rho = zero(curve.gens)
    for r in radii(curve):
        if part_at_radius(curve, r) in q.partitions:
            rho = r
    sub = subdivide_at(curve, rho)
    locus = sub.delta_bar() if mode == CLOSED else sub.delta()
    g = sub.curve.graph
    union: set[int] = set()
    for t in stable_rational_tails(sub.curve):
        if t & locus:
            continue
        marks = frozenset(i + 1 for i, host in enumerate(g.legs) if host in t)
        if cx.has_face(mask_of(marks)):
            union |= t
    comps = _components_within(g, frozenset(union))
    return _datum(sub, comps, mode)


def mode_dependent_groups(
    q: QSet, cx: SimplicialComplex, curve: TropicalCurve
) -> list[frozenset[int]]:
    """Mark groups whose collision status differs between the two support
    conventions: face-marked stable tails touching the lambda = rho layer
    but not the open locus below it."""
    datum = universal_datum(q, cx, curve, mode=CLOSED)
    sub = datum.subdivision
    g = sub.curve.graph
    out = []
    for t in stable_rational_tails(sub.curve):
        if t & sub.delta():
            continue
        if not t & sub.delta_bar():
            continue
        marks = frozenset(i + 1 for i, host in enumerate(g.legs) if host in t)
        if cx.has_face(mask_of(marks)):
            out.append(marks)
    return sorted(out, key=sorted)


def contract(curve: TropicalCurve, datum: ContractionDatum) -> CurveModel:
    """Combinatorial shadow of the contraction: the locus below the radius
    collapses to one elliptic singularity with a branch per component of
    the outer locus, and each support component collapses to a collided
    smooth point on its attaching component."""
    if datum.curve != curve:
        raise ValueError("datum does not live on this curve")
    if datum.mode != CLOSED:
        raise ValueError("contraction is defined for the closed mode only")
    validate_datum(datum)
    sub = datum.subdivision
    g = sub.curve.graph
    delta = sub.delta()
    sup = datum.mu_support()
    retained = [
        v for v in range(g.num_vertices) if v not in delta and v not in sup
    ]
    new_id = {v: i for i, v in enumerate(retained)}
    components = tuple(g.genus[v] for v in retained)

    sings: list[Singularity] = []
    if not datum.rho.is_zero():
        if not delta:
            raise AssertionError("positive radius with empty inner locus")
        branches = []
        for u, v in g.edges:
            if (u in delta) != (v in delta):
                outside = v if u in delta else u
                branches.append(new_id[outside])
        sings.append(Singularity(genus=1, branches=tuple(sorted(branches))))
    for u, v in g.edges:
        if u in new_id and v in new_id:
            sings.append(Singularity(genus=0, branches=(new_id[u], new_id[v])))

    points: list[MarkedPoint] = []
    for v in retained:
        for mark in g.legs_at(v):
            points.append(MarkedPoint(component=new_id[v], marks=(mark,)))
    for comp in _components_within(g, sup):
        crossing = [
            (u, v) for u, v in g.edges if (u in comp) != (v in comp)
        ]
        if len(crossing) != 1:
            raise AssertionError("support component is not a tail")
        u, v = crossing[0]
        host = u if u not in comp else v
        marks = tuple(sorted(
            i + 1 for i, hostv in enumerate(g.legs) if hostv in comp
        ))
        points.append(MarkedPoint(component=new_id[host], marks=marks))

    model = CurveModel(
        components=components,
        singularities=tuple(sings),
        points=tuple(points),
    )
    if model.arithmetic_genus() != 1:
        raise AssertionError("contraction lost the genus")
    return model


# ---------------------------------------------------------------------------
# Dictionary between universal data and (Q, K)


def _one_layer_case(datum: ContractionDatum) -> tuple[bool, set[Partition]]:
    """(radius is nonzero, large parts carrying the tail function)."""
    parts = {tuple(sorted(m)) for m in datum.support_marks()}
    return (not datum.rho.is_zero(), parts)


def datum_to_qk(
    n: int, data: Mapping[Partition, ContractionDatum]
) -> tuple[QSet, SimplicialComplex]:
    """Reassemble (Q, K) from contraction data on all 1-layer trees.

    Q holds the partitions whose tree got a nonzero radius; K holds the
    subsets whose one-big-part tree carries a nonzero tail function.  The
    two-layer compatibility relations are checked first and a violation is
    reported with its chain.
    """
    wanted = [p for p in all_partitions(n) if p != discrete_partition(n)]
    missing = [p for p in wanted if p not in data]
    if missing:
        raise ValueError(f"missing data for {format_partition(missing[0])}")
    for p, datum in data.items():
        if datum.curve != one_layer_tree(n, p):
            raise ValueError(
                f"datum for {format_partition(p)} lives on the wrong tree"
            )
        validate_datum(datum)

    cases = {p: _one_layer_case(data[p]) for p in wanted}
    for p1, p2 in itertools.permutations(wanted, 2):
        if not (refines(p2, p1) and p1 != p2):
            continue
        nonzero1, tails1 = cases[p1]
        nonzero2, tails2 = cases[p2]
        chain = f"{format_partition(p1)} < {format_partition(p2)}"
        if nonzero2 and not nonzero1:
            raise ValueError(
                f"incompatible data on the 2-layer tree of {chain}: "
                "refinement has a radius but coarsening does not"
            )
        for s1 in tails1:
            for b2 in p2:
                if len(b2) >= 2 and set(b2) <= set(s1) and b2 not in tails2:
                    raise ValueError(
                        f"incompatible data on the 2-layer tree of {chain}: "
                        f"tail over {s1} does not restrict to {b2}"
                    )
        for s2 in tails2:
            if s2 in p1 and s2 not in tails1:
                raise ValueError(
                    f"incompatible data on the 2-layer tree of {chain}: "
                    f"tail over unrefined part {s2} missing downstairs"
                )

    q = qset(n, (p for p in wanted if cases[p][0]))
    faces = []
    for size in range(2, n + 1):
        for combo in itertools.combinations(range(1, n + 1), size):
            p = partition_with_block(combo, n)
            if p == discrete_partition(n):
                continue
            if combo in cases[p][1]:
                faces.append(combo)
    from .complexes import from_faces

    cx = from_faces(n, faces)
    if sorted(cx.faces_as_sets()) != sorted(faces):
        raise ValueError("tail data are not downward closed")
    if not do_not_overlap(q, cx):
        raise AssertionError("reassembled (Q, K) overlap")
    return q, cx


def universal_data_on_one_layer_trees(
    q: QSet, cx: SimplicialComplex, n: int, mode: str = CLOSED
) -> dict[Partition, ContractionDatum]:
    return {
        p: universal_datum(q, cx, one_layer_tree(n, p), mode)
        for p in all_partitions(n)
        if p != discrete_partition(n)
    }


# ---------------------------------------------------------------------------
# Face-contraction compatibility of universal data


def rename_generators(
    curve: TropicalCurve, new_gens: tuple[str, ...]
) -> TropicalCurve:
    if len(new_gens) != len(curve.gens):
        raise ValueError("generator count mismatch")
    lengths = tuple(
        MonoidElement(new_gens, ell.coeffs) for ell in curve.lengths
    )
    return TropicalCurve(curve.graph, new_gens, lengths)


def induced_subdivided_contraction(
    contraction: FaceContraction,
    sub_fine: Subdivision,
    sub_coarse: Subdivision,
) -> FaceContraction:
    """Extend a face contraction to the subdivisions at matching radii.

    ``sub_fine`` subdivides the contraction source at rho, ``sub_coarse``
    subdivides the target at the projection of rho; subdivision vertices
    map onto the corresponding subdivision vertex downstairs, or onto the
    vertex already sitting at the radius when the crossing degenerates.
    """
    if sub_fine.original != contraction.source:
        raise ValueError("fine subdivision not on the contraction source")
    if sub_coarse.original != contraction.target:
        raise ValueError("coarse subdivision not on the contraction target")
    if contraction.project(sub_fine.rho) != sub_coarse.rho:
        raise ValueError("radii do not correspond under the contraction")

    coarse_on_edge = {
        origin: vid for vid, origin in sub_coarse.vertex_origin.items()
    }
    fine_graph = sub_fine.curve.graph
    coarse_graph = sub_coarse.curve.graph
    vmap: list[int] = []
    for v in range(fine_graph.num_vertices):
        origin = sub_fine.vertex_origin.get(v)
        if origin is None:
            vmap.append(contraction.vertex_map[v])
            continue
        kind, ref = origin
        if kind == "edge":
            target_edge = contraction.edge_map[ref]
            if target_edge is None:
                u, w = contraction.source.graph.edges[ref]
                vmap.append(contraction.vertex_map[u])
                continue
            hit = coarse_on_edge.get(("edge", target_edge))
            if hit is not None:
                vmap.append(hit)
                continue
            a, b = contraction.target.graph.edges[target_edge]
            vmap.append(_endpoint_at(sub_coarse, (a, b)))
        else:
            hit = coarse_on_edge.get(("leg", ref))
            if hit is not None:
                vmap.append(hit)
            else:
                vmap.append(coarse_graph.legs[ref - 1])

    emap: list[int | None] = []
    used: set[int] = set()
    kept = sub_coarse.curve.gens
    for ei, (u, v) in enumerate(fine_graph.edges):
        a, b = vmap[u], vmap[v]
        ell = sub_fine.curve.lengths[ei].project(kept)
        if a == b and ell.is_zero():
            emap.append(None)
            continue
        match = None
        for ej, (x, y) in enumerate(coarse_graph.edges):
            if ej in used:
                continue
            if {x, y} == {a, b} and sub_coarse.curve.lengths[ej] == ell:
                match = ej
                break
        if match is None:
            raise AssertionError(
                f"edge {ei} has no image in the subdivided contraction"
            )
        used.add(match)
        emap.append(match)

    return FaceContraction(
        source=sub_fine.curve,
        target=sub_coarse.curve,
        killed=contraction.killed,
        vertex_map=tuple(vmap),
        edge_map=tuple(emap),
    )


def _endpoint_at(sub: Subdivision, edge: tuple[int, int]) -> int:
    for v in edge:
        if sub.lam.values[v] == sub.rho:
            return v
    raise AssertionError(f"no endpoint of {edge} sits at the radius")


def check_layer_relations(
    q: QSet, cx: SimplicialComplex, n: int, mode: str = CLOSED
) -> list[str]:
    """Verify universal-data compatibility on every 2-layer tree.

    For every chain P1 < P2, the data on the two 1-layer trees must be the
    face-contraction pullbacks of the datum on the 2-layer tree (radius by
    generator projection, tail function by support preimage).  Returns the
    list of violations; expected empty.
    """
    violations = []
    wanted = [p for p in all_partitions(n) if p != discrete_partition(n)]
    for p1, p2 in itertools.permutations(wanted, 2):
        if not (refines(p2, p1) and p1 != p2):
            continue
        chain = f"{format_partition(p1)} < {format_partition(p2)}"
        tree12 = chain_to_layer_tree(n, (p1, p2))
        d12 = universal_datum(q, cx, tree12, mode)
        for kill, p_low, keep_name in (("e2", p1, "e1"), ("e1", p2, "e2")):
            low_tree = one_layer_tree(n, p_low)
            d_low = universal_datum(q, cx, low_tree, mode)
            c = face_contract(tree12, {kill})
            projected = c.project(d12.rho)
            if projected.coeffs != d_low.rho.coeffs:
                violations.append(
                    f"{chain}: radius fails to project along killing {kill}"
                )
                continue
            renamed = rename_generators(low_tree, (keep_name,))
            if c.target.graph.canonical_form() != renamed.graph.canonical_form():
                violations.append(
                    f"{chain}: contraction does not recover the 1-layer tree"
                )
                continue
            sub_low = subdivide_at(c.target, projected)
            induced = induced_subdivided_contraction(c, d12.subdivision, sub_low)
            pulled = pullback_tail_function(induced, d12.mu)
            got = sorted(
                (frozenset(
                    i + 1
                    for i, host in enumerate(sub_low.curve.graph.legs)
                    if host in comp
                ) for comp in _components_within(
                    sub_low.curve.graph, support(pulled)
                )),
                key=sorted,
            )
            want = d_low.support_marks()
            if got != want:
                violations.append(
                    f"{chain}: tail function fails to pull back along {kill}"
                )
    return violations


def limit_model(
    n: int,
    chain: Sequence[Partition],
    q: QSet,
    cx: SimplicialComplex,
) -> tuple[CurveModel, ContractionDatum, list[frozenset[int]]]:
    """The limit of the smoothing family over the layer tree of ``chain``:
    the contracted model, the universal datum, and the groups whose
    collision status depends on the support convention."""
    curve = chain_to_layer_tree(n, tuple(chain))
    datum = universal_datum(q, cx, curve, mode=CLOSED)
    model = contract(curve, datum)
    boundary = mode_dependent_groups(q, cx, curve)
    return model, datum, boundary
