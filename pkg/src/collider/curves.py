"""Combinatorial models of pointed curves and their stability predicates.

A model records irreducible components (by normalization genus),
singularities (genus 0 nodes with two branches, or one genus-1 singularity
with m branches), and marked points as collision groups at smooth points.
The genus-one Gorenstein regime allows at most one genus-1 singularity and
no positive-genus components alongside it.

Arithmetic genus bookkeeping uses the delta invariant g_s + m_s - 1 per
singularity; a union of k < m branches of the genus-1 singularity meets like
an ordinary (seminormal) k-fold point, contributing k - 1 and no genus.
"""

from __future__ import annotations

import bisect
import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from .complexes import (
    SimplicialComplex,
    WeightVector,
    do_not_overlap,
    from_faces,
    is_at_least_triparted,
    mask_of,
)
from .graphs import MarkedGraph, enumerate_stable_graphs
from .partitions import (
    Partition,
    QSet,
    all_partitions,
    canonical,
    num_parts,
    partition_with_block,
    qset,
)


@dataclass(frozen=True)
class Singularity:
    genus: int
    branches: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(sorted(self.branches)))
        if self.genus == 0 and len(self.branches) != 2:
            raise ValueError("a node has exactly two branches")
        if self.genus == 1 and len(self.branches) < 1:
            raise ValueError("an elliptic singularity has at least one branch")
        if self.genus not in (0, 1):
            raise ValueError("singularity genus must be 0 or 1")

    @property
    def is_node(self) -> bool:
        return self.genus == 0

    def kind(self) -> str:
        if self.is_node:
            return "node"
        m = len(self.branches)
        return {1: "cusp", 2: "tacnode"}.get(m, f"elliptic {m}-fold point")


@dataclass(frozen=True)
class MarkedPoint:
    component: int
    marks: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "marks", tuple(sorted(self.marks)))
        if not self.marks:
            raise ValueError("marked point carries no marks")


@dataclass(frozen=True)
class CurveModel:
    components: tuple[int, ...]
    singularities: tuple[Singularity, ...]
    points: tuple[MarkedPoint, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "components", tuple(int(g) for g in self.components)
        )
        object.__setattr__(
            self,
            "singularities",
            tuple(sorted(self.singularities, key=lambda s: (s.genus, s.branches))),
        )
        object.__setattr__(
            self,
            "points",
            tuple(sorted(self.points, key=lambda p: (p.component, p.marks))),
        )
        nc = len(self.components)
        if nc < 1:
            raise ValueError("model needs at least one component")
        for s in self.singularities:
            if any(not 0 <= b < nc for b in s.branches):
                raise ValueError("singularity branch out of range")
        for p in self.points:
            if not 0 <= p.component < nc:
                raise ValueError("marked point component out of range")
        marks = sorted(m for p in self.points for m in p.marks)
        if marks != sorted(set(marks)) or (marks and marks != list(range(1, len(marks) + 1))):
            raise ValueError("marks must be exactly 1..n, each in one group")
        elliptic = [s for s in self.singularities if s.genus == 1]
        if len(elliptic) > 1:
            raise ValueError("at most one genus-1 singularity")
        if elliptic:
            if any(g > 0 for g in self.components):
                raise ValueError(
                    "genus-one Gorenstein regime forbids positive-genus components"
                )
            if self.arithmetic_genus() != 1:
                raise ValueError("elliptic singularity requires arithmetic genus 1")
        if not self._connected():
            raise ValueError("model not connected")

    @property
    def n(self) -> int:
        return sum(len(p.marks) for p in self.points)

    def _connected(self) -> bool:
        nc = len(self.components)
        parent = list(range(nc))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for s in self.singularities:
            root = find(s.branches[0])
            for b in s.branches[1:]:
                parent[find(b)] = root
        return len({find(v) for v in range(nc)}) == 1

    def elliptic_singularity(self) -> int | None:
        for i, s in enumerate(self.singularities):
            if s.genus == 1:
                return i
        return None

    def is_nodal(self) -> bool:
        return self.elliptic_singularity() is None

    def arithmetic_genus(self) -> int:
        delta = sum(s.genus + len(s.branches) - 1 for s in self.singularities)
        return sum(self.components) + delta - len(self.components) + 1

    def branch_slots(self, v: int) -> int:
        return sum(b == v for s in self.singularities for b in s.branches)

    def points_on(self, v: int) -> list[MarkedPoint]:
        return [p for p in self.points if p.component == v]

    def special_count(self, v: int) -> int:
        """Branch slots (with multiplicity) plus marked points (one per group)."""
        return self.branch_slots(v) + len(self.points_on(v))

    def marks_on(self, comps: Iterable[int]) -> frozenset[int]:
        cs = set(comps)
        return frozenset(m for p in self.points if p.component in cs for m in p.marks)

    def incident_to_elliptic(self, v: int) -> bool:
        e = self.elliptic_singularity()
        return e is not None and v in self.singularities[e].branches

    # -- subcurves ----------------------------------------------------------

    def _restricted_delta(self, s: Singularity, inside: set[int]) -> int:
        k = sum(b in inside for b in s.branches)
        if k <= 1:
            return 0
        if k == len(s.branches):
            return s.genus + k - 1
        return k - 1

    def subcurve_connected(self, comps: Iterable[int]) -> bool:
        inside = set(comps)
        if not inside:
            return False
        order = sorted(inside)
        parent = {v: v for v in order}

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for s in self.singularities:
            ins = [b for b in s.branches if b in inside]
            for b in ins[1:]:
                parent[find(b)] = find(ins[0])
        return len({find(v) for v in order}) == 1

    def subcurve_genus(self, comps: Iterable[int]) -> int:
        inside = set(comps)
        if not self.subcurve_connected(inside):
            raise ValueError("subcurve must be connected")
        delta = sum(self._restricted_delta(s, inside) for s in self.singularities)
        return sum(self.components[v] for v in inside) + delta - len(inside) + 1

    def rational_tails(self) -> list[tuple[frozenset[int], frozenset[int]]]:
        """(component set, marks) of every rational tail: connected, genus 0,
        meeting the rest of the curve in exactly one node branch."""
        nc = len(self.components)
        out = []
        for size in range(1, nc):
            for combo in itertools.combinations(range(nc), size):
                inside = set(combo)
                if not self.subcurve_connected(inside):
                    continue
                boundary = [
                    s
                    for s in self.singularities
                    if 0 < sum(b in inside for b in s.branches) < len(s.branches)
                ]
                if len(boundary) != 1 or not boundary[0].is_node:
                    continue
                if self.subcurve_genus(inside) != 0:
                    continue
                out.append((frozenset(inside), self.marks_on(inside)))
        return out

    def canonical_form(self) -> tuple:
        nc = len(self.components)
        best = None
        for perm in itertools.permutations(range(nc)):
            comps = [0] * nc
            for old, g in enumerate(self.components):
                comps[perm[old]] = g
            sings = tuple(sorted(
                (s.genus, tuple(sorted(perm[b] for b in s.branches)))
                for s in self.singularities
            ))
            pts = tuple(sorted((perm[p.component], p.marks) for p in self.points))
            enc = (tuple(comps), sings, pts)
            if best is None or enc < best:
                best = enc
        return best

    def to_json(self) -> dict:
        return {
            "components": [{"genus": g} for g in self.components],
            "singularities": [
                {"genus": s.genus, "branches": list(s.branches), "kind": s.kind()}
                for s in self.singularities
            ],
            "points": [
                {"component": p.component, "marks": list(p.marks)}
                for p in self.points
            ],
        }

    @staticmethod
    def from_json(data: dict) -> "CurveModel":
        return CurveModel(
            components=tuple(int(c["genus"]) for c in data["components"]),
            singularities=tuple(
                Singularity(int(s["genus"]), tuple(s["branches"]))
                for s in data["singularities"]
            ),
            points=tuple(
                MarkedPoint(int(p["component"]), tuple(p["marks"]))
                for p in data["points"]
            ),
        )


@dataclass(frozen=True)
class StabilityReport:
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def smooth_model(graph: MarkedGraph) -> CurveModel:
    """The nodal model of a marked graph, all marks as singleton groups."""
    sings = tuple(
        Singularity(genus=0, branches=(u, v)) for u, v in graph.edges
    )
    points = tuple(
        MarkedPoint(component=v, marks=(i + 1,))
        for i, v in enumerate(graph.legs)
    )
    return CurveModel(graph.genus, sings, points)


def is_k_stable(model: CurveModel, cx: SimplicialComplex) -> StabilityReport:
    """Check axioms (K1)-(K5) for a nodal model against a collision complex."""
    if model.n != cx.n:
        raise ValueError(f"model has {model.n} marks, complex is on [{cx.n}]")
    if model.arithmetic_genus() == 0 and not is_at_least_triparted(cx):
        raise ValueError("genus 0 requires an at least triparted complex")
    violations = []
    if not model.is_nodal():
        violations.append("K1: model has a non-nodal singularity")
        return StabilityReport(tuple(violations))
    # (K2) markings smooth: structural, marked points live on components.
    for p in model.points:
        if not cx.has_face(mask_of(p.marks)):
            violations.append(f"K3: collision group {set(p.marks)} not a face")
    for comps, marks in model.rational_tails():
        if cx.has_face(mask_of(marks)):
            violations.append(
                f"K4: rational tail on components {sorted(comps)} "
                f"marked {sorted(marks)} lies in the complex"
            )
    for v, g in enumerate(model.components):
        if g == 0 and model.special_count(v) < 3:
            violations.append(
                f"K5: rational component {v} has "
                f"{model.special_count(v)} special points"
            )
    return StabilityReport(tuple(violations))


def is_hassett_stable(model: CurveModel, a: WeightVector) -> bool:
    """Weighted stability: group weight sums at most 1, and on every
    component 2g - 2 + (branch slots) + (weight of its marks) > 0."""
    if model.n != a.n:
        raise ValueError("weight vector length mismatch")
    for p in model.points:
        if a.total(p.marks) > 1:
            return False
    for v, g in enumerate(model.components):
        total = Fraction(2 * g - 2 + model.branch_slots(v))
        for p in model.points_on(v):
            total += a.total(p.marks)
        if total <= 0:
            return False
    return True


def level_of_singularity(model: CurveModel, sing_index: int) -> Partition:
    """Partition of the marks by connected components of the normalization
    of the curve at the given elliptic singularity."""
    s = model.singularities[sing_index]
    if s.is_node:
        raise ValueError("level is defined at the elliptic singularity only")
    nc = len(model.components)
    parent = list(range(nc))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, other in enumerate(model.singularities):
        if i == sing_index:
            continue
        for b in other.branches[1:]:
            parent[find(b)] = find(other.branches[0])
    pieces: dict[int, set[int]] = {}
    for p in model.points:
        pieces.setdefault(find(p.component), set()).update(p.marks)
    return canonical(b for b in pieces.values() if b)


def level_of_subcurve(model: CurveModel, comps: Iterable[int]) -> Partition:
    """Level of a connected genus-one subcurve: one part per collision group
    on it, plus the mark set of each connected complement component."""
    inside = set(comps)
    if model.subcurve_genus(inside) != 1:
        raise ValueError("subcurve must have arithmetic genus one")
    blocks: list[set[int]] = []
    for p in model.points:
        if p.component in inside:
            blocks.append(set(p.marks))
    outside = [v for v in range(len(model.components)) if v not in inside]
    parent = {v: v for v in outside}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for s in model.singularities:
        if any(b in inside for b in s.branches):
            continue
        for b in s.branches[1:]:
            parent[find(b)] = find(s.branches[0])
    pieces: dict[int, set[int]] = {}
    for p in model.points:
        if p.component not in inside:
            pieces.setdefault(find(p.component), set()).update(p.marks)
    blocks.extend(b for b in pieces.values() if b)
    return canonical(blocks)


def genus_one_subcurves(model: CurveModel) -> list[frozenset[int]]:
    nc = len(model.components)
    out = []
    for size in range(1, nc + 1):
        for combo in itertools.combinations(range(nc), size):
            inside = set(combo)
            if not model.subcurve_connected(inside):
                continue
            if model.subcurve_genus(inside) == 1:
                out.append(frozenset(inside))
    return out


def _check_six(model: CurveModel, strict: bool, tag: str) -> list[str]:
    """No-infinitesimal-automorphism proxy: rational components away from the
    elliptic singularity need three special points; incident components are
    exempt (two are required in strict mode)."""
    violations = []
    for v, g in enumerate(model.components):
        if g != 0:
            continue
        count = model.special_count(v)
        if model.incident_to_elliptic(v):
            if strict and count < 2:
                violations.append(
                    f"{tag}: component {v} at the elliptic singularity has "
                    f"{count} special points (strict mode needs 2)"
                )
        elif count < 3:
            violations.append(
                f"{tag}: rational component {v} has {count} special points"
            )
    return violations


def is_qk_stable(
    model: CurveModel,
    q: QSet,
    cx: SimplicialComplex,
    strict_six: bool = False,
    check_overlap: bool = True,
) -> StabilityReport:
    """Check axioms (Q1)-(Q6) for a genus-one Gorenstein model."""
    if model.n != cx.n or q.n != cx.n:
        raise ValueError("marks, Q-set, and complex must share n")
    if check_overlap and not do_not_overlap(q, cx):
        raise ValueError("Q and the complex overlap")
    if model.arithmetic_genus() != 1:
        raise ValueError("(Q,K)-stability applies to genus-one models")
    violations = []
    # (Q1) markings smooth: structural.
    e = model.elliptic_singularity()
    if e is not None:
        lev = level_of_singularity(model, e)
        if lev not in q.partitions:
            violations.append(
                f"Q2: elliptic singularity level {lev} not in Q"
            )
    for sub in genus_one_subcurves(model):
        lev = level_of_subcurve(model, sub)
        if lev in q.partitions:
            violations.append(
                f"Q3: genus-one subcurve {sorted(sub)} has level {lev} in Q"
            )
    for p in model.points:
        if not cx.has_face(mask_of(p.marks)):
            violations.append(f"Q4: collision group {set(p.marks)} not a face")
    for comps, marks in model.rational_tails():
        if cx.has_face(mask_of(marks)):
            violations.append(
                f"Q5: rational tail on components {sorted(comps)} "
                f"marked {sorted(marks)} lies in the complex"
            )
    violations.extend(_check_six(model, strict_six, "Q6"))
    return StabilityReport(tuple(violations))


def is_ma_stable(
    model: CurveModel, m: int, a: WeightVector, strict_six: bool = False
) -> StabilityReport:
    """Level-bounded weighted stability for genus-one models: the elliptic
    singularity has at most m level parts, every genus-one subcurve has more
    than m level parts, and the weighted degree conditions hold."""
    if model.arithmetic_genus() != 1:
        raise ValueError("(m,A)-stability applies to genus-one models")
    if not 0 <= m < a.n:
        raise ValueError("need 0 <= m < n")
    violations = []
    e = model.elliptic_singularity()
    if e is not None:
        lev = level_of_singularity(model, e)
        if num_parts(lev) > m:
            violations.append(
                f"M2: elliptic singularity level has {num_parts(lev)} > {m} parts"
            )
    for sub in genus_one_subcurves(model):
        lev = level_of_subcurve(model, sub)
        if num_parts(lev) <= m:
            violations.append(
                f"M3: genus-one subcurve {sorted(sub)} has level with "
                f"{num_parts(lev)} <= {m} parts"
            )
    if not is_hassett_stable(model, a):
        violations.append("MA: fails weighted stability")
    violations.extend(_check_six(model, strict_six, "M6"))
    return StabilityReport(tuple(violations))


def ma_to_qk(m: int, a: WeightVector) -> tuple[QSet, SimplicialComplex]:
    """Translate a level bound and weights into a (Q, K) pair: Q holds the
    partitions with at most m parts, K the weight-light subsets whose
    one-big-part partition escapes Q."""
    n = a.n
    if not 0 <= m < n:
        raise ValueError("need 0 <= m < n")
    q = qset(n, (p for p in all_partitions(n) if num_parts(p) <= m))
    gens = []
    for size in range(2, n + 1):
        for combo in itertools.combinations(range(1, n + 1), size):
            if a.total(combo) <= 1 and partition_with_block(combo, n) not in q.partitions:
                gens.append(combo)
    cx = from_faces(n, gens)
    assert do_not_overlap(q, cx)
    return q, cx


def collision_complex(models: Sequence[CurveModel]) -> SimplicialComplex:
    """Downward closure of every collision group appearing in the models."""
    if not models:
        raise ValueError("need at least one model")
    n = models[0].n
    if any(m.n != n for m in models):
        raise ValueError("models must share the same marks")
    gens = [p.marks for m in models for p in m.points if len(p.marks) >= 2]
    return from_faces(n, gens)


# ---------------------------------------------------------------------------
# Exhaustive model enumeration at desk scale


@lru_cache(maxsize=None)
def enumerate_nodal_models(n: int, g: int = 1) -> tuple[CurveModel, ...]:
    """All nodal genus-g models with marks 1..n whose rational components
    have three special points, one per isomorphism class: a set partition
    into collision groups on top of each stable graph."""
    out: dict[tuple, CurveModel] = {}
    for p in all_partitions(n):
        k = len(p)
        if g == 0 and k < 3:
            continue
        for graph in enumerate_stable_graphs(g, k):
            sings = tuple(
                Singularity(genus=0, branches=(u, v)) for u, v in graph.edges
            )
            points = tuple(
                MarkedPoint(component=graph.legs[j], marks=p[j])
                for j in range(k)
            )
            model = CurveModel(graph.genus, sings, points)
            out.setdefault(model.canonical_form(), model)
    return tuple(out[k] for k in sorted(out))


def _labeled_trees(nv: int) -> list[list[tuple[int, int]]]:
    """All labeled trees on vertices 0..nv-1 via Pruefer sequences."""
    if nv == 1:
        return [[]]
    if nv == 2:
        return [[(0, 1)]]
    trees = []
    for seq in itertools.product(range(nv), repeat=nv - 2):
        degree = [1] * nv
        for v in seq:
            degree[v] += 1
        edges = []
        work = sorted(v for v in range(nv) if degree[v] == 1)
        for v in seq:
            leaf = work.pop(0)
            edges.append((min(leaf, v), max(leaf, v)))
            degree[leaf] -= 1
            degree[v] -= 1
            if degree[v] == 1:
                bisect.insort(work, v)
        edges.append((min(work[0], work[1]), max(work[0], work[1])))
        trees.append(edges)
    return trees


@lru_cache(maxsize=None)
def enumerate_gorenstein_models(n: int) -> tuple[CurveModel, ...]:
    """All genus-one models with marks 1..n at desk scale: the nodal ones
    plus every model with one elliptic m-fold point.

    The elliptic enumeration covers models whose singularity-incident
    components have at least two special points and all other rational
    components at least three (the models that arise as limits); this keeps
    the family finite, with at most one component per collision group.
    """
    out: dict[tuple, CurveModel] = {}
    for model in enumerate_nodal_models(n, g=1):
        out.setdefault(model.canonical_form(), model)
    for p in all_partitions(n):
        k = len(p)
        for c in range(1, k + 1):
            # dual tree on {hub 0} u {components 1..c}; hub edges are branches
            for tree in _labeled_trees(c + 1):
                sings = [
                    Singularity(
                        genus=1,
                        branches=tuple(
                            (u if u != 0 else v) - 1
                            for u, v in tree
                            if 0 in (u, v)
                        ),
                    )
                ]
                node_edges = [(u - 1, v - 1) for u, v in tree if 0 not in (u, v)]
                sings.extend(
                    Singularity(genus=0, branches=e) for e in node_edges
                )
                for assign in itertools.product(range(c), repeat=k):
                    points = tuple(
                        MarkedPoint(component=assign[j], marks=p[j])
                        for j in range(k)
                    )
                    try:
                        model = CurveModel(
                            components=(0,) * c,
                            singularities=tuple(sings),
                            points=points,
                        )
                    except ValueError:
                        continue
                    ok = True
                    for v in range(c):
                        count = model.special_count(v)
                        need = 2 if model.incident_to_elliptic(v) else 3
                        if count < need:
                            ok = False
                            break
                    if ok:
                        out.setdefault(model.canonical_form(), model)
    return tuple(out[k] for k in sorted(out))


def k_stable_models(n: int, cx: SimplicialComplex, g: int = 1) -> list[CurveModel]:
    return [
        m for m in enumerate_nodal_models(n, g) if is_k_stable(m, cx).ok
    ]
