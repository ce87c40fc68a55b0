"""Simplicial complexes on {1..n} and the weight/threshold dictionary.

Faces are stored as bitmasks (mark i = bit i-1).  Only faces of size >= 2 are
stored; the empty set and all singletons are implicit members.  Canonical
order is by (size, sorted element tuple), which makes equality of complexes
plain tuple equality.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

from . import lp
from .partitions import Partition, QSet, all_partitions, partition_with_block


def mask_of(marks: Iterable[int]) -> int:
    m = 0
    for i in marks:
        m |= 1 << (i - 1)
    return m


def set_of(mask: int) -> tuple[int, ...]:
    return tuple(i + 1 for i in range(mask.bit_length()) if mask >> i & 1)


def _face_key(mask: int) -> tuple[int, tuple[int, ...]]:
    return (mask.bit_count(), set_of(mask))


@dataclass(frozen=True)
class SimplicialComplex:
    """A simplicial complex on [n]; ``faces`` holds the size->=2 faces only."""

    n: int
    faces: tuple[int, ...]
    _faceset: frozenset[int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        full = (1 << self.n) - 1
        fs = frozenset(self.faces)
        if len(fs) != len(self.faces):
            raise ValueError("duplicate faces")
        for m in self.faces:
            if m.bit_count() < 2 or m & ~full:
                raise ValueError(f"face {set_of(m)} invalid for n={self.n}")
            if m.bit_count() >= 3:
                for i in range(self.n):
                    sub = m & ~(1 << i)
                    if sub != m and sub.bit_count() >= 2 and sub not in fs:
                        raise ValueError(
                            f"not downward closed: {set_of(m)} present, "
                            f"{set_of(sub)} missing"
                        )
        if list(self.faces) != sorted(self.faces, key=_face_key):
            raise ValueError("faces not in canonical (size, lex) order")
        object.__setattr__(self, "_faceset", fs)

    def has_face(self, marks: Iterable[int] | int) -> bool:
        m = marks if isinstance(marks, int) else mask_of(marks)
        if m & ~((1 << self.n) - 1):
            return False
        if m.bit_count() <= 1:
            return True
        return m in self._faceset

    def faces_as_sets(self) -> list[tuple[int, ...]]:
        return [set_of(m) for m in self.faces]

    def maximal_faces(self) -> list[int]:
        out = []
        for m in self.faces:
            if not any(o != m and o & m == m for o in self.faces):
                out.append(m)
        return out

    def minimal_nonfaces(self) -> list[int]:
        """Size->=2 non-faces all of whose size->=2 proper subsets are faces."""
        out = []
        for size in range(2, self.n + 1):
            for combo in itertools.combinations(range(1, self.n + 1), size):
                m = mask_of(combo)
                if m in self._faceset:
                    continue
                facets_ok = all(
                    (m & ~(1 << (i - 1))).bit_count() < 2
                    or (m & ~(1 << (i - 1))) in self._faceset
                    for i in combo
                )
                if facets_ok:
                    out.append(m)
        return out

    def relabel(self, perm: Sequence[int]) -> "SimplicialComplex":
        """Apply mark relabeling i -> perm[i-1] (perm is a bijection of [n])."""
        imaged = [mask_of(perm[i - 1] for i in set_of(m)) for m in self.faces]
        return SimplicialComplex(self.n, tuple(sorted(imaged, key=_face_key)))

    def iso_canonical_form(self) -> tuple[int, ...]:
        """Minimal relabeling of the face list; equal iff complexes isomorphic."""
        best = None
        for perm in itertools.permutations(range(1, self.n + 1)):
            imaged = tuple(sorted(
                mask_of(perm[i - 1] for i in set_of(m)) for m in self.faces
            ))
            if best is None or imaged < best:
                best = imaged
        return best if best is not None else ()

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "maximal_faces": [list(set_of(m)) for m in self.maximal_faces()],
        }

    @staticmethod
    def from_json(data: dict) -> "SimplicialComplex":
        return from_faces(int(data["n"]), [tuple(f) for f in data["maximal_faces"]])

    def to_text(self) -> str:
        if self.n > 9:
            body = "/".join(
                ",".join(str(i) for i in set_of(m)) for m in self.maximal_faces()
            )
        else:
            body = "/".join(
                "".join(str(i) for i in set_of(m)) for m in self.maximal_faces()
            )
        return f"{self.n}\n{body}"

    @staticmethod
    def from_text(text: str) -> "SimplicialComplex":
        lines = [ln.strip() for ln in text.strip().splitlines()]
        n = int(lines[0])
        gens: list[tuple[int, ...]] = []
        if len(lines) > 1 and lines[1]:
            for chunk in lines[1].split("/"):
                if "," in chunk:
                    gens.append(tuple(int(t) for t in chunk.split(",")))
                else:
                    gens.append(tuple(int(c) for c in chunk))
        return from_faces(n, gens)


def from_faces(n: int, generators: Iterable[Iterable[int]]) -> SimplicialComplex:
    """Downward closure: the smallest complex containing every generator."""
    if n < 1:
        raise ValueError("n must be >= 1")
    closed: set[int] = set()
    for g in generators:
        m = mask_of(g)
        if m & ~((1 << n) - 1) or any(i < 1 for i in g):
            raise ValueError(f"generator {tuple(g)} out of range for n={n}")
        if m.bit_count() < 2:
            continue
        elems = set_of(m)
        for size in range(2, len(elems) + 1):
            for combo in itertools.combinations(elems, size):
                closed.add(mask_of(combo))
    return SimplicialComplex(n, tuple(sorted(closed, key=_face_key)))


def zero_skeleton(n: int) -> SimplicialComplex:
    return SimplicialComplex(n, ())


def full_simplex(n: int) -> SimplicialComplex:
    return from_faces(n, [range(1, n + 1)])


def k_partitions(cx: SimplicialComplex) -> list[Partition]:
    """All partitions of [n] with every part a face (singletons always count)."""
    out = []
    for p in all_partitions(cx.n):
        if all(len(b) < 2 or cx.has_face(mask_of(b)) for b in p):
            out.append(p)
    return out


def is_at_least_triparted(cx: SimplicialComplex) -> bool:
    """True iff every K-partition has at least three parts.

    Only 1- and 2-part partitions can witness failure: the whole set being a
    face, or a face whose complement is also a face (the complement may be a
    singleton, which is automatically a face; for n = 2 two singletons
    already split [n]).
    """
    if cx.n <= 2:
        return False
    full = (1 << cx.n) - 1
    if full in cx._faceset:
        return False
    for m in cx.faces:
        comp = full & ~m
        if comp.bit_count() <= 1 or comp in cx._faceset:
            return False
    return True


@dataclass(frozen=True)
class WeightVector:
    """Exact rational weights a_i with 0 < a_i <= 1."""

    weights: tuple[Fraction, ...]

    def __post_init__(self):
        ws = tuple(Fraction(w) for w in self.weights)
        if not ws:
            raise ValueError("empty weight vector")
        for w in ws:
            if not 0 < w <= 1:
                raise ValueError(f"weight {w} outside (0, 1]")
        object.__setattr__(self, "weights", ws)

    @property
    def n(self) -> int:
        return len(self.weights)

    def total(self, marks: Iterable[int]) -> Fraction:
        return sum((self.weights[i - 1] for i in marks), Fraction(0))


def weight_vector(values: Iterable) -> WeightVector:
    return WeightVector(tuple(Fraction(v) for v in values))


def from_weights(a: WeightVector) -> SimplicialComplex:
    """Faces are the size->=2 subsets whose weights sum to at most 1."""
    n = a.n
    faces = []
    for size in range(2, n + 1):
        for combo in itertools.combinations(range(1, n + 1), size):
            if a.total(combo) <= 1:
                faces.append(mask_of(combo))
    return SimplicialComplex(n, tuple(sorted(faces, key=_face_key)))


def is_threshold(cx: SimplicialComplex) -> WeightVector | None:
    """Find weights realizing ``cx``, or None when no weight data exists.

    Feasibility system, solved exactly over the rationals with the strict
    inequalities encoded by an auxiliary margin eps maximized by the LP:

        sum_{i in F} a_i <= 1          for each maximal face F,
        sum_{i in G} a_i >= 1 + eps    for each minimal non-face G,
        eps <= a_i <= 1,  eps <= 1.

    Weight sums are monotone under inclusion once all a_i > 0, so the
    maximal-face / minimal-non-face constraints suffice.  The complex is
    threshold iff the optimum has eps > 0; the returned certificate is
    re-verified by a from_weights round trip.
    """
    n = cx.n
    nv = n + 1  # a_1..a_n, eps
    rows: list[list[int]] = []
    rhs: list[int] = []
    for i in range(n):  # a_i <= 1
        row = [0] * nv
        row[i] = 1
        rows.append(row)
        rhs.append(1)
    for i in range(n):  # eps - a_i <= 0
        row = [0] * nv
        row[i] = -1
        row[n] = 1
        rows.append(row)
        rhs.append(0)
    for m in cx.maximal_faces():  # sum_F a <= 1
        row = [0] * nv
        for i in set_of(m):
            row[i - 1] = 1
        rows.append(row)
        rhs.append(1)
    for m in cx.minimal_nonfaces():  # -sum_G a + eps <= -1
        row = [0] * nv
        for i in set_of(m):
            row[i - 1] = -1
        row[n] = 1
        rows.append(row)
        rhs.append(-1)
    row = [0] * nv  # eps <= 1 keeps the objective bounded
    row[n] = 1
    rows.append(row)
    rhs.append(1)

    objective = [0] * nv
    objective[n] = 1
    solved = lp.maximize(objective, rows, rhs)
    if solved is None:
        return None
    value, x = solved
    if value <= 0:
        return None
    cert = WeightVector(tuple(x[:n]))
    if from_weights(cert) != cx:
        raise RuntimeError(f"threshold certificate failed verification on {cx}")
    return cert


def do_not_overlap(q: QSet, cx: SimplicialComplex) -> bool:
    """True iff no face I of ``cx`` has its one-big-part partition inside Q."""
    if q.n != cx.n:
        raise ValueError(f"mismatched n: Q on [{q.n}], complex on [{cx.n}]")
    for m in cx.faces:
        if partition_with_block(set_of(m), cx.n) in q.partitions:
            return False
    return True


# ---------------------------------------------------------------------------
# Enumeration and counting


def _members_by_level(n: int) -> list[list[int]]:
    """members[k] = masks of size k, canonical order (index 0,1 unused)."""
    members: list[list[int]] = [[], []]
    for size in range(2, n + 1):
        members.append(
            [mask_of(c) for c in itertools.combinations(range(1, n + 1), size)]
        )
    return members


def enumerate_complexes(
    n: int, triparted_only: bool = False
) -> Iterator[SimplicialComplex]:
    """Yield every labeled complex on [n] exactly once, sparse-first DFS order.

    A candidate face may be included only when all of its facets already are,
    which maintains downward closure along the search path.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    candidates = sorted(
        (m for level in _members_by_level(n) for m in level), key=_face_key
    )
    facets: dict[int, list[int]] = {}
    for m in candidates:
        facets[m] = [
            m & ~(1 << i) for i in range(n) if m >> i & 1 and m.bit_count() >= 3
        ]
    included: list[int] = []
    included_set: set[int] = set()

    def rec(i: int) -> Iterator[SimplicialComplex]:
        if i == len(candidates):
            cx = SimplicialComplex(n, tuple(included))
            if not triparted_only or is_at_least_triparted(cx):
                yield cx
            return
        m = candidates[i]
        yield from rec(i + 1)
        if all(f in included_set for f in facets[m]):
            included.append(m)
            included_set.add(m)
            yield from rec(i + 1)
            included.pop()
            included_set.remove(m)

    yield from rec(0)


def _count_extensions(n: int, members, req, level: int, allowed: int, memo) -> int:
    """Number of ways to pick faces at ``level`` and above, given the bitset
    of faces currently allowed at ``level`` (indexed into members[level])."""
    if level > n or allowed == 0:
        return 1
    key = allowed
    cached = memo[level].get(key)
    if cached is not None:
        return cached
    nxt = req[level + 1] if level + 1 <= n else []
    cand = [j for j, r in enumerate(nxt) if r & ~allowed == 0]
    if not cand:
        result = 1 << allowed.bit_count()
        memo[level][key] = result
        return result
    touched = 0
    for j in cand:
        touched |= nxt[j]
    free = (allowed & ~touched).bit_count()
    core = allowed & touched
    total = 0
    sub = core
    while True:
        up = 0
        for j in cand:
            if nxt[j] & ~sub == 0:
                up |= 1 << j
        total += _count_extensions(n, members, req, level + 1, up, memo)
        if sub == 0:
            break
        sub = (sub - 1) & core
    result = total << free
    memo[level][key] = result
    return result


def _requirement_bitsets(n: int, members) -> list[list[int]]:
    """req[k][j] = bitset over members[k-1] of the facets of members[k][j]."""
    req: list[list[int]] = [[], [], []]
    for k in range(3, n + 1):
        index = {m: i for i, m in enumerate(members[k - 1])}
        level = []
        for m in members[k]:
            bits = 0
            for i in range(n):
                if m >> i & 1:
                    bits |= 1 << index[m & ~(1 << i)]
            level.append(bits)
        req.append(level)
    return req


def count_complexes(n: int, up_to_iso: bool = False, jobs: int = 1) -> int:
    """Number of labeled complexes on [n] (or isomorphism classes).

    Labeled counting walks the lattice of downward-closed families level by
    level with memoization, so it never materializes the complexes; n <= 6 is
    exact and feasible (n = 6 takes on the order of a minute), larger n is
    supported but slow.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if up_to_iso:
        return len(_iso_classes(n))
    members = _members_by_level(n)
    if n == 1:
        return 1
    req = _requirement_bitsets(n, members)
    full = (1 << len(members[2])) - 1
    if jobs > 1 and n >= 5:
        return _count_parallel(n, jobs)
    memo = [dict() for _ in range(n + 2)]
    return _count_pairs_level(n, members, req, full, memo)


def _count_pairs_level(n, members, req, pairset, memo) -> int:
    """Sum of extension counts over all subsets of the allowed pair set."""
    total = 0
    sub = pairset
    nxt = req[3] if n >= 3 else []
    while True:
        up = 0
        for j, r in enumerate(nxt):
            if r & ~sub == 0:
                up |= 1 << j
        total += _count_extensions(n, members, req, 3, up, memo)
        if sub == 0:
            break
        sub = (sub - 1) & pairset
    return total


def _count_chunk(args) -> int:
    n, start, stop = args
    members = _members_by_level(n)
    req = _requirement_bitsets(n, members)
    memo = [dict() for _ in range(n + 2)]
    nxt = req[3]
    total = 0
    for sub in range(start, stop):
        up = 0
        for j, r in enumerate(nxt):
            if r & ~sub == 0:
                up |= 1 << j
        total += _count_extensions(n, members, req, 3, up, memo)
    return total


def _count_parallel(n: int, jobs: int) -> int:
    import multiprocessing as mp

    npairs = len(_members_by_level(n)[2])
    space = 1 << npairs
    chunks = max(jobs * 4, 1)
    bounds = [space * i // chunks for i in range(chunks + 1)]
    tasks = [(n, bounds[i], bounds[i + 1]) for i in range(chunks)]
    with mp.get_context("fork").Pool(jobs) as pool:
        return sum(pool.map(_count_chunk, tasks))


@lru_cache(maxsize=8)
def _iso_classes(n: int) -> dict[tuple[int, ...], tuple[tuple[int, ...], int]]:
    """canonical form -> (representative face tuple, orbit size)."""
    perms = list(itertools.permutations(range(1, n + 1)))
    # mask image tables: one lookup per face instead of per bit
    tables = []
    for perm in perms:
        table = [0] * (1 << n)
        for m in range(1 << n):
            img = 0
            for i in range(n):
                if m >> i & 1:
                    img |= 1 << (perm[i] - 1)
            table[m] = img
        tables.append(table)
    classes: dict[tuple[int, ...], tuple[tuple[int, ...], int]] = {}
    for cx in enumerate_complexes(n):
        best = None
        for table in tables:
            imaged = tuple(sorted(table[m] for m in cx.faces))
            if best is None or imaged < best:
                best = imaged
        rep, count = classes.get(best, (cx.faces, 0))
        classes[best] = (rep, count + 1)
    return classes


def _threshold_of_faces(args) -> bool:
    n, faces = args
    return is_threshold(SimplicialComplex(n, faces)) is not None


def count_threshold(n: int, up_to_iso: bool = False, jobs: int = 1) -> int:
    """Number of labeled complexes on [n] realizable by weight data.

    Threshold recognition is relabeling-invariant, so the LP runs once per
    isomorphism class and labeled counts are recovered from orbit sizes.
    Practical for n <= 5; n = 6 works in principle but the class grouping
    over 7.7M complexes is very slow.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    classes = _iso_classes(n)
    items = sorted(classes.values())
    if jobs > 1:
        import multiprocessing as mp

        with mp.get_context("fork").Pool(jobs) as pool:
            verdicts = pool.map(
                _threshold_of_faces, [(n, faces) for faces, _ in items]
            )
    else:
        verdicts = [_threshold_of_faces((n, faces)) for faces, _ in items]
    total = 0
    for (faces, orbit), good in zip(items, verdicts):
        if good:
            total += 1 if up_to_iso else orbit
    return total
