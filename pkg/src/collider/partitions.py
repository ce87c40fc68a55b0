"""Set partitions of {1..n} under the refinement order, and Q-sets.

A partition is stored canonically as a tuple of blocks, each block a sorted
tuple of marks, blocks ordered by their smallest element.  The order used
throughout is ``P1 <= P2`` iff ``P2`` refines ``P1`` (coarser partitions are
smaller).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

Block = tuple[int, ...]
Partition = tuple[Block, ...]


def canonical(blocks: Iterable[Iterable[int]]) -> Partition:
    """Canonical form: blocks sorted internally, ordered by least element."""
    parts = sorted(tuple(sorted(set(b))) for b in blocks if len(tuple(b)) > 0)
    seen: set[int] = set()
    for b in parts:
        if seen & set(b):
            raise ValueError(f"blocks overlap: {parts}")
        seen |= set(b)
    return tuple(parts)


def is_partition_of(p: Partition, n: int) -> bool:
    marks = [i for b in p for i in b]
    return sorted(marks) == list(range(1, n + 1))


def discrete_partition(n: int) -> Partition:
    return tuple((i,) for i in range(1, n + 1))


def single_block_partition(n: int) -> Partition:
    return (tuple(range(1, n + 1)),)


def partition_with_block(block: Iterable[int], n: int) -> Partition:
    """The partition with ``block`` as its only (possibly) large part."""
    b = tuple(sorted(set(block)))
    if not b or not all(1 <= i <= n for i in b):
        raise ValueError(f"block {b!r} not inside [1..{n}]")
    rest = [(i,) for i in range(1, n + 1) if i not in set(b)]
    return canonical([b, *rest])


@lru_cache(maxsize=None)
def all_partitions(n: int) -> tuple[Partition, ...]:
    """All partitions of {1..n}, coarse to fine, deterministic order."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return ((),)

    def extend(k: int) -> list[list[list[int]]]:
        if k == 0:
            return [[]]
        out = []
        for p in extend(k - 1):
            for i in range(len(p)):
                out.append([b + [k] if j == i else b for j, b in enumerate(p)])
            out.append(p + [[k]])
        return out

    parts = [canonical(p) for p in extend(n)]
    return tuple(sorted(parts, key=lambda p: (len(p), p)))


def refines(fine: Partition, coarse: Partition) -> bool:
    """True iff every block of ``fine`` is contained in a block of ``coarse``."""
    containing = {}
    for b in coarse:
        for i in b:
            containing[i] = b
    for b in fine:
        target = containing.get(b[0])
        if target is None or not set(b) <= set(target):
            return False
    return True


def coarsenings(p: Partition, n: int) -> list[Partition]:
    """All partitions that ``p`` refines (including ``p`` itself)."""
    return [q for q in all_partitions(n) if refines(p, q)]


def num_parts(p: Partition) -> int:
    return len(p)


def format_partition(p: Partition) -> str:
    """Text form: "12/34" for marks <= 9, "1,2/3,4" otherwise."""
    if all(i <= 9 for b in p for i in b):
        return "/".join("".join(str(i) for i in b) for b in p)
    return "/".join(",".join(str(i) for i in b) for b in p)


def parse_partition(text: str, n: int) -> Partition:
    """Parse "12/34" (digits, n <= 9) or "1,2/3,4" into a partition of [n]."""
    blocks: list[list[int]] = []
    for chunk in text.strip().split("/"):
        chunk = chunk.strip()
        if not chunk:
            raise ValueError(f"empty block in partition {text!r}")
        if "," in chunk:
            blocks.append([int(t) for t in chunk.split(",")])
        else:
            if n > 9:
                raise ValueError("digit-string partition syntax needs n <= 9")
            blocks.append([int(c) for c in chunk])
    p = canonical(blocks)
    if not is_partition_of(p, n):
        raise ValueError(f"{text!r} is not a partition of [1..{n}]")
    return p


@dataclass(frozen=True)
class QSet:
    """A downward-closed set of non-discrete partitions of {1..n}.

    Downward closed means closed under coarsening: if P is in the set and P
    refines P', then P' is in the set too.
    """

    n: int
    partitions: frozenset[Partition]

    def __contains__(self, p: Partition) -> bool:
        return p in self.partitions

    def sorted_partitions(self) -> list[Partition]:
        return sorted(self.partitions, key=lambda p: (len(p), p))


def validate_qset(q: QSet) -> None:
    """Raise ValueError unless ``q`` is a valid Q-set."""
    disc = discrete_partition(q.n)
    for p in q.partitions:
        if not is_partition_of(p, q.n):
            raise ValueError(f"{p} is not a partition of [1..{q.n}]")
        if p == disc:
            raise ValueError("Q-set must not contain the discrete partition")
    for p in q.partitions:
        for c in coarsenings(p, q.n):
            if c not in q.partitions:
                raise ValueError(
                    f"Q-set not closed under coarsening: {p} in Q but {c} missing"
                )


def qset(n: int, parts: Iterable[Partition]) -> QSet:
    """Build and validate a Q-set."""
    q = QSet(n=n, partitions=frozenset(parts))
    validate_qset(q)
    return q


@lru_cache(maxsize=None)
def all_qsets(n: int) -> tuple[QSet, ...]:
    """Every Q-set on [n] (order ideals of the non-discrete partition poset)."""
    universe = [p for p in all_partitions(n) if p != discrete_partition(n)]
    # DFS over the poset in coarse-to-fine order: a partition may be included
    # only if all of its proper coarsenings are already in.
    below = {
        p: [q for q in coarsenings(p, n) if q != p and q != discrete_partition(n)]
        for p in universe
    }
    out: list[QSet] = []

    def rec(i: int, chosen: set[Partition]) -> None:
        if i == len(universe):
            out.append(QSet(n=n, partitions=frozenset(chosen)))
            return
        rec(i + 1, chosen)
        p = universe[i]
        if all(c in chosen for c in below[p]):
            chosen.add(p)
            rec(i + 1, chosen)
            chosen.remove(p)

    rec(0, set())
    return tuple(out)
