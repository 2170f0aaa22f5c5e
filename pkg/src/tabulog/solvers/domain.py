"""Finite integer domains stored as sorted, disjoint, non-adjacent intervals."""

from __future__ import annotations

from collections.abc import Iterable, Iterator


class Domain:
    __slots__ = ("ivs", "_size")

    def __init__(self, ivs: tuple[tuple[int, int], ...] = ()) -> None:
        self.ivs = ivs
        self._size = sum(hi - lo + 1 for lo, hi in ivs)

    @classmethod
    def interval(cls, lo: int, hi: int) -> Domain:
        return cls(((lo, hi),)) if lo <= hi else EMPTY

    @classmethod
    def of(cls, values: Iterable[int]) -> Domain:
        out: list[tuple[int, int]] = []
        for v in sorted(set(values)):
            if out and out[-1][1] == v - 1:
                out[-1] = (out[-1][0], v)
            else:
                out.append((v, v))
        return cls(tuple(out))

    @classmethod
    def value(cls, v: int) -> Domain:
        return cls(((v, v),))

    # -- queries ---------------------------------------------------------------

    @property
    def size(self) -> int:
        return self._size

    @property
    def empty(self) -> bool:
        return not self.ivs

    @property
    def min(self) -> int:
        return self.ivs[0][0]

    @property
    def max(self) -> int:
        return self.ivs[-1][1]

    @property
    def fixed(self) -> bool:
        return self._size == 1

    def __contains__(self, v: int) -> bool:
        for lo, hi in self.ivs:
            if v < lo:
                return False
            if v <= hi:
                return True
        return False

    def __iter__(self) -> Iterator[int]:
        for lo, hi in self.ivs:
            yield from range(lo, hi + 1)

    def __len__(self) -> int:
        return self._size

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Domain) and self.ivs == other.ivs

    def __hash__(self) -> int:
        return hash(self.ivs)

    def __repr__(self) -> str:
        parts = [str(lo) if lo == hi else f"{lo}..{hi}" for lo, hi in self.ivs]
        return "{" + ", ".join(parts) + "}"

    # -- narrowing -------------------------------------------------------------

    def intersect(self, other: Domain) -> Domain:
        out: list[tuple[int, int]] = []
        a, b = self.ivs, other.ivs
        i = j = 0
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo <= hi:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return Domain(tuple(out))

    def restrict(self, lo: int | None = None, hi: int | None = None) -> Domain:
        if (lo is None or lo <= self.min) and (hi is None or hi >= self.max):
            return self
        return self.intersect(
            Domain.interval(self.min if lo is None else lo, self.max if hi is None else hi)
        )

    def remove(self, v: int) -> Domain:
        if v not in self:
            return self
        out: list[tuple[int, int]] = []
        for lo, hi in self.ivs:
            if lo <= v <= hi:
                if lo < v:
                    out.append((lo, v - 1))
                if v < hi:
                    out.append((v + 1, hi))
            else:
                out.append((lo, hi))
        return Domain(tuple(out))

    def keep(self, values: Iterable[int]) -> Domain:
        return self.intersect(Domain.of(values))


EMPTY = Domain()
BOOLEAN = Domain.interval(0, 1)


def union(domains: list[Domain]) -> Domain:
    ivs = sorted(iv for d in domains for iv in d.ivs)
    out: list[tuple[int, int]] = []
    for lo, hi in ivs:
        if out and lo <= out[-1][1] + 1:
            if hi > out[-1][1]:
                out[-1] = (out[-1][0], hi)
        else:
            out.append((lo, hi))
    return Domain(tuple(out))
