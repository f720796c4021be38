"""Infinite level schedules represented by a finite prefix and a tail rule.

Text grammar (used on the command line)::

    0,5,11:+gap      prefix, then gaps growing by one (6, 7, ...)
    0:+2             prefix, then an arithmetic progression
    1:*2             prefix, then a geometric progression
    0,3,4            finite schedule (no tail)
    beta(2:+1)       the beta image of an inner schedule
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator

from ..errors import PreconditionError

__all__ = ["Schedule", "ScheduleExhausted", "parse_schedule", "beta_map", "naturals", "MAX_HORIZON"]

MAX_HORIZON = 1 << 20


class ScheduleExhausted(PreconditionError):
    """A finite schedule was asked for a member past its end."""


@dataclass(frozen=True)
class Schedule:
    """A strictly increasing set of levels.

    ``rule`` is None (finite), ``"+gap"``, ``"+N"``, ``"*N"`` or ``"beta"``;
    for ``"beta"`` the prefix is empty and ``inner`` holds the argument.
    """

    prefix: tuple[int, ...]
    rule: str | None = None
    inner: Schedule | None = None

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(int(x) for x in self.prefix))
        if any(x < 0 for x in self.prefix):
            raise ValueError("schedule members must be natural numbers")
        if any(a >= b for a, b in zip(self.prefix, self.prefix[1:])):
            raise ValueError("schedule prefix must be strictly increasing")
        if self.rule == "beta":
            if self.inner is None or self.prefix:
                raise ValueError("a beta schedule has no prefix of its own")
            return
        if self.rule is not None:
            if not self.prefix:
                raise ValueError("a tail rule needs a nonempty prefix")
            m = re.fullmatch(r"\+gap|\+(\d+)|\*(\d+)", self.rule)
            if m is None:
                raise ValueError(f"unknown tail rule {self.rule!r}")
            if m.group(1) is not None and int(m.group(1)) < 1:
                raise ValueError("arithmetic step must be positive")
            if m.group(2) is not None and (int(m.group(2)) < 2 or self.prefix[-1] < 1):
                raise ValueError("geometric tail needs ratio >= 2 and a positive last member")

    @property
    def is_finite(self) -> bool:
        return self.rule is None

    def __iter__(self) -> Iterator[int]:
        if self.rule == "beta":
            bound = 4
            done = -1
            while True:
                for x in self.upto(bound):
                    if x > done:
                        done = x
                        yield x
                bound *= 2
        yield from self.prefix
        if self.rule is None:
            return
        last = self.prefix[-1]
        if self.rule == "+gap":
            gap = self.prefix[-1] - self.prefix[-2] if len(self.prefix) > 1 else 0
            while True:
                gap += 1
                last += gap
                yield last
        step = int(self.rule[1:])
        while True:
            last = last + step if self.rule[0] == "+" else last * step
            yield last

    def upto(self, bound: int) -> list[int]:
        """Members <= ``bound``."""
        if bound > MAX_HORIZON:
            raise PreconditionError(f"horizon {bound} exceeds {MAX_HORIZON}")
        if self.rule == "beta":
            out = {0}
            k = 1
            while k <= bound:
                out.add(k)
                k *= 2
            for i in self.inner.upto(max(bound, 1).bit_length()):
                lo, hi = (1 << i) + 1, (1 << (i + 1)) - 1
                out.update(range(lo, min(hi, bound) + 1))
            return sorted(x for x in out if x <= bound)
        out = []
        for x in self:
            if x > bound:
                break
            out.append(x)
        return out

    def __contains__(self, i: int) -> bool:
        return i in self.upto(i)

    @property
    def inf(self) -> int:
        for x in self:
            return x
        raise ScheduleExhausted("the empty schedule has no least member")

    def next_after(self, i: int) -> int:
        """The first member strictly larger than ``i``."""
        if self.rule == "beta":
            bound = max(2 * i + 2, 4)
            return next(x for x in self.upto(bound) if x > i)
        for x in self:
            if x > i:
                return x
        raise ScheduleExhausted(f"finite schedule {self} has no member after {i}")

    def n(self, i: int, k: int = 1) -> int:
        """``n_S^k(i)``; requires ``i`` to be a member."""
        if i not in self:
            raise PreconditionError(f"{i} is not in the schedule {self}")
        for _ in range(k):
            i = self.next_after(i)
        return i

    def is_subset_of(self, other: Schedule, bound: int) -> bool:
        return set(self.upto(bound)) <= set(other.upto(bound))

    def __str__(self) -> str:
        if self.rule == "beta":
            return f"beta({self.inner})"
        text = ",".join(map(str, self.prefix))
        return text if self.rule is None else f"{text}:{self.rule}"


def parse_schedule(text: str) -> Schedule:
    text = text.strip()
    m = re.fullmatch(r"beta\((.*)\)", text)
    if m:
        inner = m.group(1).strip()
        return beta_map(parse_schedule(inner) if inner else Schedule(()))
    head, _, rule = text.partition(":")
    try:
        prefix = tuple(int(x) for x in head.split(",") if x.strip())
        return Schedule(prefix, rule.strip() or None)
    except ValueError as exc:
        raise ValueError(f"bad schedule {text!r}: {exc}") from exc


def beta_map(S: Schedule) -> Schedule:
    """{0,1,2,4,8,...} together with the runs 2^i+1 .. 2^(i+1)-1 for i in S."""
    return Schedule((), "beta", S)


def naturals(start: int = 0) -> Schedule:
    return Schedule((start,), "+1")
