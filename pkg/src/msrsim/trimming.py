"""Extreme-value trimming applied before each neighborhood average.

Each regular agent compares the stored neighbor values against its own
state and discards up to F strictly-larger and up to F strictly-smaller
entries, keeping a middle band that no F-limited set of malicious senders
can push outside the honest range. Values equal to the agent's own state
are never discarded; the agent's own state is not a candidate (it enters
the update through the self-weight instead).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable


@dataclass(frozen=True)
class ValueWithSource:
    """One stored neighbor value, tagged with the sender's node id."""

    source: int
    value: float


def msr_trim(own_value: float, candidates: Iterable[ValueWithSource], f: int) -> set[int]:
    """Return the source ids that survive the trim.

    Removes the f largest among values strictly greater than ``own_value``
    (all of them if fewer than f are strictly greater) and symmetrically
    the f smallest among values strictly below. Ties between equal values
    break by source id: the higher id counts as more extreme and is
    removed first, which makes the result independent of input order.
    """
    if f < 0:
        raise ValueError("f must be nonnegative")
    cand = list(candidates)
    seen: set[int] = set()
    for c in cand:
        if c.source in seen:
            raise ValueError(f"duplicate source id {c.source} in trim candidates")
        seen.add(c.source)

    above = [c for c in cand if c.value > own_value]
    below = [c for c in cand if c.value < own_value]
    # largest-first on the high side, smallest-first on the low side;
    # among equal values the higher source id is treated as more extreme
    above.sort(key=lambda c: (-c.value, -c.source))
    below.sort(key=lambda c: (c.value, -c.source))
    removed = {c.source for c in above[:f]}
    removed.update(c.source for c in below[:f])
    return {c.source for c in cand if c.source not in removed}
