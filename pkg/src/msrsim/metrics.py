"""Post-run verdicts: safety, consensus at an error level, and counter
aggregation for protocol comparisons.

The safety interval is the hull of the regular agents' initial states;
regular trajectories must never leave it. Consensus at level c asks the
final regular spread to be at most c, and is only decided on runs where
every regular control is zero at the horizon ("quiesced"); other runs
are inconclusive, never silently successful.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from msrsim.engine import Counters, RunRecord

#: Absolute slack absorbing float roundoff of exact convex updates.
SAFETY_TOL = 1e-9


class ConsensusOutcome(enum.Enum):
    ACHIEVED = "achieved"
    FAILED = "failed"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class ConsensusVerdict:
    """Per-run summary row."""

    safety_holds: bool
    safety_interval: tuple[float, float]
    final_spread: float
    consensus_at_c: bool
    quiesced: bool
    per_agent_counters: dict[int, tuple[int, int]]


def safety_interval(record: RunRecord, regular: Iterable[int] | None = None) -> tuple[float, float]:
    """Hull of the regular agents' initial states."""
    reg = tuple(regular) if regular is not None else record.regular
    initials = [record.segments[i][0][1] for i in reg]
    return min(initials), max(initials)


def check_safety(record: RunRecord, regular: Iterable[int] | None = None) -> bool:
    """True iff every regular trajectory stays inside the safety interval.

    Trajectories are piecewise linear, so extrema sit at segment
    endpoints; it suffices to check each segment start plus the final
    state. A 1e-9-scale slack absorbs float roundoff of the exact
    arithmetic.
    """
    reg = tuple(regular) if regular is not None else record.regular
    lo, hi = safety_interval(record, reg)
    tol = SAFETY_TOL * max(1.0, abs(lo), abs(hi))
    for i in reg:
        for _, x, _ in record.segments[i]:
            if x < lo - tol or x > hi + tol:
                return False
        x = record.final_states[i]
        if x < lo - tol or x > hi + tol:
            return False
    return True


def final_spread(record: RunRecord, regular: Iterable[int] | None = None) -> float:
    reg = tuple(regular) if regular is not None else record.regular
    vals = [record.final_states[i] for i in reg]
    return max(vals) - min(vals)


def check_consensus(
    record: RunRecord,
    regular: Iterable[int] | None = None,
    c: float = 0.0,
) -> ConsensusOutcome:
    """Consensus at error level c, decided only on quiesced runs.

    A run that has not quiesced by the horizon is INCONCLUSIVE: the
    limiting spread cannot be read off a still-moving trajectory.
    """
    if c < 0:
        raise ValueError("c must be nonnegative")
    if not record.quiesced:
        return ConsensusOutcome.INCONCLUSIVE
    spread = final_spread(record, regular)
    return ConsensusOutcome.ACHIEVED if spread <= c else ConsensusOutcome.FAILED


def quiescence_time(record: RunRecord, regular: Iterable[int] | None = None) -> float | None:
    """Earliest time after which every regular control stays zero.

    None when some agent's control is still nonzero at the horizon.
    """
    reg = tuple(regular) if regular is not None else record.regular
    t_q = 0.0
    for i in reg:
        segs = record.segments[i]
        if segs[-1][2] != 0:
            return None
        for k in range(len(segs) - 1, -1, -1):
            if segs[k][2] != 0:
                t_q = max(t_q, segs[k + 1][0])
                break
    return t_q


def transmissions_after(record: RunRecord, t: float, regular: Iterable[int] | None = None) -> int:
    """Number of regular broadcasts strictly after time t (from the event log)."""
    reg = set(regular) if regular is not None else set(record.regular)
    return sum(
        1 for e in record.events if e.kind == "transmit" and e.agent in reg and e.time > t
    )


def aggregate_counters(
    records: Sequence[RunRecord],
    regular: Iterable[int] | None = None,
) -> tuple[float, float]:
    """Mean updates and transmissions per regular agent across records."""
    if not records:
        raise ValueError("need at least one record")
    tot_u = tot_t = count = 0
    for r in records:
        reg = tuple(regular) if regular is not None else r.regular
        for i in reg:
            c = r.counters[i]
            tot_u += c.updates
            tot_t += c.transmissions
            count += 1
    return tot_u / count, tot_t / count


def success_rate(
    records_by_point: Mapping, c: float
) -> dict:
    """Fraction of runs per sweep point that achieved consensus at level c."""
    out = {}
    for point, records in records_by_point.items():
        if not records:
            raise ValueError(f"sweep point {point!r} has no records")
        wins = sum(
            1 for r in records if check_consensus(r, c=c) is ConsensusOutcome.ACHIEVED
        )
        out[point] = wins / len(records)
    return out


def build_verdict(record: RunRecord, c: float) -> ConsensusVerdict:
    reg = record.regular
    counters = {i: (record.counters[i].updates, record.counters[i].transmissions) for i in reg}
    return ConsensusVerdict(
        safety_holds=check_safety(record),
        safety_interval=safety_interval(record),
        final_spread=final_spread(record),
        consensus_at_c=final_spread(record) <= c,
        quiesced=record.quiesced,
        per_agent_counters=counters,
    )
