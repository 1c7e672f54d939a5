"""Malicious-agent behaviors under the F-total fault model.

Adversaries broadcast on a fixed interval, ignore everything they
receive, and send one common value to all of their out-neighbors at each
transmission (the malicious, non-Byzantine model). Two behaviors cover
the experiments: a sine oscillation of the state, and a piecewise
constant control resampled uniformly at every send instant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: Relative tolerance when counting grid points k * interval <= horizon,
#: so accumulated float error cannot drop the final on-grid transmission.
GRID_TOL = 1e-9


@dataclass(frozen=True)
class SineWave:
    """State follows offset + amplitude * sin(2*pi*t / period).

    Defaults keep the adversary weaving through the regular agents'
    shrinking value band: amplitude 0.5 around offset 0.5, period 10.
    """

    amplitude: float = 0.5
    period: float = 10.0
    offset: float = 0.5

    def __post_init__(self) -> None:
        if self.period <= 0:
            raise ValueError("sine period must be positive")


@dataclass(frozen=True)
class RandomControl:
    """State integrates a control resampled uniformly in [lo, hi] at each send."""

    lo: float = -10.0
    hi: float = 10.0

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError(f"RandomControl needs lo <= hi (got {self.lo} > {self.hi})")


Behavior = SineWave | RandomControl


@dataclass(frozen=True)
class AdversarySpec:
    agent: int
    behavior: Behavior
    send_interval: float

    def __post_init__(self) -> None:
        if self.send_interval <= 0:
            raise ValueError("send_interval must be positive")


def adversary_value(
    spec: AdversarySpec,
    now: float,
    rng: np.random.Generator | None = None,
    initial_value: float = 0.0,
) -> float:
    """Value the adversary would broadcast at time `now`.

    SineWave is a closed form. RandomControl replays the piecewise
    constant walk from the given rng stream: the state starts at
    ``initial_value`` and drifts at each resampled rate between send
    instants, so the rng must be positioned at the stream start.
    """
    if now < 0:
        raise ValueError("now must be nonnegative")
    b = spec.behavior
    if isinstance(b, SineWave):
        return b.offset + b.amplitude * math.sin(2.0 * math.pi * now / b.period)
    if rng is None:
        raise ValueError("RandomControl needs an rng stream")
    value = initial_value
    k = 0
    while True:
        t = k * spec.send_interval
        nxt = (k + 1) * spec.send_interval
        if nxt >= now:
            u = float(rng.uniform(b.lo, b.hi))
            return value + u * (now - t)
        u = float(rng.uniform(b.lo, b.hi))
        value += u * spec.send_interval
        k += 1


def schedule_adversary(
    spec: AdversarySpec,
    horizon: float,
    rng: np.random.Generator | None = None,
    initial_value: float = 0.0,
) -> list[tuple[float, float]]:
    """Transmission times and values on the grid 0, d, 2d, ... <= horizon.

    Every entry is broadcast identically to all out-neighbors. The grid
    count tolerates float drift of k * interval within GRID_TOL relative,
    so `horizon / interval` landing a hair past an exact multiple still
    yields the on-grid final send.
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    k_max = int(math.floor(horizon / spec.send_interval + GRID_TOL))
    out: list[tuple[float, float]] = []
    b = spec.behavior
    if isinstance(b, SineWave):
        for k in range(k_max + 1):
            t = min(k * spec.send_interval, horizon)
            out.append((t, adversary_value(spec, t)))
        return out
    if rng is None:
        raise ValueError("RandomControl needs an rng stream")
    value = initial_value
    for k in range(k_max + 1):
        t = min(k * spec.send_interval, horizon)
        out.append((t, value))
        u = float(rng.uniform(b.lo, b.hi))
        value += u * spec.send_interval
    return out
