"""Scenario configuration: parsing, validation, and per-trial resolution.

A scenario file is plain JSON. It names a graph (a literal edge list or a
random geometric family), one protocol, the fault budget F, the
sensitivity epsilon, a target error level c, a delay model, adversary
specs, initial states, a horizon, and seeding. ``resolve`` turns a config
plus a trial index into the fully materialized inputs the engine runs on,
drawing any randomness (node positions, initial states, adversary walks)
from a stream derived only from (seed, sweep point, trial) so results
never depend on execution order.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Mapping

import numpy as np

from msrsim import adversary as adv
from msrsim import engine, graph as graphmod, protocol
from msrsim.adversary import AdversarySpec, RandomControl, SineWave
from msrsim.engine import DelayModel, FixedDelay, Scenario, UniformDelay, ZeroDelay, delay_bound
from msrsim.graph import DirectedGraph, assign_uniform_weights, from_undirected_edges
from msrsim.protocol import ProtocolKind, epsilon_bound, induced_discrete_delay_bound

log = logging.getLogger("msrsim")

#: Seed-material suffix separating the engine's delay stream from the
#: stream that resolves the scenario itself.
_DELAY_STREAM_TAG = 104729


class ConfigError(ValueError):
    """Scenario validation failed; the message lists every violation."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid scenario config:\n  - " + "\n  - ".join(self.problems))


@dataclass(frozen=True)
class GeometricGraphSpec:
    n: int
    radius: float


@dataclass(frozen=True)
class LiteralGraphSpec:
    graph: DirectedGraph


GraphSpec = GeometricGraphSpec | LiteralGraphSpec


@dataclass(frozen=True)
class SweepSpec:
    """Axes of a Monte Carlo sweep.

    When ``n_adversaries`` is swept, the fault budget F follows the
    adversary count at each point and adversaries occupy the highest node
    ids (node placement is i.i.d., so the choice is immaterial).
    """

    radii: tuple[float, ...] | None = None
    n_adversaries: tuple[int, ...] | None = None
    protocols: tuple[ProtocolKind, ...] | None = None
    adversary_behavior: SineWave | RandomControl | None = None
    send_interval: float | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    protocol: ProtocolKind
    graph_spec: GraphSpec
    epsilon: float
    horizon: float
    f: int = 0
    c: float = 0.0
    delay: DelayModel = ZeroDelay()
    tau_prime: float | None = None
    adversaries: tuple[AdversarySpec, ...] = ()
    initial_states: tuple[float, ...] | None = None
    initial_range: tuple[float, float] | None = None
    initial_u: int = 0
    seed: int = 0
    trials: int = 1
    theorem_scoped: bool = False
    log_events: bool = True
    sweep: SweepSpec | None = None

    @property
    def n(self) -> int:
        return self.graph_spec.n if isinstance(self.graph_spec, GeometricGraphSpec) else self.graph_spec.graph.n

    @property
    def regular_ids(self) -> tuple[int, ...]:
        bad = {a.agent for a in self.adversaries}
        return tuple(i for i in range(self.n) if i not in bad)


# -- parsing -----------------------------------------------------------------


def _parse_behavior(d: Mapping[str, Any]) -> SineWave | RandomControl:
    kind = d.get("type")
    if kind == "sine":
        return SineWave(
            amplitude=float(d.get("amplitude", 0.5)),
            period=float(d.get("period", 10.0)),
            offset=float(d.get("offset", 0.5)),
        )
    if kind == "random_control":
        return RandomControl(lo=float(d.get("lo", -10.0)), hi=float(d.get("hi", 10.0)))
    raise ValueError(f"unknown adversary behavior type {kind!r}")


def _parse_delay(d: Mapping[str, Any] | None) -> DelayModel:
    if d is None:
        return ZeroDelay()
    kind = d.get("type")
    if kind == "zero":
        return ZeroDelay()
    if kind == "fixed":
        return FixedDelay(d=float(d["d"]))
    if kind == "uniform":
        return UniformDelay(max_delay=float(d["max"]))
    raise ValueError(f"unknown delay model type {kind!r}")


def _parse_graph(d: Mapping[str, Any]) -> GraphSpec:
    kind = d.get("type")
    if kind == "geometric":
        return GeometricGraphSpec(n=int(d["n"]), radius=float(d.get("radius", d.get("range"))))
    if kind == "literal":
        n = int(d["n"])
        pairs = [(int(a), int(b)) for a, b in d["edges"]]
        if d.get("bidirectional", True):
            g = from_undirected_edges(n, pairs)
        else:
            g = DirectedGraph(n=n, edges=frozenset(pairs))
        overrides = d.get("weights")
        if overrides:
            weights = {}
            for row in overrides:
                weights[(int(row["to"]), int(row["from"]))] = float(row["weight"])
            g = DirectedGraph(n=n, edges=g.edges, weights=weights)
        else:
            g = assign_uniform_weights(g)
        return LiteralGraphSpec(graph=g)
    raise ValueError(f"unknown graph type {kind!r}")


def config_from_dict(d: Mapping[str, Any]) -> ScenarioConfig:
    """Parse and validate a scenario config; raises ConfigError listing
    every violated invariant."""
    problems: list[str] = []

    def grab(fn, label):
        try:
            return fn()
        except (KeyError, TypeError, ValueError) as exc:
            problems.append(f"{label}: {exc}")
            return None

    kind = grab(lambda: ProtocolKind(d["protocol"]), "protocol")
    gspec = grab(lambda: _parse_graph(d["graph"]), "graph")
    epsilon = grab(lambda: float(d["epsilon"]), "epsilon")
    horizon = grab(lambda: float(d["horizon"]), "horizon")
    delay = grab(lambda: _parse_delay(d.get("delay")), "delay")
    f = grab(lambda: int(d.get("F", 0)), "F")
    c = grab(lambda: float(d.get("c", 0.0)), "c")

    specs: list[AdversarySpec] = []
    for idx, a in enumerate(d.get("adversaries", ())):
        spec = grab(
            lambda a=a: AdversarySpec(
                agent=int(a["agent"]),
                behavior=_parse_behavior(a["behavior"]),
                send_interval=float(a.get("send_interval", d.get("epsilon", 0.0))),
            ),
            f"adversaries[{idx}]",
        )
        if spec is not None:
            specs.append(spec)

    sweep = None
    if "sweep" in d:
        sw = d["sweep"]
        sweep = grab(
            lambda: SweepSpec(
                radii=tuple(float(r) for r in sw["radii"]) if "radii" in sw else None,
                n_adversaries=tuple(int(k) for k in sw["n_adversaries"])
                if "n_adversaries" in sw
                else None,
                protocols=tuple(ProtocolKind(p) for p in sw["protocols"])
                if "protocols" in sw
                else None,
                adversary_behavior=_parse_behavior(sw["adversary_behavior"])
                if "adversary_behavior" in sw
                else None,
                send_interval=float(sw["send_interval"]) if sw.get("send_interval") else None,
            ),
            "sweep",
        )

    init_states = tuple(float(x) for x in d["initial_states"]) if "initial_states" in d else None
    init_range = tuple(float(x) for x in d["initial_range"]) if "initial_range" in d else None

    if problems:
        raise ConfigError(problems)

    cfg = ScenarioConfig(
        protocol=kind,
        graph_spec=gspec,
        epsilon=epsilon,
        horizon=horizon,
        f=f,
        c=c,
        delay=delay,
        tau_prime=float(d["tau_prime"]) if "tau_prime" in d else None,
        adversaries=tuple(specs),
        initial_states=init_states,
        initial_range=init_range,
        initial_u=int(d.get("initial_u", 0)),
        seed=int(d.get("seed", 0)),
        trials=int(d.get("trials", 1)),
        theorem_scoped=bool(d.get("theorem_scoped", False)),
        log_events=bool(d.get("log_events", True)),
        sweep=sweep,
    )
    validate(cfg)
    return cfg


def config_from_file(path) -> ScenarioConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))


# -- validation ----------------------------------------------------------------


def validate(cfg: ScenarioConfig) -> None:
    problems: list[str] = []
    n = cfg.n
    if cfg.epsilon <= 0:
        problems.append(f"epsilon must be positive (got {cfg.epsilon})")
    if cfg.horizon <= 0:
        problems.append(f"horizon must be positive (got {cfg.horizon})")
    if cfg.f < 0:
        problems.append(f"F must be nonnegative (got {cfg.f})")
    if cfg.c < 0:
        problems.append(f"c must be nonnegative (got {cfg.c})")
    if cfg.trials < 1:
        problems.append(f"trials must be >= 1 (got {cfg.trials})")
    if cfg.initial_u not in (-1, 0, 1):
        problems.append(f"initial_u must be in -1/0/1 (got {cfg.initial_u})")
    if cfg.protocol is ProtocolKind.RESILIENT_EVENT_TRIGGERED and cfg.initial_u != 0:
        problems.append("event-triggered agents must start with u=0 (threshold starts at 0)")

    ids = [a.agent for a in cfg.adversaries]
    if len(set(ids)) != len(ids):
        problems.append(f"duplicate adversary ids {ids}")
    for a in cfg.adversaries:
        if not 0 <= a.agent < n:
            problems.append(f"adversary id {a.agent} out of range for n={n}")
        if a.send_interval < cfg.epsilon:
            problems.append(
                f"adversary {a.agent} send_interval {a.send_interval} below epsilon {cfg.epsilon}"
            )
    n_regular = n - len(set(ids))
    if n_regular < 1:
        problems.append("need at least one regular agent")

    if cfg.initial_states is not None and cfg.initial_range is not None:
        problems.append("give initial_states or initial_range, not both")
    if cfg.initial_states is None and cfg.initial_range is None:
        problems.append("one of initial_states / initial_range is required")
    if cfg.initial_states is not None and len(cfg.initial_states) != n_regular:
        problems.append(
            f"initial_states has {len(cfg.initial_states)} entries for {n_regular} regular agents"
        )
    if cfg.initial_range is not None and cfg.initial_range[0] > cfg.initial_range[1]:
        problems.append(f"initial_range {cfg.initial_range} has lo > hi")

    bound = delay_bound(cfg.delay)
    tau_prime = cfg.tau_prime if cfg.tau_prime is not None else bound
    if tau_prime < 0:
        problems.append(f"tau_prime must be nonnegative (got {tau_prime})")
    elif bound > tau_prime + 1e-12:
        problems.append(
            f"delay model can realize {bound} > tau_prime {tau_prime}"
        )

    if cfg.sweep is not None:
        if cfg.sweep.radii is not None and not isinstance(cfg.graph_spec, GeometricGraphSpec):
            problems.append("radius sweep requires a geometric graph spec")
        if cfg.sweep.n_adversaries is not None and cfg.sweep.adversary_behavior is None:
            problems.append("adversary-count sweep requires sweep.adversary_behavior")
        if cfg.sweep.n_adversaries is not None and any(
            k >= n for k in cfg.sweep.n_adversaries
        ):
            problems.append("swept adversary count must leave at least one regular agent")

    if cfg.theorem_scoped:
        if len(ids) > cfg.f:
            problems.append(
                f"theorem-scoped run has {len(ids)} adversaries > F={cfg.f} (F-total model)"
            )
        if isinstance(cfg.graph_spec, LiteralGraphSpec):
            msg = _check_eps_bound(cfg, cfg.graph_spec.graph)
            if msg:
                problems.append(msg)

    if problems:
        raise ConfigError(problems)

    if not cfg.theorem_scoped and cfg.c > 0 and isinstance(cfg.graph_spec, LiteralGraphSpec):
        msg = _check_eps_bound(cfg, cfg.graph_spec.graph)
        if msg:
            log.warning("%s (run is not theorem-scoped; continuing)", msg)


def _check_eps_bound(cfg: ScenarioConfig, g: DirectedGraph) -> str | None:
    if not g.weights:
        return None
    tau_prime = cfg.tau_prime if cfg.tau_prime is not None else delay_bound(cfg.delay)
    tau = induced_discrete_delay_bound(g.n, tau_prime, cfg.epsilon)
    bound = epsilon_bound(g.omega, g.n, tau, cfg.c)
    if cfg.epsilon > bound * (1 + 1e-12):
        return (
            f"epsilon {cfg.epsilon} exceeds the certified bound {bound:.6g} "
            f"(omega={g.omega:.6g}, n={g.n}, tau={tau}, c={cfg.c})"
        )
    return None


# -- resolution ----------------------------------------------------------------


def resolve(cfg: ScenarioConfig, trial: int = 0, stream_key: tuple[int, ...] = ()) -> Scenario:
    """Materialize one trial: graph, initial states, adversary schedules.

    All randomness comes from a stream seeded by (seed, stream_key,
    trial); the engine's delay stream is seeded separately so a resolved
    Scenario reruns bit-identically.
    """
    rng = np.random.default_rng([cfg.seed, *stream_key, trial])

    if isinstance(cfg.graph_spec, GeometricGraphSpec):
        g = graphmod.random_geometric(cfg.graph_spec.n, cfg.graph_spec.radius, rng)
    else:
        g = cfg.graph_spec.graph

    adversary_ids = sorted(a.agent for a in cfg.adversaries)
    regular = [i for i in range(g.n) if i not in set(adversary_ids)]

    if cfg.initial_states is not None:
        init = {i: float(x) for i, x in zip(regular, cfg.initial_states)}
        lo, hi = min(cfg.initial_states), max(cfg.initial_states)
    else:
        lo, hi = cfg.initial_range
        draws = rng.uniform(lo, hi, size=len(regular))
        init = {i: float(x) for i, x in zip(regular, draws)}

    schedules: dict[int, tuple[tuple[float, float], ...]] = {}
    for spec in sorted(cfg.adversaries, key=lambda s: s.agent):
        if isinstance(spec.behavior, RandomControl):
            start = float(rng.uniform(lo, hi))
        else:
            start = 0.0
        sched = adv.schedule_adversary(spec, cfg.horizon, rng, initial_value=start)
        schedules[spec.agent] = tuple(sched)

    if cfg.theorem_scoped and isinstance(cfg.graph_spec, GeometricGraphSpec):
        msg = _check_eps_bound(cfg, g)
        if msg:
            raise ConfigError([msg])

    echo = resolved_dict(cfg)
    echo["trial"] = trial
    echo["stream_key"] = list(stream_key)

    return Scenario(
        graph=g,
        protocol=cfg.protocol,
        f=cfg.f,
        eps=cfg.epsilon,
        horizon=cfg.horizon,
        delay=cfg.delay,
        initial_states=init,
        adversary_schedules=schedules,
        initial_u={i: cfg.initial_u for i in regular},
        delay_seed=(cfg.seed, *stream_key, trial, _DELAY_STREAM_TAG),
        log_events=cfg.log_events,
        echo=echo,
    )


def simulate(cfg: ScenarioConfig, trial: int = 0, stream_key: tuple[int, ...] = ()) -> engine.RunRecord:
    """Resolve one trial of the config and run it."""
    return engine.run(resolve(cfg, trial, stream_key))


# -- echo ----------------------------------------------------------------------


def _behavior_dict(b: SineWave | RandomControl) -> dict:
    if isinstance(b, SineWave):
        return {"type": "sine", "amplitude": b.amplitude, "period": b.period, "offset": b.offset}
    return {"type": "random_control", "lo": b.lo, "hi": b.hi}


def _delay_dict(m: DelayModel) -> dict:
    if isinstance(m, ZeroDelay):
        return {"type": "zero"}
    if isinstance(m, FixedDelay):
        return {"type": "fixed", "d": m.d}
    return {"type": "uniform", "max": m.max_delay}


def resolved_dict(cfg: ScenarioConfig) -> dict:
    """JSON-able echo of the config with all defaults materialized."""
    if isinstance(cfg.graph_spec, GeometricGraphSpec):
        gd: dict[str, Any] = {
            "type": "geometric",
            "n": cfg.graph_spec.n,
            "radius": cfg.graph_spec.radius,
        }
    else:
        g = cfg.graph_spec.graph
        gd = {
            "type": "literal",
            "n": g.n,
            "bidirectional": False,
            "edges": sorted([j, i] for j, i in g.edges),
            "weights": [
                {"from": j, "to": i, "weight": w} for (i, j), w in sorted(g.weights.items())
            ],
        }
    out = {
        "protocol": cfg.protocol.value,
        "graph": gd,
        "F": cfg.f,
        "epsilon": cfg.epsilon,
        "c": cfg.c,
        "delay": _delay_dict(cfg.delay),
        "tau_prime": cfg.tau_prime if cfg.tau_prime is not None else delay_bound(cfg.delay),
        "adversaries": [
            {
                "agent": a.agent,
                "behavior": _behavior_dict(a.behavior),
                "send_interval": a.send_interval,
            }
            for a in cfg.adversaries
        ],
        "initial_u": cfg.initial_u,
        "horizon": cfg.horizon,
        "seed": cfg.seed,
        "trials": cfg.trials,
        "theorem_scoped": cfg.theorem_scoped,
        "log_events": cfg.log_events,
    }
    if cfg.initial_states is not None:
        out["initial_states"] = list(cfg.initial_states)
    if cfg.initial_range is not None:
        out["initial_range"] = list(cfg.initial_range)
    if cfg.sweep is not None:
        sw: dict[str, Any] = {}
        if cfg.sweep.radii is not None:
            sw["radii"] = list(cfg.sweep.radii)
        if cfg.sweep.n_adversaries is not None:
            sw["n_adversaries"] = list(cfg.sweep.n_adversaries)
        if cfg.sweep.protocols is not None:
            sw["protocols"] = [p.value for p in cfg.sweep.protocols]
        if cfg.sweep.adversary_behavior is not None:
            sw["adversary_behavior"] = _behavior_dict(cfg.sweep.adversary_behavior)
        if cfg.sweep.send_interval is not None:
            sw["send_interval"] = cfg.sweep.send_interval
        out["sweep"] = sw
    return out


def sweep_points(cfg: ScenarioConfig) -> list[dict]:
    """Expand the sweep axes into per-point derived configs.

    Each point dict carries: config (ScenarioConfig), protocol, n_adv,
    radius, and the rng stream key (protocol excluded, so protocols are
    compared on identical graphs, initial states, and adversary draws).
    """
    if cfg.sweep is None:
        raise ConfigError(["config has no sweep section"])
    sw = cfg.sweep
    protocols = sw.protocols or (cfg.protocol,)
    n_advs = sw.n_adversaries if sw.n_adversaries is not None else (len(cfg.adversaries),)
    radii: tuple[float | None, ...]
    if sw.radii is not None:
        radii = sw.radii
    elif isinstance(cfg.graph_spec, GeometricGraphSpec):
        radii = (cfg.graph_spec.radius,)
    else:
        radii = (None,)

    points = []
    for p_idx, proto in enumerate(protocols):
        for a_idx, n_adv in enumerate(n_advs):
            for r_idx, radius in enumerate(radii):
                derived = cfg
                if radius is not None:
                    derived = replace(
                        derived, graph_spec=GeometricGraphSpec(n=cfg.n, radius=radius)
                    )
                if sw.n_adversaries is not None:
                    n = derived.n
                    interval = sw.send_interval or cfg.epsilon
                    specs = tuple(
                        AdversarySpec(
                            agent=n - n_adv + k,
                            behavior=sw.adversary_behavior,
                            send_interval=interval,
                        )
                        for k in range(n_adv)
                    )
                    derived = replace(derived, adversaries=specs, f=n_adv)
                derived = replace(derived, protocol=proto, sweep=None, log_events=False)
                points.append(
                    {
                        "config": derived,
                        "protocol": proto,
                        "n_adversaries": n_adv,
                        "radius": radius,
                        "stream_key": (a_idx, r_idx),
                    }
                )
    return points
