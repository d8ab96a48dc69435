"""Cyclic execution engine producing deterministic JSON traces.

Each cycle runs four ordered sub-steps:

  (a) apply the cycle's scripted guard updates;
  (b) enqueue the cycle's scripted spontaneous events, then let every
      instance consume the head of its queue if a matching spontaneous
      transition is enabled (at most one firing per instance per cycle);
  (c) among the precomputed allowed interactions, keep those whose ports are
      all enabled, pick one by policy, and fire it;
  (d) fire internal transitions eagerly, at most one state's worth of
      firings per instance, in deterministic instance/declaration order.

A cycle in which nothing fired is recorded as idle.  Identical inputs give
byte-identical trace JSON: the only randomness is an explicitly specified
64-bit generator seeded from the run configuration.

The generator is splitmix64: state advances by adding the 64-bit constant
0x9E3779B97F4A7C15; the output mixes z = state with z ^= z >> 30 followed by
multiplication with 0xBF58476D1CE4E5B9, z ^= z >> 27, multiplication with
0x94D049BB133111EB, and z ^= z >> 31, all modulo 2**64.  An interaction is
picked from n feasible candidates (sorted) by next() modulo n.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from . import diagram as diagram_mod
from .encoder import encode_macros
from .errors import BipError, LivelockError, ScriptError
from .logic import allowed_interactions
from .model import (
    ArchitectureDiagram,
    ComponentType,
    ENFORCEABLE,
    INTERNAL,
    Interaction,
    PortInstance,
    SPONTANEOUS,
    Transition,
)

MASK64 = (1 << 64) - 1

UNIFORM_RANDOM = "uniform-random"
LEXICOGRAPHIC_FIRST = "lexicographic-first"
POLICIES = (UNIFORM_RANDOM, LEXICOGRAPHIC_FIRST)

DIAGRAM_SOURCE = "diagram"
MACRO_SOURCE = "macros"

DEFAULT_MAX_CYCLES = 10**5
TRACE_SCHEMA = 1


class SplitMix64:
    """The documented trace generator; reproducible across implementations."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def pick_index(self, n: int) -> int:
        return self.next_u64() % n


@dataclass(frozen=True)
class EngineConfig:
    cycles: int
    seed: int = 0
    policy: str = UNIFORM_RANDOM
    max_cycles: int = DEFAULT_MAX_CYCLES

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}")
        if not 0 <= self.cycles <= self.max_cycles:
            raise ValueError(f"cycles must lie in [0, {self.max_cycles}]")


@dataclass(frozen=True)
class ScriptEntry:
    events: tuple[tuple[str, str], ...] = ()  # (instance id, event)
    guards: tuple[tuple[str, str, bool], ...] = ()  # (instance id, guard, value)


@dataclass(frozen=True)
class EventScript:
    entries: tuple[ScriptEntry, ...] = ()

    @classmethod
    def from_json(cls, text: str) -> "EventScript":
        data = json.loads(text)
        if not isinstance(data, dict) or data.get("schema") != 1:
            raise ScriptError('event scripts need a {"schema": 1, "cycles": [...]} object')
        entries = []
        for raw in data.get("cycles", []):
            events = tuple((e["target"], e["event"]) for e in raw.get("events", []))
            guards = tuple(
                (g["target"], g["guard"], bool(g["value"])) for g in raw.get("guards", [])
            )
            entries.append(ScriptEntry(events=events, guards=guards))
        return cls(entries=tuple(entries))

    def to_json(self) -> str:
        payload = {
            "schema": 1,
            "cycles": [
                {
                    "events": [{"target": t, "event": e} for t, e in entry.events],
                    "guards": [
                        {"target": t, "guard": g, "value": v} for t, g, v in entry.guards
                    ],
                }
                for entry in self.entries
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


@dataclass
class InstanceState:
    type_name: str
    index: int
    current: str
    queue: list[str] = field(default_factory=list)
    guards: dict[str, bool] = field(default_factory=dict)

    @property
    def instance_id(self) -> str:
        return f"{self.type_name}#{self.index}"


@dataclass
class SystemState:
    """Runtime state of every instance; owned exclusively by one run."""

    instances: dict[str, InstanceState]

    def ordered(self) -> list[InstanceState]:
        return [self.instances[key] for key in sorted(self.instances, key=_id_sort_key)]


def _id_sort_key(instance_id: str) -> tuple[str, int]:
    type_name, _, index = instance_id.rpartition("#")
    return (type_name, int(index))


def instance_id(type_name: str, index: int) -> str:
    return f"{type_name}#{index}"


def init_state(
    d: ArchitectureDiagram,
    binding: diagram_mod.Binding,
    initial_guards: Optional[Mapping[str, Mapping[str, bool]]] = None,
) -> SystemState:
    """Every instance at its initial state, empty queues, guards false unless
    overridden by initial_guards[instance_id][guard]."""
    diagram_mod.check_binding(d, binding)
    initial_guards = initial_guards or {}
    instances: dict[str, InstanceState] = {}
    for ct in d.component_types:
        count = ct.cardinality.evaluate(binding)
        for index in range(1, count + 1):
            key = instance_id(ct.name, index)
            guards = {name: False for name in sorted(ct.guards)}
            guards.update(initial_guards.get(key, {}))
            unknown = set(guards) - ct.guards
            if unknown:
                raise ScriptError(f"unknown guards for {key}: {', '.join(sorted(unknown))}")
            instances[key] = InstanceState(
                type_name=ct.name, index=index, current=ct.initial_state, guards=guards
            )
    return SystemState(instances=instances)


def _guard_true(tr: Transition, guards: Mapping[str, bool]) -> bool:
    return tr.guard is None or tr.guard.evaluate(guards)


def enabled_ports(state: SystemState, d: ArchitectureDiagram) -> frozenset[PortInstance]:
    """Port instances whose enforceable transition is ready to fire."""
    enabled = set()
    for inst in state.ordered():
        ct = d.component_type(inst.type_name)
        for tr in ct.transitions:
            if tr.kind == ENFORCEABLE and tr.source == inst.current and _guard_true(tr, inst.guards):
                enabled.add(PortInstance(inst.type_name, inst.index, tr.label))
    return frozenset(enabled)


def interaction_sort_key(interaction: Interaction) -> tuple:
    return tuple(sorted(interaction))


def _first_transition(
    ct: ComponentType, kind: str, label: Optional[str], state: str, guards: Mapping[str, bool]
) -> Optional[Transition]:
    for tr in ct.transitions:
        if tr.kind != kind or tr.source != state:
            continue
        if label is not None and tr.label != label:
            continue
        if _guard_true(tr, guards):
            return tr
    return None


@dataclass(frozen=True)
class TraceCycle:
    cycle: int
    spontaneous: tuple[dict, ...]
    interaction: Optional[tuple[dict, ...]]
    internal: tuple[dict, ...]
    idle: bool

    def to_dict(self) -> dict:
        return {
            "cycle": self.cycle,
            "spontaneous": list(self.spontaneous),
            "interaction": list(self.interaction) if self.interaction is not None else None,
            "internal": list(self.internal),
            "idle": self.idle,
        }


def step_cycle(
    state: SystemState,
    d: ArchitectureDiagram,
    entry: Optional[ScriptEntry],
    allowed_sorted: Sequence[Interaction],
    rng: SplitMix64,
    policy: str,
    cycle_index: int = 0,
) -> TraceCycle:
    """Run one engine cycle, mutating ``state`` and returning its record."""
    entry = entry or ScriptEntry()

    # (a) guard updates
    for target, guard, value in entry.guards:
        inst = state.instances.get(target)
        if inst is None:
            raise ScriptError(f"guard update targets unknown instance {target!r}")
        if guard not in d.component_type(inst.type_name).guards:
            raise ScriptError(f"{target} declares no guard {guard!r}")
        inst.guards[guard] = value

    # (b) spontaneous events: enqueue, then consume at most one per instance
    for target, event in entry.events:
        inst = state.instances.get(target)
        if inst is None:
            raise ScriptError(f"event targets unknown instance {target!r}")
        if event not in d.component_type(inst.type_name).spontaneous_events:
            raise ScriptError(f"{target} declares no spontaneous event {event!r}")
        inst.queue.append(event)

    spontaneous = []
    for inst in state.ordered():
        if not inst.queue:
            continue
        head = inst.queue[0]
        ct = d.component_type(inst.type_name)
        tr = _first_transition(ct, SPONTANEOUS, head, inst.current, inst.guards)
        if tr is None:
            continue
        inst.queue.pop(0)
        spontaneous.append(
            {
                "instance": inst.instance_id,
                "event": head,
                "from": tr.source,
                "to": tr.destination,
            }
        )
        inst.current = tr.destination

    # (c) one enforceable interaction, picked among the feasible ones
    enabled = enabled_ports(state, d)
    feasible = [
        a
        for a in allowed_sorted
        if a <= enabled and len({(p.component_type, p.index) for p in a}) == len(a)
    ]
    interaction_record = None
    if feasible:
        if policy == LEXICOGRAPHIC_FIRST:
            choice = feasible[0]
        else:
            choice = feasible[rng.pick_index(len(feasible))]
        fired = []
        for port in sorted(choice):
            inst = state.instances[instance_id(port.component_type, port.index)]
            ct = d.component_type(inst.type_name)
            tr = _first_transition(ct, ENFORCEABLE, port.port, inst.current, inst.guards)
            if tr is None:
                raise BipError(f"port {port} was enabled but lost its transition")
            fired.append(
                {
                    "instance": inst.instance_id,
                    "port": port.port,
                    "from": tr.source,
                    "to": tr.destination,
                }
            )
            inst.current = tr.destination
        interaction_record = tuple(fired)

    # (d) internal transitions, eagerly, bounded per instance by |states|
    internal = []
    for inst in state.ordered():
        ct = d.component_type(inst.type_name)
        budget = len(ct.states)
        count = 0
        while True:
            tr = _first_transition(ct, INTERNAL, None, inst.current, inst.guards)
            if tr is None:
                break
            if count >= budget:
                raise LivelockError(inst.instance_id)
            internal.append(
                {"instance": inst.instance_id, "from": tr.source, "to": tr.destination}
            )
            inst.current = tr.destination
            count += 1

    idle = not spontaneous and interaction_record is None and not internal
    return TraceCycle(
        cycle=cycle_index,
        spontaneous=tuple(spontaneous),
        interaction=interaction_record,
        internal=tuple(internal),
        idle=idle,
    )


def compute_allowed(
    d: ArchitectureDiagram, binding: diagram_mod.Binding, source: str = DIAGRAM_SOURCE
) -> list[Interaction]:
    """The allowed interaction set, sorted canonically, from either source."""
    counts = diagram_mod.instance_counts(d, binding)
    if source == DIAGRAM_SOURCE:
        allowed = diagram_mod.diagram_interactions(d, binding)
    elif source == MACRO_SOURCE:
        spec = encode_macros(d)
        allowed = allowed_interactions(spec.requires, spec.accepts, counts)
    else:
        raise ValueError(f"unknown interaction source {source!r}")
    return sorted(allowed, key=interaction_sort_key)


def run(
    d: ArchitectureDiagram,
    binding: diagram_mod.Binding,
    config: EngineConfig,
    script: Optional[EventScript] = None,
    source: str = DIAGRAM_SOURCE,
    initial_guards: Optional[Mapping[str, Mapping[str, bool]]] = None,
) -> dict:
    """Execute the system for the configured number of cycles.

    Returns the trace object; serialize with :func:`trace_to_json` for the
    byte-stable on-disk form.
    """
    allowed_sorted = compute_allowed(d, binding, source)
    state = init_state(d, binding, initial_guards)
    rng = SplitMix64(config.seed)
    entries = script.entries if script else ()

    cycles = []
    for index in range(config.cycles):
        entry = entries[index] if index < len(entries) else None
        record = step_cycle(state, d, entry, allowed_sorted, rng, config.policy, index)
        cycles.append(record.to_dict())

    return {
        "schema": TRACE_SCHEMA,
        "model": d.name,
        "binding": {name: binding[name] for name in sorted(binding)},
        "seed": config.seed,
        "policy": config.policy,
        "cycles": cycles,
    }


def trace_to_json(trace: dict) -> str:
    return json.dumps(trace, indent=2, sort_keys=True) + "\n"


class ReplayError(BipError):
    """A trace failed replay validation."""


def replay_validate(
    trace: dict,
    d: ArchitectureDiagram,
    binding: diagram_mod.Binding,
    script: Optional[EventScript] = None,
    allowed: Optional[Iterable[Interaction]] = None,
    initial_guards: Optional[Mapping[str, Mapping[str, bool]]] = None,
) -> dict:
    """Re-simulate a trace and verify safety and state soundness.

    Checks, for every cycle: each fired spontaneous/internal transition
    existed, was enabled, and left the recorded source state; the fired
    interaction is a member of the allowed set and a subset of the enabled
    ports at that moment.  Returns {"interactions": n, "idle": m} statistics.
    """
    if allowed is None:
        allowed = diagram_mod.diagram_interactions(d, binding)
    allowed = set(allowed)
    state = init_state(d, binding, initial_guards)
    entries = script.entries if script else ()

    fired_count = 0
    idle_count = 0
    for index, cycle in enumerate(trace["cycles"]):
        entry = entries[index] if index < len(entries) else ScriptEntry()
        for target, guard, value in entry.guards:
            state.instances[target].guards[guard] = value
        for target, event in entry.events:
            state.instances[target].queue.append(event)

        for record in cycle["spontaneous"]:
            inst = state.instances[record["instance"]]
            ct = d.component_type(inst.type_name)
            if inst.current != record["from"]:
                raise ReplayError(
                    f"cycle {index}: {record['instance']} fired {record['event']} from "
                    f"{record['from']} but was in {inst.current}"
                )
            tr = _first_transition(ct, SPONTANEOUS, record["event"], inst.current, inst.guards)
            if tr is None or tr.destination != record["to"]:
                raise ReplayError(
                    f"cycle {index}: no enabled spontaneous transition matches {record}"
                )
            if not inst.queue or inst.queue[0] != record["event"]:
                raise ReplayError(f"cycle {index}: {record['event']} was not at the queue head")
            inst.queue.pop(0)
            inst.current = tr.destination

        if cycle["interaction"] is not None:
            ports = frozenset(
                PortInstance(*_split_id(r["instance"]), r["port"]) for r in cycle["interaction"]
            )
            if ports not in allowed:
                raise ReplayError(
                    f"cycle {index}: fired interaction {sorted(map(str, ports))} is not allowed"
                )
            enabled = enabled_ports(state, d)
            if not ports <= enabled:
                raise ReplayError(f"cycle {index}: fired interaction was not fully enabled")
            for record in cycle["interaction"]:
                inst = state.instances[record["instance"]]
                ct = d.component_type(inst.type_name)
                if inst.current != record["from"]:
                    raise ReplayError(
                        f"cycle {index}: {record['instance']} was in {inst.current}, "
                        f"trace says {record['from']}"
                    )
                tr = _first_transition(ct, ENFORCEABLE, record["port"], inst.current, inst.guards)
                if tr is None or tr.destination != record["to"]:
                    raise ReplayError(f"cycle {index}: interaction record {record} not enabled")
                inst.current = tr.destination
            fired_count += 1

        for record in cycle["internal"]:
            inst = state.instances[record["instance"]]
            ct = d.component_type(inst.type_name)
            if inst.current != record["from"]:
                raise ReplayError(
                    f"cycle {index}: internal from {record['from']} but state is {inst.current}"
                )
            tr = _first_transition(ct, INTERNAL, None, inst.current, inst.guards)
            if tr is None or tr.destination != record["to"]:
                raise ReplayError(f"cycle {index}: internal record {record} not enabled")
            inst.current = tr.destination

        if cycle["idle"]:
            idle_count += 1

    return {"interactions": fired_count, "idle": idle_count}


def _split_id(instance: str) -> tuple[str, int]:
    type_name, _, index = instance.rpartition("#")
    return type_name, int(index)
