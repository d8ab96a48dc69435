"""Shared test helpers: naming shortcuts, oracles, and diagram generators."""

from __future__ import annotations

import itertools
import math
import random
from typing import Iterable, Optional, Sequence

from bipkit import diagram as dg
from bipkit import encode_macros
from bipkit.logic import allowed_interactions
from bipkit.model import (
    ArchitectureDiagram,
    CardExpr,
    ComponentType,
    ConnectorMotif,
    Interaction,
    MotifEnd,
    PortInstance,
    PortTypeRef,
    SYNCHRON,
    TRIGGER,
)


def pi(type_name: str, index: int, port: str) -> PortInstance:
    return PortInstance(type_name, index, port)


def names(interactions: Iterable[Interaction]) -> set[tuple[str, ...]]:
    """Render a set of interactions as sorted tuples of 'Type.port#i' strings."""
    return {tuple(sorted(str(p) for p in interaction)) for interaction in interactions}


def ports_only(interactions: Iterable[Interaction]) -> set[str]:
    """Compact rendering by port name and index, e.g. {'p1 q2', 'q1'}."""
    out = set()
    for interaction in interactions:
        out.add(" ".join(sorted(f"{p.port}{p.index}" for p in interaction)))
    return out


def subsets(universe: Sequence[PortInstance], include_empty: bool = False):
    start = 0 if include_empty else 1
    for size in range(start, len(universe) + 1):
        for combo in itertools.combinations(universe, size):
            yield frozenset(combo)


def macro_interactions(d: ArchitectureDiagram, binding) -> frozenset[Interaction]:
    """The macro-derived allowed set: encode, expand, enumerate."""
    spec = encode_macros(d)
    counts = dg.instance_counts(d, binding)
    return allowed_interactions(spec.requires, spec.accepts, counts)


def loop_type(name: str, ports: Sequence[str], cardinality: CardExpr) -> ComponentType:
    """A component type whose every port self-loops on a single state."""
    from bipkit.model import ENFORCEABLE, Transition

    return ComponentType(
        name=name,
        cardinality=cardinality,
        port_types=frozenset(ports),
        states=frozenset({"s"}),
        initial_states=frozenset({"s"}),
        transitions=tuple(
            Transition(kind=ENFORCEABLE, label=p, source="s", destination="s")
            for p in sorted(ports)
        ),
    )


def motif_diagram(
    specs: Sequence[tuple[int, int, int]], typings: Sequence[str]
) -> ArchitectureDiagram:
    """Single-motif diagram over fresh types A, B with one port each."""
    names_ = ["A", "B"][: len(specs)]
    types = tuple(loop_type(n, ["p"], CardExpr.lit(spec[0])) for n, spec in zip(names_, specs))
    ends = tuple(
        MotifEnd(
            port=PortTypeRef(name, "p"),
            multiplicity=CardExpr.lit(m),
            degree=CardExpr.lit(deg),
            typing=typing,
        )
        for name, (n, m, deg), typing in zip(names_, specs, typings)
    )
    return ArchitectureDiagram(
        name="generated",
        component_types=types,
        motifs=(ConnectorMotif(name="only", ends=ends),),
    )


def in_encoder_envelope(specs: Sequence[tuple[int, int, int]], typings: Sequence[str]) -> bool:
    """Diagrams whose macro encoding is defined to match the diagram semantics.

    Singleton motifs render as dash rules, which denote lone-port
    interactions, so they carry multiplicity 1 here.  In a motif with
    triggers the macros never bound how many instances of a multi-unit end
    join an interaction, so any end with multiplicity above 1 must involve
    all instances of its type.
    """
    if len(specs) == 1:
        return specs[0][1] == 1
    if any(t == TRIGGER for t in typings):
        return all(m == 1 or m == n for (n, m, _) in specs)
    return True


def iter_typed_motif_space(bound: int = 3):
    """Every single-motif diagram shape with 1..2 ends, n,m,d <= bound, and
    every synchron/trigger typing combination."""
    values = range(1, bound + 1)
    for spec in itertools.product(values, repeat=3):
        for typing in (SYNCHRON, TRIGGER):
            yield (spec,), (typing,)
    for spec1 in itertools.product(values, repeat=3):
        for spec2 in itertools.product(values, repeat=3):
            for typings in itertools.product((SYNCHRON, TRIGGER), repeat=2):
                yield (spec1, spec2), typings


def random_encodable_diagram(
    rng: random.Random, bound: int = 3
) -> Optional[ArchitectureDiagram]:
    """One draw from the encodable single-motif space inside the encoder
    envelope; None when the draw was rejected."""
    k = rng.choice([1, 2])
    ns = [rng.randint(1, bound) for _ in range(k)]
    ms = [rng.randint(1, n) for n in ns]
    typings = [rng.choice([SYNCHRON, TRIGGER]) for _ in range(k)]

    size = math.prod(math.comb(n, m) for n, m in zip(ns, ms))
    specs = []
    for n, m in zip(ns, ms):
        if (size * m) % n:
            return None
        deg = size * m // n
        if not 1 <= deg <= bound:
            return None
        specs.append((n, m, deg))
    if not in_encoder_envelope(specs, typings):
        return None
    return motif_diagram(specs, typings)
