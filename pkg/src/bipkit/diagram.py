"""Diagram instantiation: configurations, conformance, and encodability.

A connector motif plus a cardinality binding defines a set of configurations
(sets of connectors).  This module enumerates them by backtracking (the
brute-force oracle), checks conformance of a given configuration, computes
matching factors, and decides whether the diagram pins down exactly one
configuration, in which case it is expressible in the macro notation and
:func:`diagram_interactions` gives its interaction semantics in closed form.

The uniqueness conditions, per connector motif and per end: the multiplicity
may not exceed the owning type's cardinality, and the matching factor
n*degree/multiplicity must equal the number of distinct connectors the motif
can form, i.e. the product over its ends of C(n_q, m_q).  When they hold the
unique configuration is the set of all possible connectors.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Optional, Sequence

from .connector import motif_connector_interactions
from .errors import CapacityError, EncodabilityError
from .model import (
    ArchitectureDiagram,
    CardExpr,
    ComponentType,
    Configuration,
    Connector,
    ConnectorMotif,
    Interaction,
    MotifEnd,
    PortInstance,
    PortTypeRef,
    SYNCHRON,
)

Binding = Mapping[str, int]

DEFAULT_MAX_NODES = 10**6


def check_binding(d: ArchitectureDiagram, binding: Binding) -> None:
    """The binding must cover every parameter with a non-negative integer."""
    missing = sorted(d.parameters - set(binding))
    if missing:
        raise KeyError("unbound parameters: " + ", ".join(missing))
    for name, value in binding.items():
        if not isinstance(value, int) or value < 0:
            raise ValueError(f"parameter {name}={value!r} is not a non-negative integer")


def cardinality_of(d: ArchitectureDiagram, type_name: str, binding: Binding) -> int:
    return d.component_type(type_name).cardinality.evaluate(binding)


def instance_counts(d: ArchitectureDiagram, binding: Binding) -> dict[str, int]:
    return {ct.name: ct.cardinality.evaluate(binding) for ct in d.component_types}


def port_instances(
    d: ArchitectureDiagram, binding: Binding, refs: Optional[Sequence[PortTypeRef]] = None
) -> list[PortInstance]:
    """All port instances of the given port types (default: all motif ports)."""
    if refs is None:
        refs = sorted({end.port for motif in d.motifs for end in motif.ends})
    counts = instance_counts(d, binding)
    return [
        PortInstance(ref.component_type, index, ref.port)
        for ref in sorted(set(refs))
        for index in range(1, counts[ref.component_type] + 1)
    ]


def matching_factor(d: ArchitectureDiagram, end: MotifEnd, binding: Binding) -> Fraction:
    """n * degree / multiplicity for the end's port type, as an exact rational."""
    n = cardinality_of(d, end.port.component_type, binding)
    m = end.multiplicity.evaluate(binding)
    deg = end.degree.evaluate(binding)
    return Fraction(n * deg, m)


def max_connectors(d: ArchitectureDiagram, motif: ConnectorMotif, binding: Binding) -> int:
    """Number of distinct connectors the motif can form: prod of C(n_q, m_q)."""
    product = 1
    for end in motif.ends:
        n = cardinality_of(d, end.port.component_type, binding)
        m = end.multiplicity.evaluate(binding)
        product *= math.comb(n, m)
    return product


@dataclass(frozen=True)
class EndCheck:
    motif: str
    port: PortTypeRef
    cardinality: int
    multiplicity: int
    degree: int
    factor: Fraction
    max_connectors: int
    multiplicity_ok: bool  # multiplicity <= cardinality
    factor_ok: bool  # factor == max_connectors (an exact integer equality)

    @property
    def ok(self) -> bool:
        return self.multiplicity_ok and self.factor_ok


@dataclass(frozen=True)
class EncodabilityReport:
    ends: tuple[EndCheck, ...]

    @property
    def overall(self) -> bool:
        return all(e.ok for e in self.ends)

    def failures(self) -> list[EndCheck]:
        return [e for e in self.ends if not e.ok]


def check_encodable(d: ArchitectureDiagram, binding: Binding) -> EncodabilityReport:
    """Evaluate the uniqueness conditions for every end of every motif."""
    check_binding(d, binding)
    checks = []
    for motif in d.motifs:
        limit = max_connectors(d, motif, binding)
        for end in motif.ends:
            n = cardinality_of(d, end.port.component_type, binding)
            m = end.multiplicity.evaluate(binding)
            deg = end.degree.evaluate(binding)
            factor = matching_factor(d, end, binding)
            checks.append(
                EndCheck(
                    motif=motif.name,
                    port=end.port,
                    cardinality=n,
                    multiplicity=m,
                    degree=deg,
                    factor=factor,
                    max_connectors=limit,
                    multiplicity_ok=m <= n,
                    factor_ok=factor == limit,
                )
            )
    return EncodabilityReport(tuple(checks))


def possible_connectors(
    d: ArchitectureDiagram, motif: ConnectorMotif, binding: Binding
) -> list[Connector]:
    """Every connector the motif can form: one m_q-subset of instances per end."""
    per_end: list[list[tuple[tuple[PortInstance, str], ...]]] = []
    for end in motif.ends:
        n = cardinality_of(d, end.port.component_type, binding)
        m = end.multiplicity.evaluate(binding)
        instances = [
            PortInstance(end.port.component_type, i, end.port.port) for i in range(1, n + 1)
        ]
        per_end.append(
            [tuple((pi, end.typing) for pi in combo) for combo in itertools.combinations(instances, m)]
        )
    connectors = [
        Connector(frozenset(itertools.chain.from_iterable(parts)))
        for parts in itertools.product(*per_end)
    ]
    return sorted(connectors, key=Connector.sort_key)


@dataclass(frozen=True)
class EnumerationResult:
    configurations: tuple[frozenset[Connector], ...]
    truncated: bool

    def __len__(self) -> int:
        return len(self.configurations)


def enumerate_configurations(
    d: ArchitectureDiagram,
    motif: ConnectorMotif,
    binding: Binding,
    limit: Optional[int] = None,
    max_nodes: int = DEFAULT_MAX_NODES,
) -> EnumerationResult:
    """All configurations of one motif, by backtracking over connector subsets.

    A configuration is a set of distinct connectors in which every instance
    of each end's port type sits in exactly its degree's worth of connectors.
    Results come in lexicographic order of sorted connector lists; with a
    limit, enumeration stops after that many and sets the truncated flag.
    Raises CapacityError when the search visits more than max_nodes nodes.
    """
    check_binding(d, binding)
    if limit is not None and limit < 1:
        raise ValueError("limit must be at least 1")

    # All matching factors must be one equal integer: the configuration size.
    factors = {matching_factor(d, end, binding) for end in motif.ends}
    if len(factors) != 1:
        return EnumerationResult((), False)
    size = next(iter(factors))
    if size.denominator != 1 or size == 0:
        return EnumerationResult((), False)
    size = int(size)

    degrees: dict[PortInstance, int] = {}
    for end in motif.ends:
        n = cardinality_of(d, end.port.component_type, binding)
        deg = end.degree.evaluate(binding)
        for i in range(1, n + 1):
            degrees[PortInstance(end.port.component_type, i, end.port.port)] = deg

    pool = possible_connectors(d, motif, binding)
    membership = [sorted(c.port_instances) for c in pool]

    # avail[i] = connectors not yet passed over that contain instance i.
    avail: dict[PortInstance, int] = {pi: 0 for pi in degrees}
    for members in membership:
        for pi in members:
            avail[pi] += 1

    need = dict(degrees)
    chosen: list[Connector] = []
    found: list[frozenset[Connector]] = []
    truncated = False
    visited = 0

    def dfs(idx: int) -> bool:
        """Include-first DFS; returns False once the limit stops enumeration."""
        nonlocal visited, truncated
        visited += 1
        if visited > max_nodes:
            raise CapacityError(
                f"configuration search exceeded {max_nodes} nodes for motif {motif.name}"
            )
        if len(chosen) == size:
            if all(v == 0 for v in need.values()):
                found.append(frozenset(chosen))
                if limit is not None and len(found) >= limit:
                    truncated = True
                    return False
            return True
        if size - len(chosen) > len(pool) - idx:
            return True
        # No instance may need more connectors than remain in pool[idx:].
        if any(need[pi] > avail[pi] for pi in need):
            return True

        members = membership[idx]
        for pi in members:
            avail[pi] -= 1
        try:
            if all(need[pi] > 0 for pi in members):
                for pi in members:
                    need[pi] -= 1
                chosen.append(pool[idx])
                ok = dfs(idx + 1)
                chosen.pop()
                for pi in members:
                    need[pi] += 1
                if not ok:
                    return False
            return dfs(idx + 1)
        finally:
            for pi in members:
                avail[pi] += 1

    if pool and 0 < size <= len(pool):
        dfs(0)
    return EnumerationResult(tuple(found), truncated)


def motif_encodability_failures(
    d: ArchitectureDiagram, motif: ConnectorMotif, binding: Binding
) -> list[EndCheck]:
    report = check_encodable(d, binding)
    return [e for e in report.failures() if e.motif == motif.name]


def unique_configuration(
    d: ArchitectureDiagram, motif: ConnectorMotif, binding: Binding
) -> frozenset[Connector]:
    """The single conforming configuration: all possible connectors.

    Closed form, no search; only valid when the uniqueness conditions hold
    for this motif, otherwise EncodabilityError.
    """
    failures = motif_encodability_failures(d, motif, binding)
    if failures:
        details = "; ".join(
            f"{e.port}: factor {e.factor} vs {e.max_connectors} possible connectors"
            + ("" if e.multiplicity_ok else f", multiplicity {e.multiplicity} > {e.cardinality}")
            for e in failures
        )
        raise EncodabilityError(f"motif {motif.name} has no unique configuration: {details}")
    return frozenset(possible_connectors(d, motif, binding))


def conforms(configuration: Configuration, d: ArchitectureDiagram, binding: Binding) -> bool:
    """Does the configuration satisfy every motif's multiplicity/typing and
    degree constraints under the binding?"""
    check_binding(d, binding)
    group_names = {name for name, _ in configuration.groups}
    if group_names - {m.name for m in d.motifs}:
        return False
    for motif in d.motifs:
        try:
            group = configuration.group(motif.name)
        except KeyError:
            group = frozenset()
        if not group:
            return False
        motif_ports = motif.port_types
        for connector in group:
            by_ref: dict[PortTypeRef, int] = {}
            for pi, typing in connector.ends:
                ref = pi.type_ref
                if ref not in motif_ports:
                    return False
                if typing != motif.end_for(ref).typing:
                    return False
                by_ref[ref] = by_ref.get(ref, 0) + 1
            for end in motif.ends:
                if by_ref.get(end.port, 0) != end.multiplicity.evaluate(binding):
                    return False
        for end in motif.ends:
            n = cardinality_of(d, end.port.component_type, binding)
            deg = end.degree.evaluate(binding)
            for i in range(1, n + 1):
                pi = PortInstance(end.port.component_type, i, end.port.port)
                involved = sum(1 for c in group if pi in c.port_instances)
                if involved != deg:
                    return False
    return True


def enumerate_diagram_configurations(
    d: ArchitectureDiagram,
    binding: Binding,
    limit: Optional[int] = None,
    max_nodes: int = DEFAULT_MAX_NODES,
) -> tuple[tuple[Configuration, ...], bool]:
    """Configurations of the whole diagram: the per-motif Cartesian product."""
    per_motif: list[tuple[str, EnumerationResult]] = [
        (motif.name, enumerate_configurations(d, motif, binding, limit=limit, max_nodes=max_nodes))
        for motif in d.motifs
    ]
    truncated = any(result.truncated for _, result in per_motif)
    groups = [
        [(name, option) for option in result.configurations] for name, result in per_motif
    ]
    if any(not g for g in groups):
        return (), truncated
    configurations: list[Configuration] = []
    for combo in itertools.product(*groups):
        if limit is not None and len(configurations) >= limit:
            truncated = True
            break
        configurations.append(Configuration(tuple(combo)))
    return tuple(configurations), truncated


def diagram_interactions(d: ArchitectureDiagram, binding: Binding) -> frozenset[Interaction]:
    """Interaction semantics of an encodable diagram.

    The union over motifs, over the connectors of the unique configuration,
    of each connector's interaction set.  Raises EncodabilityError when some
    motif admits zero or several configurations.
    """
    check_binding(d, binding)
    report = check_encodable(d, binding)
    if not report.overall:
        bad = ", ".join(f"{e.motif}/{e.port}" for e in report.failures())
        raise EncodabilityError(f"diagram does not define a unique architecture ({bad})")
    result: set[Interaction] = set()
    for motif in d.motifs:
        for connector in unique_configuration(d, motif, binding):
            result |= motif_connector_interactions(connector)
    return frozenset(result)


# ---- exhaustive sweep over small single-motif diagrams ---------------------


def _loop_type(name: str, port: str, cardinality: int) -> ComponentType:
    return ComponentType(
        name=name,
        cardinality=CardExpr.lit(cardinality),
        port_types=frozenset({port}),
        states=frozenset({"s"}),
        initial_states=frozenset({"s"}),
        transitions=(),
    )


def single_motif_diagram(
    specs: Sequence[tuple[int, int, int]], typings: Optional[Sequence[str]] = None
) -> ArchitectureDiagram:
    """A diagram with one motif over one or two fresh component types.

    ``specs`` lists (cardinality, multiplicity, degree) per end; typings
    default to all-synchron.
    """
    if typings is None:
        typings = [SYNCHRON] * len(specs)
    names = ["A", "B", "C", "D"][: len(specs)]
    types = [_loop_type(name, "p", n) for name, (n, _, _) in zip(names, specs)]
    ends = tuple(
        MotifEnd(
            port=PortTypeRef(name, "p"),
            multiplicity=CardExpr.lit(m),
            degree=CardExpr.lit(deg),
            typing=typing,
        )
        for name, (_, m, deg), typing in zip(names, specs, typings)
    )
    return ArchitectureDiagram(
        name="sweep",
        component_types=tuple(types),
        motifs=(ConnectorMotif(name="only", ends=ends),),
    )


@dataclass(frozen=True)
class SweepRecord:
    label: str
    count: int
    encodable: bool

    @property
    def agree(self) -> bool:
        return (self.count == 1) == self.encodable


def iter_sweep_points(bound: int = 3) -> Iterator[tuple[str, ArchitectureDiagram]]:
    """Single-motif diagrams with one or two port types, all of n, m, d in
    [1, bound]."""
    values = range(1, bound + 1)
    for n, m, deg in itertools.product(values, repeat=3):
        yield f"n={n} m={m} d={deg}", single_motif_diagram([(n, m, deg)])
    for spec1 in itertools.product(values, repeat=3):
        for spec2 in itertools.product(values, repeat=3):
            n1, m1, d1 = spec1
            n2, m2, d2 = spec2
            label = f"n1={n1} m1={m1} d1={d1} | n2={n2} m2={m2} d2={d2}"
            yield label, single_motif_diagram([spec1, spec2])


def proposition_sweep(bound: int = 3, max_nodes: int = DEFAULT_MAX_NODES) -> list[SweepRecord]:
    """Cross-check brute-force uniqueness against the encodability conditions
    at every sweep point; every record should have ``agree`` set."""
    records = []
    for label, d in iter_sweep_points(bound):
        result = enumerate_configurations(d, d.motifs[0], {}, limit=2, max_nodes=max_nodes)
        report = check_encodable(d, {})
        records.append(SweepRecord(label=label, count=len(result), encodable=report.overall))
    return records
