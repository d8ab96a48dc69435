"""Encode a diagram into Require/Accept macros; emit text, XML, behavior JSON.

The encoding walks every port type through each motif attached to it:

  * singleton motif: dash in both the require and accept sets;
  * accept side: all motif port types, including the port itself when its
    multiplicity exceeds one, excluding it otherwise;
  * require side: dash when the port is a trigger; one option per trigger
    port type (containing that trigger once, as a presence-only option) when
    the motif has triggers and the port is a synchron; otherwise a single
    counted option holding every other port type as many times as its
    multiplicity plus the port's own type multiplicity-minus-one times.

A port sitting in several motifs accumulates options and accepted sets; the
encoding is binding-independent, so all multiplicities must be literals.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence
from xml.sax.saxutils import quoteattr

from .errors import MacroEncodingError
from .logic import AcceptRule, RequireOption, RequireRule
from .model import (
    ArchitectureDiagram,
    ComponentType,
    ConnectorMotif,
    PortTypeRef,
    TRIGGER,
)


@dataclass(frozen=True)
class MacroSpec:
    """One require rule and one accept rule per port type used in a motif."""

    requires: tuple[RequireRule, ...]
    accepts: tuple[AcceptRule, ...]

    def __post_init__(self):
        object.__setattr__(self, "requires", tuple(sorted(self.requires, key=lambda r: r.effect)))
        object.__setattr__(self, "accepts", tuple(sorted(self.accepts, key=lambda r: r.effect)))

    @property
    def port_types(self) -> tuple[PortTypeRef, ...]:
        return tuple(rule.effect for rule in self.requires)

    def require_for(self, ref: PortTypeRef) -> RequireRule:
        for rule in self.requires:
            if rule.effect == ref:
                return rule
        raise KeyError(f"no require rule for {ref}")

    def accept_for(self, ref: PortTypeRef) -> AcceptRule:
        for rule in self.accepts:
            if rule.effect == ref:
                return rule
        raise KeyError(f"no accept rule for {ref}")


def _literal_multiplicity(motif: ConnectorMotif, ref: PortTypeRef) -> int:
    expr = motif.end_for(ref).multiplicity
    if not expr.is_literal:
        raise MacroEncodingError(
            f"multiplicity of {ref} in motif {motif.name} is the parameter "
            f"{expr.param!r}; the macro encoding needs literal multiplicities"
        )
    return expr.literal


def encode_macros(d: ArchitectureDiagram) -> MacroSpec:
    """Require/Accept rules for every port type appearing in some motif."""
    used = sorted({end.port for motif in d.motifs for end in motif.ends})
    requires: list[RequireRule] = []
    accepts: list[AcceptRule] = []

    for p in used:
        options: list[RequireOption] = []
        accepted: set[PortTypeRef] = set()
        for motif in d.motifs:
            if p not in motif.port_types:
                continue
            ports = motif.port_types
            end_p = motif.end_for(p)
            m_p = _literal_multiplicity(motif, p)

            if len(ports) == 1:
                options.append(RequireOption.dash())
                continue

            accepted |= ports if m_p > 1 else ports - {p}

            if end_p.typing == TRIGGER:
                options.append(RequireOption.dash())
            elif motif.has_trigger:
                for end in sorted(motif.ends, key=lambda e: e.port):
                    if end.typing == TRIGGER:
                        options.append(RequireOption.trigger(end.port))
            else:
                counts = {
                    end.port: _literal_multiplicity(motif, end.port)
                    for end in motif.ends
                    if end.port != p
                }
                if m_p > 1:
                    counts[p] = m_p - 1
                options.append(RequireOption.counted(counts))

        deduped: list[RequireOption] = []
        for option in options:
            if option not in deduped:
                deduped.append(option)
        requires.append(RequireRule(effect=p, options=tuple(deduped)))
        accepts.append(AcceptRule(effect=p, accepted=frozenset(accepted)))

    return MacroSpec(requires=tuple(requires), accepts=tuple(accepts))


# ---- macro text -------------------------------------------------------------


def _option_text(option: RequireOption) -> str:
    if option.is_dash:
        return "-"
    return " ".join(str(ref) for ref, count in option.ports for _ in range(count))


def emit_macros_text(spec: MacroSpec) -> str:
    """One rule per line in the inline notation; require before accept per
    port; rules sorted by component type, then port."""
    lines = []
    for ref in spec.port_types:
        require = spec.require_for(ref)
        accept = spec.accept_for(ref)
        lines.append(f"{ref} Require " + " ; ".join(_option_text(o) for o in require.options))
        accepted = " ".join(str(r) for r in sorted(accept.accepted)) if accept.accepted else "-"
        lines.append(f"{ref} Accept {accepted}")
    return "\n".join(lines) + "\n"


# ---- XML --------------------------------------------------------------------


def _xml_port(ref: PortTypeRef, indent: str) -> str:
    return f"{indent}<port id={quoteattr(ref.port)} specType={quoteattr(ref.component_type)}/>"


def emit_xml(spec: MacroSpec) -> str:
    """Glue XML: per port type one <require> and one <accept> element.

    Each require option becomes its own <causes> block (empty for dash);
    presence-only trigger options carry mode="trigger" so the rule structure
    survives a round-trip through a generic XML reader.
    """
    lines = ["<glue>"]
    for ref in spec.port_types:
        effect = f"    <effect id={quoteattr(ref.port)} specType={quoteattr(ref.component_type)}/>"

        lines.append("  <require>")
        lines.append(effect)
        for option in spec.require_for(ref).options:
            attr = "" if option.exact else ' mode="trigger"'
            lines.append(f"    <causes{attr}>")
            for port, count in option.ports:
                for _ in range(count):
                    lines.append(_xml_port(port, "      "))
            lines.append("    </causes>")
        lines.append("  </require>")

        lines.append("  <accept>")
        lines.append(effect)
        lines.append("    <causes>")
        for port in sorted(spec.accept_for(ref).accepted):
            lines.append(_xml_port(port, "      "))
        lines.append("    </causes>")
        lines.append("  </accept>")
    lines.append("</glue>")
    return "\n".join(lines) + "\n"


def parse_macros_xml(text: str) -> MacroSpec:
    """Rebuild a MacroSpec from emitted glue XML (used for round-trip checks)."""
    import xml.etree.ElementTree as ET

    root = ET.fromstring(text)
    requires: list[RequireRule] = []
    accepts: list[AcceptRule] = []
    for element in root:
        effect_el = element.find("effect")
        effect = PortTypeRef(effect_el.get("specType"), effect_el.get("id"))
        causes = element.findall("causes")
        if element.tag == "require":
            options = []
            for block in causes:
                counts: dict[PortTypeRef, int] = {}
                for port_el in block.findall("port"):
                    ref = PortTypeRef(port_el.get("specType"), port_el.get("id"))
                    counts[ref] = counts.get(ref, 0) + 1
                exact = block.get("mode") != "trigger"
                options.append(RequireOption(ports=tuple(sorted(counts.items())), exact=exact))
            requires.append(RequireRule(effect=effect, options=tuple(options)))
        elif element.tag == "accept":
            accepted: set[PortTypeRef] = set()
            for block in causes:
                for port_el in block.findall("port"):
                    accepted.add(PortTypeRef(port_el.get("specType"), port_el.get("id")))
            accepts.append(AcceptRule(effect=effect, accepted=frozenset(accepted)))
        else:
            raise ValueError(f"unexpected element <{element.tag}> in glue XML")
    return MacroSpec(requires=tuple(requires), accepts=tuple(accepts))


# ---- behavior JSON ----------------------------------------------------------


def behavior_dict(ct: ComponentType) -> dict:
    return {
        "name": ct.name,
        "cardinality": ct.cardinality.literal
        if ct.cardinality.is_literal
        else ct.cardinality.param,
        "initial": ct.initial_state,
        "states": sorted(ct.states),
        "ports": sorted(ct.port_types),
        "events": sorted(ct.spontaneous_events),
        "guards": sorted(ct.guards),
        "transitions": [
            {
                "kind": tr.kind,
                "label": tr.label,
                "source": tr.source,
                "target": tr.destination,
                "guard": str(tr.guard) if tr.guard is not None else None,
            }
            for tr in ct.transitions
        ],
    }


def export_behavior_json(cts: Sequence[ComponentType]) -> str:
    """Neutral JSON export of component behaviors, one element per type.

    Callers are expected to have validated the types: the export reads the
    unique initial state.
    """
    entries = [behavior_dict(ct) for ct in sorted(cts, key=lambda c: c.name)]
    return json.dumps(entries, indent=2, sort_keys=True) + "\n"
