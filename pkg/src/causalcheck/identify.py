"""Graphical identification of average treatment effects.

Supported strategies are backdoor adjustment, the frontdoor criterion and
unconditional instrumental variables. An empty result from
:func:`identify_effect` means "not identified by these criteria", which is
weaker than "not identifiable".
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from .graph import (CausalGraph, GraphError, _closure, ancestors, d_separated, descendants)

BACKDOOR, FRONTDOOR, IV = "backdoor", "frontdoor", "iv"
KINDS = (BACKDOOR, FRONTDOOR, IV)
ROLES = ("confounder", "instrument", "mediator", "collider", "other")

#: Subset search gives up beyond this many candidate nodes.
MAX_CANDIDATES = 22


class IdentificationError(GraphError):
    pass


@dataclass(frozen=True)
class Estimand:
    """An identification result; only the set matching ``kind`` is populated."""

    kind: str
    treatment: str
    outcome: str
    adjustment_set: tuple[str, ...] = ()
    mediator_set: tuple[str, ...] = ()
    instrument_set: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown estimand kind {self.kind!r}")
        for name in ("adjustment_set", "mediator_set", "instrument_set"):
            object.__setattr__(self, name, tuple(sorted(set(getattr(self, name)))))
        populated = {BACKDOOR: "adjustment_set", FRONTDOOR: "mediator_set", IV: "instrument_set"}[self.kind]
        for name in ("adjustment_set", "mediator_set", "instrument_set"):
            if name != populated and getattr(self, name):
                raise ValueError(f"{self.kind} estimand cannot carry {name}")

    @property
    def variables(self) -> tuple[str, ...]:
        return self.adjustment_set or self.mediator_set or self.instrument_set

    def to_dict(self) -> dict:
        key = {BACKDOOR: "adjustment_set", FRONTDOOR: "mediator_set", IV: "instrument_set"}[self.kind]
        return {"kind": self.kind, "treatment": self.treatment, "outcome": self.outcome,
                key: list(getattr(self, key))}

    @classmethod
    def from_dict(cls, d: dict) -> "Estimand":
        return cls(d["kind"], d["treatment"], d["outcome"],
                   tuple(d.get("adjustment_set", ())), tuple(d.get("mediator_set", ())),
                   tuple(d.get("instrument_set", ())))

    def __str__(self):
        return f"{self.kind}({self.treatment} -> {self.outcome} | {', '.join(self.variables) or '∅'})"


def _check_query(g: CausalGraph, treatment: str, outcome: str) -> None:
    g._check(treatment, outcome)
    if treatment == outcome:
        raise IdentificationError("treatment and outcome must differ")
    for role, node in (("treatment", treatment), ("outcome", outcome)):
        if node in g.unobserved:
            raise IdentificationError(f"{role} {node!r} is unobserved")
    if outcome in ancestors(g, [treatment]):
        raise IdentificationError(f"outcome {outcome!r} is an ancestor of treatment {treatment!r}")


def is_valid_backdoor_set(g: CausalGraph, treatment: str, outcome: str, adjustment) -> bool:
    """Backdoor criterion via d-separation in the graph without the treatment's out-edges."""
    adjustment = set(adjustment)
    if adjustment & set(descendants(g, [treatment])):
        return False
    if {treatment, outcome} & adjustment:
        return False
    return d_separated(g.without_edges_from([treatment]), [treatment], [outcome], adjustment)


def _backdoor_candidates(g, treatment, outcome):
    pruned = g.without_edges_from([treatment])
    # minimal separators lie inside the ancestral set of {treatment, outcome}
    anc = _closure(frozenset([treatment, outcome]), pruned._parents.__getitem__)
    desc = set(descendants(g, [treatment]))
    return sorted(n for n in anc if n not in desc and n != outcome and n not in g.unobserved)


def _subsets(candidates, max_size=None):
    if len(candidates) > MAX_CANDIDATES:
        raise IdentificationError(f"{len(candidates)} candidate nodes exceed the search limit of {MAX_CANDIDATES}")
    top = len(candidates) if max_size is None else min(max_size, len(candidates))
    for size in range(top + 1):
        yield from itertools.combinations(candidates, size)


def find_backdoor_sets(g: CausalGraph, treatment: str, outcome: str, minimal: bool = True
                       ) -> list[tuple[str, ...]]:
    """Observed backdoor adjustment sets, sorted lexicographically.

    By default only inclusion-minimal sets are returned; ``minimal=False``
    lists every valid observed set.
    """
    _check_query(g, treatment, outcome)
    if minimal:
        return list(_minimal_backdoor_sets(g, treatment, outcome))
    candidates = sorted(n for n in g.observed if n not in (treatment, outcome)
                        and n not in descendants(g, [treatment]))
    found = [s for s in _subsets(candidates) if is_valid_backdoor_set(g, treatment, outcome, s)]
    return sorted(found)


@lru_cache(maxsize=256)
def _minimal_backdoor_sets(g, treatment, outcome):
    found: list[tuple[str, ...]] = []
    for subset in _subsets(_backdoor_candidates(g, treatment, outcome)):
        s = set(subset)
        if any(set(f) <= s for f in found):
            continue
        if is_valid_backdoor_set(g, treatment, outcome, subset):
            found.append(subset)
    return tuple(sorted(found))


def find_instruments(g: CausalGraph, treatment: str, outcome: str) -> list[str]:
    """Observed z with z d-connected to the treatment and d-separated from the
    outcome once the treatment's out-edges are cut. Descendants of the
    treatment are excluded."""
    _check_query(g, treatment, outcome)
    pruned = g.without_edges_from([treatment])
    desc = set(descendants(g, [treatment]))
    out = []
    for z in g.observed:
        if z in desc or z == outcome:
            continue
        if not d_separated(g, [z], [treatment]) and d_separated(pruned, [z], [outcome]):
            out.append(z)
    return sorted(out)


def _has_directed_path(g, source, target, removed):
    seen = {source}
    stack = [source]
    while stack:
        for c in g._children[stack.pop()]:
            if c == target:
                return True
            if c not in removed and c not in seen:
                seen.add(c)
                stack.append(c)
    return False


def is_valid_frontdoor_set(g: CausalGraph, treatment: str, outcome: str, mediators) -> bool:
    mediators = set(mediators)
    if not mediators or {treatment, outcome} & mediators:
        return False
    # (i) every directed treatment -> outcome path passes through the set
    if _has_directed_path(g, treatment, outcome, mediators):
        return False
    # (ii) no open backdoor path from treatment into the set
    if not d_separated(g.without_edges_from([treatment]), [treatment], mediators):
        return False
    # (iii) backdoor paths from the set to the outcome are blocked by the treatment
    return d_separated(g.without_edges_from(mediators), mediators, [outcome], [treatment])


def find_frontdoor_set(g: CausalGraph, treatment: str, outcome: str) -> tuple[str, ...] | None:
    """Smallest (then lexicographically first) observed frontdoor set, or None."""
    _check_query(g, treatment, outcome)
    on_paths = set(descendants(g, [treatment])) & set(ancestors(g, [outcome]))
    candidates = sorted(n for n in on_paths - {treatment, outcome} if n not in g.unobserved)
    for subset in _subsets(candidates):
        if subset and is_valid_frontdoor_set(g, treatment, outcome, subset):
            return subset
    return None


def classify_variable(g: CausalGraph, v: str, treatment: str, outcome: str) -> str:
    """Role of ``v`` relative to the treatment/outcome pair.

    Precedence: confounder > instrument > mediator > collider > other.
    """
    g._check(v, treatment, outcome)
    if v in (treatment, outcome):
        raise IdentificationError("variable must differ from treatment and outcome")
    anc_t = set(ancestors(g, [treatment]))
    if v in anc_t and _has_directed_path(g, v, outcome, {treatment}):
        return "confounder"
    if v in find_instruments(g, treatment, outcome):
        return "instrument"
    desc_t = set(descendants(g, [treatment]))
    if v in desc_t and v in set(ancestors(g, [outcome])):
        return "mediator"
    if v in desc_t and v in set(descendants(g, [outcome])):
        return "collider"
    return "other"


def classify_variables(g: CausalGraph, treatment: str, outcome: str) -> dict[str, str]:
    return {v: classify_variable(g, v, treatment, outcome)
            for v in sorted(g.nodes) if v not in (treatment, outcome)}


def identify_effect(g: CausalGraph, treatment: str, outcome: str) -> list[Estimand]:
    """Every applicable estimand: backdoor (one per minimal set), frontdoor, iv."""
    _check_query(g, treatment, outcome)
    out = [Estimand(BACKDOOR, treatment, outcome, adjustment_set=s)
           for s in find_backdoor_sets(g, treatment, outcome)]
    front = find_frontdoor_set(g, treatment, outcome)
    if front is not None:
        out.append(Estimand(FRONTDOOR, treatment, outcome, mediator_set=front))
    instruments = find_instruments(g, treatment, outcome)
    if instruments:
        out.append(Estimand(IV, treatment, outcome, instrument_set=tuple(instruments)))
    return out
