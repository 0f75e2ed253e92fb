"""Symbolic fact encoding of classifier beliefs and meta evidence.

Class labels cross into the symbolic layer as named constants
(0 <-> benign, 1 <-> phishing); the 0/1 coding is confined to
:func:`encode` and :data:`SYMBOL_TO_CLASS`.  Serialization emits ground
facts one per line in solver-compatible syntax so the file can also be fed
to external ASP tooling for cross-validation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from metaphish import nmr

logger = logging.getLogger(__name__)

PRED = "pred"
META = "meta"

CLASS_TO_SYMBOL = {0: "benign", 1: "phishing"}
SYMBOL_TO_CLASS = {"benign": 0, "phishing": 1}
META_TO_SYMBOL = {False: "no", True: "yes"}
CLASSIFIER_SYMBOLS = ("svm", "knn", "dt", "rf")


def classifier_symbol(classifier) -> str:
    """Lowercase constant for a classifier kind (enum member or plain string)."""
    name = classifier.value if isinstance(classifier, Enum) else str(classifier)
    if name not in CLASSIFIER_SYMBOLS:
        raise ValueError(f"unknown classifier symbol {name!r}")
    return name


@dataclass(frozen=True)
class Fact:
    """A ground atom: predicate plus constant arguments (symbols or integers)."""

    predicate: str
    arguments: tuple

    def __post_init__(self):
        object.__setattr__(self, "arguments", tuple(self.arguments))
        for a in self.arguments:
            if isinstance(a, bool) or not isinstance(a, (str, int)):
                raise ValueError(f"fact argument must be a symbol or integer, got {a!r}")
            if isinstance(a, int) and a < 0:
                raise ValueError(f"integer constants must be non-negative, got {a}")
            if isinstance(a, str) and not (a[:1].islower() and a.isidentifier()):
                raise ValueError(f"symbol constants must be lowercase identifiers, got {a!r}")

    def key(self) -> nmr.GroundAtom:
        return (self.predicate, self.arguments)

    def __str__(self):
        return nmr.format_ground_atom(self.key())


def _fact_sort_key(fact: Fact):
    """(predicate, id, classifier) for pipeline facts; stable fallback otherwise."""
    typed = tuple((0, a) if isinstance(a, int) else (1, a) for a in fact.arguments)
    if fact.predicate == PRED and len(fact.arguments) == 3:
        return (fact.predicate, (0, fact.arguments[1]), str(fact.arguments[0]), typed)
    if fact.predicate == META and len(fact.arguments) == 2:
        return (fact.predicate, (0, fact.arguments[0]), "", typed)
    return (fact.predicate, (2,), "", typed)


class FactBase:
    """An immutable set of facts with the pipeline's functional constraints.

    At most one ``pred`` fact per (classifier, instance) and one ``meta``
    fact per instance; a ``pred`` instance without a matching ``meta`` fact
    is tolerated but logged at warning level.
    """

    def __init__(self, facts: Iterable[Fact]):
        ordered = sorted(set(facts), key=_fact_sort_key)
        pred_keys = set()
        meta_ids = set()
        pred_ids = set()
        for fact in ordered:
            if fact.predicate == PRED and len(fact.arguments) == 3:
                key = (fact.arguments[0], fact.arguments[1])
                if key in pred_keys:
                    raise ValueError(f"duplicate pred fact for classifier/instance {key}")
                pred_keys.add(key)
                pred_ids.add(fact.arguments[1])
            elif fact.predicate == META and len(fact.arguments) == 2:
                iid = fact.arguments[0]
                if iid in meta_ids:
                    raise ValueError(f"duplicate meta fact for instance {iid}")
                meta_ids.add(iid)
        missing = pred_ids - meta_ids
        if missing:
            shown = sorted(missing)[:5]
            logger.warning(
                "fact base has %d pred instance(s) without a meta fact (e.g. %s)",
                len(missing),
                shown,
            )
        self._facts = tuple(ordered)

    @property
    def facts(self) -> tuple[Fact, ...]:
        return self._facts

    def atoms(self) -> Iterator[nmr.GroundAtom]:
        for fact in self._facts:
            yield fact.key()

    def __len__(self):
        return len(self._facts)

    def __iter__(self):
        return iter(self._facts)

    def __contains__(self, fact):
        return fact in self._facts

    def __eq__(self, other):
        return isinstance(other, FactBase) and self._facts == other._facts

    def __hash__(self):
        return hash(self._facts)


def encode(beliefs, meta_flags: Mapping[int, bool]) -> FactBase:
    """One ``pred(cl,id,class)`` fact per belief plus one ``meta(id,m)`` per instance.

    Runs in a single pass over the beliefs; ``meta_flags`` must cover every
    belief's instance id (extra ids are ignored).
    """
    facts = []
    instance_ids = set()
    for belief in beliefs:
        iid = belief.instance_id
        if iid not in meta_flags:
            raise ValueError(f"belief references instance {iid} absent from meta flags")
        facts.append(
            Fact(
                PRED,
                (
                    classifier_symbol(belief.classifier),
                    iid,
                    CLASS_TO_SYMBOL[belief.predicted_class],
                ),
            )
        )
        if iid not in instance_ids:
            instance_ids.add(iid)
            facts.append(Fact(META, (iid, META_TO_SYMBOL[bool(meta_flags[iid])])))
    return FactBase(facts)


def serialize(fact_base: FactBase, path: str | Path) -> int:
    """Write one fact per line as ``predicate(args).`` and return bytes written.

    No spaces, trailing period, ``\\n`` line ends, facts sorted by
    (predicate, id, classifier) for byte-stable output.
    """
    lines = [f"{fact}.\n" for fact in fact_base.facts]
    data = "".join(lines).encode("ascii")
    Path(path).write_bytes(data)
    return len(data)


def load_facts(path: str | Path) -> FactBase:
    """Parse a serialized fact file back into a FactBase (round-trip of serialize)."""
    program = nmr.parse_program(Path(path).read_text(encoding="ascii"))
    facts = []
    for rule in program.rules:
        if not rule.is_fact or rule.head.variables:
            raise ValueError(f"{path}: not a ground fact: '{rule}'")
        facts.append(Fact(rule.head.predicate, rule.head.terms))
    return FactBase(facts)
