from dataclasses import dataclass, field
from typing import List, Optional

from scenegraph.graph import MODALITIES, GraphVocabulary, SceneGraph


@dataclass
class ValidationReport:
    problems: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems

    def __bool__(self):
        return self.ok

    def __str__(self):
        return "valid graph" if self.ok else "; ".join(self.problems)


def _as_index(value, n):
    if isinstance(value, bool) or not isinstance(value, int):
        return None
    return value if 0 <= value < n else None


def validate(graph: SceneGraph, vocab: Optional[GraphVocabulary] = None) -> ValidationReport:
    """
    Check a graph against the data-model invariants and, optionally, a
    vocabulary. Never raises; every problem found goes into the report.
    """
    report = ValidationReport()
    problems = report.problems

    try:
        objects = list(graph.objects)
        attributes = dict(graph.attributes)
        relations = list(graph.relations)
        modality = graph.modality
    except Exception as exc:
        problems.append(f"unreadable graph: {exc}")
        return report

    n = len(objects)
    if n == 0:
        problems.append("empty graph")
    if modality not in MODALITIES:
        problems.append(f"unknown modality {modality!r}")

    for key, attrs in attributes.items():
        if _as_index(key, n) is None:
            problems.append(f"dangling object id {key}")
        attrs = list(attrs)
        if len(set(attrs)) != len(attrs):
            problems.append(f"duplicate attribute on object {key}")

    seen = set()
    for rel in relations:
        try:
            subj, symbol, obj = rel
        except (TypeError, ValueError):
            problems.append(f"malformed relation {rel!r}")
            continue
        for end in (subj, obj):
            if _as_index(end, n) is None:
                problems.append(f"dangling object id {end}")
        if (subj, symbol, obj) in seen:
            problems.append(f"duplicate relation ({subj}, {symbol}, {obj})")
        seen.add((subj, symbol, obj))

    if vocab is not None:
        for symbol in objects:
            if symbol not in vocab.objects:
                problems.append(f"unknown object symbol '{symbol}'")
        for attrs in attributes.values():
            for symbol in attrs:
                if symbol not in vocab.attributes:
                    problems.append(f"unknown attribute symbol '{symbol}'")
        for rel in relations:
            if len(rel) == 3 and rel[1] not in vocab.relations:
                problems.append(f"unknown relation symbol '{rel[1]}'")

    return report
