"""
Line-oriented interchange format for scene graphs.

    graph <id> <modality>
    obj <idx> <symbol>
    attr <obj-idx> <symbol>
    rel <subj-idx> <symbol> <obj-idx>
    end

Records are separated by a blank line. Symbols carry no whitespace. An
empty graph id is written as ``-``.
"""

from typing import Iterable, Iterator, List, Tuple, Union

from errors import GraphError, GraphFormatError
from scenegraph.graph import MODALITIES, SceneGraph

EMPTY_ID = "-"


def _check_symbol(symbol: str):
    if not symbol or any(ch.isspace() for ch in symbol):
        raise GraphError(f"symbol {symbol!r} is empty or contains whitespace")


def serialize(graph: SceneGraph) -> str:
    """Serialize one graph; field order is fixed so output is diffable."""
    graph_id = graph.graph_id or EMPTY_ID
    _check_symbol(graph_id)
    lines = [f"graph {graph_id} {graph.modality}"]
    for idx, symbol in enumerate(graph.objects):
        _check_symbol(symbol)
        lines.append(f"obj {idx} {symbol}")
    for idx in sorted(graph.attributes):
        for symbol in graph.attributes[idx]:
            _check_symbol(symbol)
            lines.append(f"attr {idx} {symbol}")
    for subj, rel, obj in graph.relations:
        _check_symbol(rel)
        lines.append(f"rel {subj} {rel} {obj}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def serialize_many(graphs: Iterable[SceneGraph]) -> str:
    return "\n".join(serialize(g) for g in graphs)


def _int_field(token: str, line_no: int, field: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise GraphFormatError(line_no, field, f"expected an integer, got {token!r}") from None


def _parse_record(lines: List[Tuple[int, str]]) -> SceneGraph:
    first_no, first = lines[0]
    head = first.split()
    if not head or head[0] != "graph":
        raise GraphFormatError(first_no, head[0] if head else "graph", "record must start with 'graph'")
    if len(head) != 3:
        raise GraphFormatError(first_no, "graph", "expected 'graph <id> <modality>'")
    graph_id = "" if head[1] == EMPTY_ID else head[1]
    modality = head[2]
    if modality not in MODALITIES:
        raise GraphFormatError(first_no, "modality", f"unknown modality {modality!r}")

    objects, attributes, relations = [], {}, []
    ended = False
    for line_no, line in lines[1:]:
        if ended:
            raise GraphFormatError(line_no, line.split()[0], "content after 'end'")
        parts = line.split()
        kind = parts[0]
        if kind == "obj":
            if len(parts) != 3:
                raise GraphFormatError(line_no, "obj", "expected 'obj <idx> <symbol>'")
            idx = _int_field(parts[1], line_no, "obj")
            if idx != len(objects):
                raise GraphFormatError(line_no, "obj", f"object index {idx} out of sequence")
            objects.append(parts[2])
        elif kind == "attr":
            if len(parts) != 3:
                raise GraphFormatError(line_no, "attr", "expected 'attr <obj-idx> <symbol>'")
            idx = _int_field(parts[1], line_no, "attr")
            attributes.setdefault(idx, []).append(parts[2])
        elif kind == "rel":
            if len(parts) != 4:
                raise GraphFormatError(line_no, "rel", "expected 'rel <subj-idx> <symbol> <obj-idx>'")
            relations.append((_int_field(parts[1], line_no, "rel"), parts[2],
                              _int_field(parts[3], line_no, "rel")))
        elif kind == "end":
            if len(parts) != 1:
                raise GraphFormatError(line_no, "end", "'end' takes no arguments")
            ended = True
        else:
            raise GraphFormatError(line_no, kind, "unknown field")
    if not ended:
        raise GraphFormatError(lines[-1][0], "end", "record is missing 'end'")
    return SceneGraph(objects, attributes, relations, modality, graph_id)


def _split_records(text: str) -> Iterator[List[Tuple[int, str]]]:
    record = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            if record:
                yield record
                record = []
            continue
        record.append((line_no, line))
    if record:
        yield record


def deserialize(text: str) -> SceneGraph:
    """Parse exactly one record."""
    records = list(_split_records(text))
    if len(records) != 1:
        raise GraphFormatError(1, "graph", f"expected one record, found {len(records)}")
    return _parse_record(records[0])


def read_records(text: str) -> Iterator[Tuple[int, Union[SceneGraph, GraphFormatError]]]:
    """
    Yield (first line number, graph or error) per record so one bad record
    does not hide the others.
    """
    for record in _split_records(text):
        try:
            yield record[0][0], _parse_record(record)
        except GraphFormatError as exc:
            yield record[0][0], exc


def deserialize_many(text: str) -> List[SceneGraph]:
    graphs = []
    for _, result in read_records(text):
        if isinstance(result, GraphFormatError):
            raise result
        graphs.append(result)
    return graphs
