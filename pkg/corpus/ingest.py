"""
Image-side graph ingestion.

Externally produced scene graphs (a detector, a hand-authored golden file)
arrive in the interchange format; bad records are reported and skipped,
good ones are returned as image-modality graphs.
"""

import logging
from typing import List, Optional, Tuple

from errors import CorpusError, GraphFormatError, MissingInputError
from processing.validator import validate
from scenegraph.graph import IMAGE, SceneGraph
from scenegraph.interchange import deserialize_many, read_records, serialize_many

logger = logging.getLogger(__name__)


def _read_text(path) -> str:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return f.read()
    except FileNotFoundError:
        raise MissingInputError(f"graph file not found: {path}") from None
    except (OSError, UnicodeDecodeError) as exc:
        raise CorpusError(f"cannot read graph file {path}: {exc}") from None


def ingest_image_records(path) -> Tuple[List[Optional[SceneGraph]], List[str]]:
    """
    Read an interchange file of image scene graphs, one slot per record.

    Args:
        path: interchange file

    Returns:
        (records, errors): a graph with modality=image per valid record and
        None per rejected one, and one message per rejected record naming
        its first line
    """
    text = _read_text(path)
    records, errors = [], []

    for line_no, result in read_records(text):
        if isinstance(result, GraphFormatError):
            errors.append(str(result))
            logger.warning("%s: skipped record: %s", path, result)
            records.append(None)
            continue
        report = validate(result)
        if not report.ok:
            message = f"line {line_no}: graph '{result.graph_id}': {report}"
            errors.append(message)
            logger.warning("%s: skipped record: %s", path, message)
            records.append(None)
            continue
        records.append(result.with_modality(IMAGE))

    if not records:
        logger.warning("%s: no graph records found", path)
    return records, errors


def ingest_image_graphs(path) -> Tuple[List[SceneGraph], List[str]]:
    """Valid image graphs of a file, rejected records dropped."""
    records, errors = ingest_image_records(path)
    return [g for g in records if g is not None], errors


def read_graphs(path) -> List[SceneGraph]:
    """Strict reader for files this pipeline wrote itself; any bad record raises."""
    return deserialize_many(_read_text(path))


def write_graphs(graphs, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(serialize_many(graphs))
