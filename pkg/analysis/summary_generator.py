from collections import OrderedDict

from analysis.bleu import bleu_table, check_corpus
from analysis.cider import cider_d
from analysis.spice import corpus_spice_lite
from errors import ParseError
from processing.parser import parse

METRIC_COLUMNS = ["BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4", "CIDEr-D", "SPICE-lite", "exact_match"]


def exact_match_rate(hypotheses, references):
    hits = sum(1 for hyp, refs in zip(hypotheses, references) if any(list(hyp) == list(r) for r in refs))
    return hits / len(hypotheses)


def _parse_or_none(tokens, lexicon):
    try:
        return parse(tokens, lexicon)
    except ParseError:
        return None


def generate_score_summary(hypotheses, references, lexicon, ref_graphs=None):
    """
    Score a caption corpus with every metric.

    Args:
        hypotheses: one token list per item
        references: reference token lists per item
        lexicon: word lexicon used to parse captions into graphs
        ref_graphs: reference scene graphs; parsed from the first
            reference of each item when omitted

    Returns:
        OrderedDict metric -> value, in METRIC_COLUMNS order
    """
    check_corpus(hypotheses, references)

    if ref_graphs is None:
        ref_graphs = [parse(refs[0], lexicon) for refs in references]
    hyp_graphs = [_parse_or_none(h, lexicon) if h else None for h in hypotheses]

    summary = OrderedDict()
    for n, score in enumerate(bleu_table(hypotheses, references), start=1):
        summary[f"BLEU-{n}"] = score
    summary["CIDEr-D"] = cider_d(hypotheses, references)[0]
    summary["SPICE-lite"] = corpus_spice_lite(hyp_graphs, ref_graphs)
    summary["exact_match"] = exact_match_rate(hypotheses, references)
    return summary


def summary_text(summary):
    return ", ".join(f"{name} {value:.4f}" for name, value in summary.items())
