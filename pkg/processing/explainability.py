"""
Explainability Module
Explains which rule produced each element of a parsed scene graph
"""

from processing.parser import ParseTrace

RULE_DESCRIPTIONS = {
    "R1": "determiner/adjectives/noun phrase became an object",
    "R2": "verb or preposition between two objects became a relation",
    "R3": "conjunction repeated the pending relation for a new object",
}


def explain_entry(entry, tokens):
    """
    Explain one rule application

    Args:
        entry: TraceEntry from the parser
        tokens: the sentence tokens

    Returns:
        Explanation dictionary
    """
    start, end = entry.span
    kind = entry.element[0]
    if kind == "relation":
        subj, rel, obj = entry.element[1]
        emitted = f"relation ({subj}, {rel}, {obj})"
    elif kind == "attribute":
        emitted = f"attribute {entry.element[2]} on object {entry.element[1]}"
    else:
        emitted = f"object {entry.element[1]} = {entry.element[2]}"

    return {
        'rule': entry.rule,
        'span': [start, end],
        'text': " ".join(tokens[start:end]),
        'emitted': emitted,
        'explanation': RULE_DESCRIPTIONS.get(entry.rule, "unknown rule"),
    }


def explain_parse(trace: ParseTrace):
    """
    Generate a transparency report for one parsed sentence

    Returns:
        Report with the tagged sentence, skipped tokens and one
        explanation per emitted element
    """
    skipped = [tok for tok, t in zip(trace.tokens, trace.tags) if t == "UNK"]
    return {
        'sentence': " ".join(trace.tokens),
        'tags': list(trace.tags),
        'skipped_tokens': skipped,
        'steps': [explain_entry(e, trace.tokens) for e in trace.entries],
    }


def format_report(report):
    lines = [f"sentence: {report['sentence']}",
             "tags: " + " ".join(report['tags'])]
    if report['skipped_tokens']:
        lines.append("skipped (not in lexicon): " + " ".join(report['skipped_tokens']))
    for step in report['steps']:
        lines.append(f"  {step['rule']} [{step['span'][0]}:{step['span'][1]}] "
                     f"'{step['text']}' -> {step['emitted']}")
    return "\n".join(lines)
