"""
Pipeline steps behind the command-line surface: corpus generation, text
training, alignment, captioning, evaluation and the ablation grids.
Every step reads and writes files in a run directory.
"""

import logging
import os
import pandas as pd

from align.mapping import build_aligner
from align.trainer import align_train, extract_features
from analysis.alignment import mmd_table
from analysis.summary_generator import METRIC_COLUMNS, generate_score_summary
from corpus.grammar import generate, load_grammar
from corpus.ingest import ingest_image_graphs, ingest_image_records, read_graphs, write_graphs
from corpus.unpaired import make_unpaired, split_items
from corpus.vocabulary import build_vocab
from errors import AlignmentError, CorpusError, ParseError
from models.captioner import build_captioner
from processing.cleaner import read_sentences, tokenize, truncate, write_sentences
from processing.explainability import explain_parse, format_report
from processing.lexicon import load_lexicon
from processing.parser import parse_corpus, parse_with_trace
from processing.validator import validate
from scenegraph.graph import GraphVocabulary, filter_rare_symbols
from store import runs
from store.checkpoints import load_aligner, load_captioner, save_aligner, save_captioner
from training.trainer import train_text

logger = logging.getLogger(__name__)

REFERENCE_SEPARATOR = "|||"


def _lexicon(config):
    return load_lexicon(runs.require(os.path.join(config.data_dir, "lexicon.txt")))


# ---------------- gen-data ----------------

def gen_data(config, run_dir):
    """
    Generate the synthetic corpus and write its unpaired training view.

    Returns:
        counts of written items per split
    """
    runs.prepare_run_dir(run_dir, config, "gen-data")
    grammar = load_grammar(config.data_dir)
    items = generate(grammar, config.n_sentences, config.seed, config.max_len)
    train, val, test = split_items(items, config.seed)

    images, sentences = make_unpaired([(item.image, item.sentence) for item in train], config.seed)
    write_graphs(images, runs.run_file(run_dir, runs.TRAIN_IMAGES))
    write_sentences(sentences, runs.run_file(run_dir, runs.TRAIN_SENTENCES))
    write_sentences([item.sentence for item in val], runs.run_file(run_dir, runs.VAL_SENTENCES))

    write_graphs([item.image.with_id(f"test{k}") for k, item in enumerate(test)],
                 runs.run_file(run_dir, runs.TEST_IMAGES))
    write_graphs([item.latent.with_id(f"test{k}") for k, item in enumerate(test)],
                 runs.run_file(run_dir, runs.TEST_GRAPHS))
    write_sentences([item.sentence for item in test], runs.run_file(run_dir, runs.TEST_REFERENCES))

    counts = {"train": len(train), "val": len(val), "test": len(test)}
    logger.info("gen-data: %s", counts)
    return counts


# ---------------- train-text ----------------

def sentence_pairs(sentences, lexicon, config):
    """Parse sentences; unparseable ones are dropped with a warning."""
    sentences = [truncate(s, config.max_len) for s in sentences]
    graphs, failures = parse_corpus(sentences, lexicon)
    for index, message in failures:
        logger.warning("sentence %d dropped: %s", index, message)
    kept = [(g, s) for g, s in zip(graphs, sentences) if g is not None]
    graphs = filter_rare_symbols([g for g, _ in kept], config.min_symbol_count)
    return [(g, s) for g, (_, s) in zip(graphs, kept) if g.objects]


def _is_encodable(graph, vocab, config):
    return config.unknown_symbols == "reserved" or validate(graph, vocab).ok


def _encodable(pairs, vocab, config, split):
    kept = [(g, s) for g, s in pairs if _is_encodable(g, vocab, config)]
    if len(kept) < len(pairs):
        logger.warning("%s: %d graph(s) with symbols unseen in training skipped", split, len(pairs) - len(kept))
    return kept


def train_text_phase(config, run_dir):
    runs.prepare_run_dir(run_dir, config, "train-text")
    lexicon = _lexicon(config)
    train = sentence_pairs(read_sentences(runs.run_file(run_dir, runs.TRAIN_SENTENCES, must_exist=True)),
                           lexicon, config)
    val = sentence_pairs(read_sentences(runs.run_file(run_dir, runs.VAL_SENTENCES, must_exist=True)),
                         lexicon, config)
    if not train:
        raise CorpusError("no parseable training sentences")

    graph_vocab = GraphVocabulary.from_graphs(g for g, _ in train)
    word_vocab = build_vocab([s for _, s in train], config.min_word_count)
    val = _encodable(val, graph_vocab, config, "val")

    model = build_captioner(graph_vocab, word_vocab, config)
    checkpoint = runs.run_file(run_dir, runs.TEXT_CHECKPOINT)
    model, log = train_text(model, train, val, config,
                            on_epoch=lambda m, record: save_captioner(checkpoint, m, config))
    if config.xe_epochs + config.rl_epochs == 0:
        save_captioner(checkpoint, model, config)
    runs.write_log(log, runs.run_file(run_dir, runs.TRAIN_LOG))
    return model, log


# ---------------- align ----------------

def align_phase(config, run_dir, text_checkpoint=None):
    runs.prepare_run_dir(run_dir, config, "align")
    text_checkpoint = text_checkpoint or runs.run_file(run_dir, runs.TEXT_CHECKPOINT)
    model, text_config = load_captioner(runs.require(text_checkpoint))
    if text_config.d_f != config.d_f:
        raise AlignmentError(f"config d_f={config.d_f} does not match the text checkpoint's d_f={text_config.d_f}")
    before = runs.file_digest(text_checkpoint), runs.state_digest(model)

    images, _ = ingest_image_graphs(runs.run_file(run_dir, runs.TRAIN_IMAGES, must_exist=True))
    lexicon = _lexicon(config)
    sentences = sentence_pairs(read_sentences(runs.run_file(run_dir, runs.TRAIN_SENTENCES, must_exist=True)),
                               lexicon, config)
    images = _encodable([(g, None) for g in images], model.graph_vocab, config, "image")
    if not images:
        raise AlignmentError("no encodable image graphs")

    image_features = extract_features(model, [g for g, _ in images])
    sentence_features = extract_features(model, [g for g, _ in sentences])
    aligner = build_aligner(config)
    aligner, log = align_train(image_features, sentence_features, aligner, config)

    after = runs.file_digest(text_checkpoint), runs.state_digest(model)
    if before != after:
        raise AlignmentError("text model changed during alignment")

    save_aligner(runs.run_file(run_dir, runs.ALIGN_CHECKPOINT), aligner, config, text_config, before[1])
    runs.write_log(log, runs.run_file(run_dir, runs.ALIGN_LOG))
    mapped = aligner.map_to_sentence_space(image_features)
    table = mmd_table(image_features, mapped, sentence_features)
    runs.write_log(table, runs.run_file(run_dir, runs.MMD_TABLE))
    logger.info("align: MMD raw -> mapped\n%s", table.to_string(index=False))
    return aligner, log, table


# ---------------- caption ----------------

def caption_graphs(model, graphs, beam, aligner=None):
    mapper = aligner.map_to_sentence_space if aligner is not None else None
    return model.caption(graphs, beam=beam, mapper=mapper)


def caption_file(text_checkpoint, graph_file, out_path, beam, align_checkpoint=None):
    """
    Caption every record of an image graph file, one output line per
    record. A rejected record keeps its slot as an empty line.

    Returns:
        number of captions written
    """
    model, text_config = load_captioner(text_checkpoint)
    aligner = None
    if align_checkpoint:
        aligner, _ = load_aligner(align_checkpoint, text_config.model_hash(), runs.state_digest(model))
    records, _ = ingest_image_records(graph_file)
    keep = [i for i, g in enumerate(records) if g is not None and _is_encodable(g, model.graph_vocab, text_config)]
    if len(keep) < len(records):
        logger.warning("caption: %d record(s) rejected, left as empty lines", len(records) - len(keep))

    lines = [[] for _ in records]
    captions = caption_graphs(model, [records[i] for i in keep], beam, aligner) if keep else []
    for index, tokens in zip(keep, captions):
        lines[index] = tokens
    write_sentences(lines, out_path)
    logger.info("caption: %d caption(s) written to %s", len(captions), out_path)
    return len(captions)


# ---------------- evaluate ----------------

def read_references(path):
    """One item per line; alternative references separated by '|||'."""
    runs.require(path)
    with open(path, "r", encoding="utf-8") as f:
        return [[tokenize(ref) for ref in line.split(REFERENCE_SEPARATOR)] for line in f.read().splitlines()]


def evaluate_files(captions_path, references_path, config, ref_graphs_path=None):
    hypotheses = read_sentences(runs.require(captions_path))
    references = read_references(references_path)
    ref_graphs = read_graphs(runs.require(ref_graphs_path)) if ref_graphs_path else None
    return generate_score_summary(hypotheses, references, _lexicon(config), ref_graphs)


# ---------------- ablate ----------------

def _score_row(labels, summary):
    row = dict(labels)
    row.update({name: summary[name] for name in METRIC_COLUMNS})
    return row


def _test_split(run_dir):
    images = read_graphs(runs.run_file(run_dir, runs.TEST_IMAGES, must_exist=True))
    latent = read_graphs(runs.run_file(run_dir, runs.TEST_GRAPHS, must_exist=True))
    references = [[s] for s in read_sentences(runs.run_file(run_dir, runs.TEST_REFERENCES, must_exist=True))]
    return images, latent, references


def _score_captions(model, graphs, references, latent, lexicon, config, aligner=None):
    keep = [i for i, g in enumerate(graphs) if _is_encodable(g, model.graph_vocab, config)]
    captions = caption_graphs(model, [graphs[i] for i in keep], config.beam, aligner)
    return generate_score_summary(captions, [references[i] for i in keep], lexicon, [latent[i] for i in keep])


def ablate(config, run_dir, grid, seeds):
    """
    Run one ablation grid; every row carries the evaluate metric columns.

    Grids:
        variant  decoder avg / att-shared / att, scored on text
                 reconstruction and on unpaired captioning without mapping
        gan      GAN loss {bce, mse, gp} x discriminator width {1, 64, d_f}
        mapping  no mapping, separate, shared and single mappers
    """
    lexicon = _lexicon(config)
    rows = []
    for seed in seeds:
        seeded = config.replace(seed=seed)
        base = os.path.join(run_dir, f"ablate-{grid}", f"seed{seed}")
        gen_data(seeded, base)
        images, latent, references = _test_split(base)

        if grid == "variant":
            for variant in ("avg", "att-shared", "att"):
                variant_dir = os.path.join(base, variant)
                _link_corpus(base, variant_dir)
                model, _ = train_text_phase(seeded.replace(variant=variant), variant_dir)
                text_pairs = sentence_pairs([r[0] for r in references], lexicon, seeded)
                text_graphs = [g for g, _ in text_pairs]
                text_refs = [[s] for _, s in text_pairs]
                summary = _score_captions(model, text_graphs, text_refs, text_graphs, lexicon, seeded)
                rows.append(_score_row({"variant": variant, "setting": "text", "seed": seed}, summary))
                summary = _score_captions(model, images, references, latent, lexicon, seeded)
                rows.append(_score_row({"variant": variant, "setting": "unpaired", "seed": seed}, summary))
            continue

        model, _ = train_text_phase(seeded, base)
        if grid == "gan":
            for kind in ("bce", "mse", "gp"):
                for out_dim in (1, 64, seeded.d_f):
                    variant = seeded.replace(gan_kind=kind, disc_out_dim=out_dim)
                    aligner, _, _ = align_phase(variant, base)
                    summary = _score_captions(model, images, references, latent, lexicon, variant, aligner)
                    rows.append(_score_row({"gan_kind": kind, "disc_out_dim": out_dim, "seed": seed}, summary))
        elif grid == "mapping":
            summary = _score_captions(model, images, references, latent, lexicon, seeded)
            rows.append(_score_row({"mapping": "none", "seed": seed}, summary))
            for mapping in ("separate", "shared", "single"):
                variant = seeded.replace(mapping=mapping)
                aligner, _, _ = align_phase(variant, base)
                summary = _score_captions(model, images, references, latent, lexicon, variant, aligner)
                rows.append(_score_row({"mapping": mapping, "seed": seed}, summary))
        else:
            raise ValueError(f"unknown ablation grid {grid!r}")

    table = pd.DataFrame(rows)
    logger.info("ablate %s:\n%s", grid, table.to_string(index=False))
    return table


def _link_corpus(source_dir, target_dir):
    """Copy the corpus files of a run into a sibling run directory."""
    os.makedirs(target_dir, exist_ok=True)
    for name in (runs.TRAIN_SENTENCES, runs.TRAIN_IMAGES, runs.VAL_SENTENCES,
                 runs.TEST_IMAGES, runs.TEST_GRAPHS, runs.TEST_REFERENCES):
        with open(os.path.join(source_dir, name), "rb") as src, open(os.path.join(target_dir, name), "wb") as dst:
            dst.write(src.read())


# ---------------- parse ----------------

def parse_file(config, sentences_path, out_path, trace=False):
    """
    Parse a sentence file into an interchange graph file.

    Returns:
        one explanation report per parsed sentence when ``trace`` is set
    """
    lexicon = _lexicon(config)
    graphs, reports = [], []
    for index, tokens in enumerate(read_sentences(runs.require(sentences_path))):
        try:
            graph, parse_trace = parse_with_trace(tokens, lexicon)
        except ParseError as exc:
            logger.warning("sentence %d not parsed: %s", index, exc)
            continue
        graphs.append(graph.with_id(str(index)))
        if trace:
            reports.append(format_report(explain_parse(parse_trace)))
    write_graphs(graphs, out_path)
    logger.info("parse: %d graph(s) written to %s", len(graphs), out_path)
    return reports
