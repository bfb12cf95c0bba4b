import logging
import os
import sys

import click

import pipeline
from analysis.summary_generator import summary_text
from config import load_config
from errors import PipelineError
from reports.report_generator import create_excel_report, create_pdf_report, metric_table, write_score_table
from store import runs

logger = logging.getLogger("sgalign")


class PipelineGroup(click.Group):
    """Maps pipeline errors to their exit codes instead of a traceback."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except PipelineError as exc:
            logger.error("%s: %s", type(exc).__name__, exc)
            click.echo(f"error: {exc}", err=True)
            ctx.exit(exc.exit_code)


def _setup_logging(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


# ---------------- ROOT ----------------

@click.group(cls=PipelineGroup)
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="flat key = value config file")
@click.option("--verbose", is_flag=True, help="debug logging")
@click.pass_context
def cli(ctx, config_path, verbose):
    """Unpaired captioning through scene-graph alignment."""
    _setup_logging(verbose)
    ctx.obj = load_config(config_path)


def _run_dir(name):
    return runs.resolve_run_dir(name)


# ---------------- CORPUS ----------------

@cli.command("gen-data")
@click.option("--run", "run_name", default="default", show_default=True)
@click.pass_obj
def gen_data(config, run_name):
    counts = pipeline.gen_data(config, _run_dir(run_name))
    click.echo(" ".join(f"{k}={v}" for k, v in counts.items()))


@cli.command("parse")
@click.argument("sentences", type=click.Path())
@click.argument("output", type=click.Path(dir_okay=False))
@click.option("--trace", is_flag=True, help="print the rule applied to every parsed span")
@click.pass_obj
def parse(config, sentences, output, trace):
    for report in pipeline.parse_file(config, sentences, output, trace):
        click.echo(report)


# ---------------- TRAINING ----------------

@cli.command("train-text")
@click.option("--run", "run_name", default="default", show_default=True)
@click.pass_obj
def train_text(config, run_name):
    _, log = pipeline.train_text_phase(config, _run_dir(run_name))
    if len(log):
        click.echo(log.tail(1).to_string(index=False))


@cli.command("align")
@click.option("--run", "run_name", default="default", show_default=True)
@click.option("--checkpoint", type=click.Path(), default=None,
              help="text checkpoint; defaults to the run's text.pt")
@click.pass_obj
def align(config, run_name, checkpoint):
    _, _, table = pipeline.align_phase(config, _run_dir(run_name), checkpoint)
    click.echo(table.to_string(index=False))


# ---------------- INFERENCE ----------------

@cli.command("caption")
@click.argument("graphs", type=click.Path())
@click.option("--run", "run_name", default="default", show_default=True)
@click.option("--checkpoint", type=click.Path(), default=None, help="text checkpoint")
@click.option("--align-checkpoint", type=click.Path(), default=None, help="alignment checkpoint")
@click.option("--no-mapping", is_flag=True, help="caption without the feature mapping")
@click.option("--beam", type=int, default=None, help="beam width; defaults to the config's")
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None,
              help="caption file; defaults to captions.txt in the run directory")
@click.pass_obj
def caption(config, graphs, run_name, checkpoint, align_checkpoint, no_mapping, beam, output):
    run_dir = _run_dir(run_name)
    checkpoint = runs.require(checkpoint or runs.run_file(run_dir, runs.TEXT_CHECKPOINT))
    if no_mapping:
        align_checkpoint = None
    else:
        align_checkpoint = runs.require(align_checkpoint or runs.run_file(run_dir, runs.ALIGN_CHECKPOINT))
    output = output or os.path.join(run_dir, "captions.txt")
    n = pipeline.caption_file(checkpoint, graphs, output, beam or config.beam, align_checkpoint)
    click.echo(f"{n} caption(s) -> {output}")


@cli.command("evaluate")
@click.argument("captions", type=click.Path())
@click.argument("references", type=click.Path())
@click.option("--ref-graphs", type=click.Path(), default=None,
              help="reference scene graphs for SPICE-lite")
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None, help="score table (.tsv)")
@click.option("--pdf", type=click.Path(dir_okay=False), default=None)
@click.option("--xlsx", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
def evaluate(config, captions, references, ref_graphs, output, pdf, xlsx):
    summary = pipeline.evaluate_files(captions, references, config, ref_graphs)
    table = metric_table(summary)
    if output:
        write_score_table(table, output)
    if pdf:
        create_pdf_report(table, pdf, "Caption scores")
    if xlsx:
        create_excel_report(table, xlsx, "Caption scores")
    logger.info("evaluate: %s", summary_text(summary))
    click.echo(table.to_csv(sep="\t", index=False, float_format="%.6f"), nl=False)


# ---------------- ABLATION ----------------

@cli.command("ablate")
@click.argument("grid", type=click.Choice(["variant", "gan", "mapping"]))
@click.option("--run", "run_name", default="default", show_default=True)
@click.option("--seeds", default="0", show_default=True, help="comma-separated seeds")
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None)
@click.option("--pdf", type=click.Path(dir_okay=False), default=None)
@click.option("--xlsx", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
def ablate(config, grid, run_name, seeds, output, pdf, xlsx):
    try:
        seed_list = [int(s) for s in seeds.split(",") if s.strip()]
    except ValueError:
        raise click.BadParameter(f"not a comma-separated list of integers: {seeds}", param_hint="--seeds")
    run_dir = _run_dir(run_name)
    table = pipeline.ablate(config, run_dir, grid, seed_list)
    write_score_table(table, output or os.path.join(run_dir, f"ablate_{grid}.tsv"))
    if pdf:
        create_pdf_report(table, pdf, f"Ablation: {grid}")
    if xlsx:
        create_excel_report(table, xlsx, f"Ablation: {grid}")
    click.echo(table.to_csv(sep="\t", index=False, float_format="%.6f"), nl=False)


if __name__ == "__main__":
    cli()
