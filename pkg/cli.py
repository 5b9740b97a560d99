import functools
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import click
from pydantic import ValidationError

from corpus.loaders import load_query_lines
from corpus.normalize import normalize_text
from models.classifier import TASK_MAX_LEN
from models.dga import DgaConfig, DgaFamily
from models.graph import RankAlgorithm
from models.permutation import ALL_TECHNIQUES, Technique
from models.run_config import RunConfig
from models.samples import SampleKind
from models.tunnel import TunnelConfig
from sentinel import __version__, artifacts, dgagen, evalharness, whoisgraph
from sentinel.errors import DataError, SentinelError
from sentinel.pipeline import ARCHITECTURES, DetectionPipeline

logger = logging.getLogger(__name__)


def _float_list(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {text!r}")


def _techniques(text: Optional[str]):
    if not text:
        return ALL_TECHNIQUES
    try:
        return frozenset(Technique(item.strip()) for item in text.split(",") if item.strip())
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint="--techniques")


def _write_lines(lines: List[str], out: Optional[str]) -> None:
    with click.open_file(out or "-", "w", encoding="utf-8") as f:
        for line in lines:
            f.write(line + "\n")


OUTPUT_PARAMS = frozenset({"out", "out_dir", "dot_path", "history_path", "roc_path", "report_path"})


def pass_pipeline(f):
    """Like click.pass_obj, and records the command's file arguments on the run config."""
    @click.pass_context
    def new_func(ctx: click.Context, *args, **kwargs):
        pipeline: DetectionPipeline = ctx.obj
        config = pipeline.config
        config.subcommand = ctx.command_path.split(" ", 1)[-1]
        for param in ctx.command.params:
            value = ctx.params.get(param.name)
            if value is not None and isinstance(param.type, click.Path):
                target = config.outputs if param.name in OUTPUT_PARAMS else config.inputs
                target[param.name] = str(value)
        logger.debug("Running %s inputs=%s outputs=%s", config.subcommand, config.inputs, config.outputs)
        return ctx.invoke(f, pipeline, *args, **kwargs)

    return functools.update_wrapper(new_func, f)


@click.group()
@click.version_option(__version__, prog_name="sentinel")
@click.option("--seed", type=int, default=None, help="Global seed (default: $SENTINEL_SEED or 42).")
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
@click.option("-q", "--quiet", is_flag=True, help="Warnings and errors only.")
@click.pass_context
def cli(ctx: click.Context, seed: Optional[int], verbose: bool, quiet: bool):
    """BotnetSentinel: one subcommand per detection stage."""
    verbosity = "DEBUG" if verbose else "WARNING" if quiet else None
    config = RunConfig.from_env(seed=seed, verbosity=verbosity, subcommand=ctx.invoked_subcommand or "")
    logging.getLogger().setLevel(config.verbosity)
    ctx.obj = DetectionPipeline(config)


# corpus

@cli.group()
def corpus():
    """Dataset preparation."""


@corpus.command(name="split")
@click.option("--benign", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--malicious", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--kind", type=click.Choice([k.value for k in SampleKind]), default="domain", show_default=True)
@click.option("--ranking", is_flag=True, help="Benign input is a rank,domain CSV.")
@click.option("--limit", type=int, default=None, help="Keep only the top N ranked domains.")
@click.option("--fractions", default="0.8,0.1,0.1", show_default=True)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@pass_pipeline
def corpus_split(pipeline: DetectionPipeline, benign, malicious, kind, ranking, limit, fractions, out_dir):
    """Stratified train/validation/test split written as labeled TSV files."""
    parts = _float_list(fractions)
    if len(parts) != 3:
        raise click.BadParameter("expected three fractions", param_hint="--fractions")
    split = pipeline.split_corpus(benign, malicious, SampleKind(kind), out_dir, tuple(parts), ranking, limit)
    click.echo(f"train={len(split.train)} validation={len(split.validation)} test={len(split.test)}", err=True)


# spoof registration

@cli.group()
def spoofgen():
    """Spoof permutations of protected domains."""


@spoofgen.command(name="gen")
@click.option("--domain", required=True, help="Protected domain, e.g. amazon.com.")
@click.option("--techniques", default=None, help="Comma-separated subset of techniques.")
@click.option("--out", default=None, type=click.Path(dir_okay=False), help="Output file (default: stdout).")
@pass_pipeline
def spoofgen_gen(pipeline: DetectionPipeline, domain, techniques, out):
    """Print technique<TAB>candidate rows."""
    origin = normalize_text(domain, SampleKind.DOMAIN)
    permutations = pipeline.generate_permutations(origin, _techniques(techniques))
    _write_lines([f"{p.technique.value}\t{p.candidate}" for p in permutations], out)


@spoofgen.command(name="watch")
@click.option("--brands", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--feed", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--techniques", default=None, help="Comma-separated subset of techniques.")
@click.option("--out", default=None, type=click.Path(dir_okay=False))
@pass_pipeline
def spoofgen_watch(pipeline: DetectionPipeline, brands, feed, techniques, out):
    """Match a newly-observed-domain feed against brand permutations."""
    hits = pipeline.watch(brands, feed, _techniques(techniques))
    _write_lines([
        json.dumps({
            "observed": hit.observed,
            "brand": hit.brand,
            "technique": hit.permutation.technique.value,
            "first_seen": hit.first_seen,
        }, sort_keys=True)
        for hit in hits
    ], out)


# bulk registration

@cli.group()
def whois():
    """WHOIS link analysis."""


@whois.command(name="rank")
@click.option("--fixtures", required=True, type=click.Path(exists=True))
@click.option("--algo", type=click.Choice([a.value for a in RankAlgorithm]), default="pagerank", show_default=True)
@click.option("--top", type=int, default=None)
@click.option("--dot", "dot_path", default=None, type=click.Path(dir_okay=False), help="Also write Graphviz text.")
@click.option("--out", default=None, type=click.Path(dir_okay=False))
@pass_pipeline
def whois_rank(pipeline: DetectionPipeline, fixtures, algo, top, dot_path, out):
    """Rank domains and WHOIS attributes; prints kind<TAB>node<TAB>score."""
    graph, result = pipeline.rank_whois(fixtures, RankAlgorithm(algo))
    rows = whoisgraph.ranked(graph, result, top)
    _write_lines([f"{kind}\t{label}\t{score!r}" for kind, label, score in rows], out)
    if dot_path:
        Path(dot_path).write_text(whoisgraph.to_dot(graph, result), encoding="utf-8")


@whois.command(name="campaigns")
@click.option("--fixtures", required=True, type=click.Path(exists=True))
@click.option("--window-secs", type=int, default=3600, show_default=True)
@click.option("--out", default=None, type=click.Path(dir_okay=False))
@pass_pipeline
def whois_campaigns(pipeline: DetectionPipeline, fixtures, window_secs, out):
    """One bulk-registration cluster per line, comma-separated."""
    clusters = pipeline.find_campaigns(fixtures, window_secs)
    _write_lines([",".join(cluster) for cluster in clusters], out)


# command and control

@cli.group()
def dga():
    """Reference DGA generators."""


@dga.command(name="gen")
@click.option("--family", required=True, type=click.Choice([f.value for f in DgaFamily]))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--count", type=int, required=True)
@click.option("--len", "length", type=int, default=12, show_default=True)
@click.option("--tld", default="com", show_default=True)
@click.option("--date", type=click.DateTime(formats=["%Y-%m-%d"]), default=None, help="YYYY-MM-DD for date_seeded.")
@click.option("--out", default=None, type=click.Path(dir_okay=False))
@pass_pipeline
def dga_gen(pipeline: DetectionPipeline, family, seed, count, length, tld, date, out):
    """Write generated domains, one per line."""
    try:
        config = DgaConfig(
            family=DgaFamily(family),
            seed=seed,
            count=count,
            length=length,
            tld=tld,
            date=(date.year, date.month, date.day) if date else None,
        )
    except ValidationError as e:
        raise DataError(f"invalid DGA configuration: {e}") from e
    _write_lines([s.text for s in pipeline.generate_dga(config)], out)


@dga.command(name="families")
def dga_families():
    """List the generator families."""
    for family in dgagen.list_families():
        click.echo(f"{family.name.value}\t{','.join(family.parameters)}\t{family.archetype}")


# lexical classifiers

@cli.group()
def model():
    """Train, apply and evaluate lexical classifiers."""


@model.command(name="train")
@click.option("--arch", required=True, type=click.Choice(ARCHITECTURES))
@click.option("--task", type=click.Choice(sorted(TASK_MAX_LEN)), default="dga", show_default=True)
@click.option("--train", "train_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--val", "val_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Model artifact path.")
@click.option("--history", "history_path", default=None, type=click.Path(dir_okay=False), help="Per-epoch CSV.")
@click.option("--epochs", type=int, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--lr", type=float, default=None)
@click.option("--l2", type=float, default=None, help="Linear models only.")
@click.option("--embed-dim", type=int, default=None, help="LSTM only.")
@click.option("--hidden-dim", type=int, default=None, help="LSTM only.")
@click.option("--max-len", type=int, default=None, help="LSTM only.")
@click.option("--dropout", type=float, default=None, help="LSTM only.")
@click.option("--patience", type=int, default=None, help="LSTM only.")
@pass_pipeline
def model_train(pipeline: DetectionPipeline, arch, task, train_path, val_path, out, history_path,
                epochs, batch_size, lr, l2, embed_dim, hidden_dim, max_len, dropout, patience):
    """Train an lstm, ngram-lr or bow-lr classifier."""
    if arch == "lstm":
        overrides = dict(
            max_epochs=epochs, batch_size=batch_size, lr=lr, embed_dim=embed_dim,
            hidden_dim=hidden_dim, max_len=max_len, dropout_rate=dropout, patience=patience,
        )
    else:
        overrides = dict(epochs=epochs, batch_size=batch_size, lr=lr, l2=l2)
    try:
        artifact, history = pipeline.train_model(arch, task, train_path, val_path, **overrides)
    except ValidationError as e:
        raise DataError(f"invalid hyperparameters: {e}") from e
    artifacts.save_artifact(artifact, out)
    if history_path:
        artifacts.write_history_csv(history, history_path)
    click.echo(f"Trained {arch} for {len(history)} epochs -> {out}", err=True)


@model.command(name="classify")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="One domain or URL per line.")
@click.option("--kind", type=click.Choice([k.value for k in SampleKind]), default="domain", show_default=True)
@click.option("--out", default=None, type=click.Path(dir_okay=False))
@pass_pipeline
def model_classify(pipeline: DetectionPipeline, model_path, input_path, kind, out):
    """Print text<TAB>probability rows."""
    texts = load_query_lines(input_path, SampleKind(kind))
    scores = pipeline.classify(model_path, texts)
    _write_lines([f"{text}\t{score!r}" for text, score in zip(texts, scores)], out)


@model.command(name="eval")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--test", "test_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--roc", "roc_path", default=None, type=click.Path(dir_okay=False), help="ROC CSV output.")
@click.option("--report", "report_path", default=None, type=click.Path(dir_okay=False), help="Report JSON output.")
@click.option("--fpr-targets", default="0.001,0.007,0.01,0.016", show_default=True)
@click.option("--interpolate", is_flag=True, help="Interpolate TPR between ROC vertices.")
@pass_pipeline
def model_eval(pipeline: DetectionPipeline, model_path, test_path, roc_path, report_path, fpr_targets, interpolate):
    """ROC, AUC, accuracy and TPR at the requested FPR targets."""
    report, curve = pipeline.evaluate_model(model_path, test_path, _float_list(fpr_targets), interpolate)
    if roc_path:
        evalharness.write_roc_csv(curve, roc_path)
    if report_path:
        evalharness.write_report_json(report, report_path)
    else:
        click.echo(evalharness.report_to_json(report), nl=False)


# exfiltration

@cli.group()
def dns():
    """DNS tunneling detection."""


@dns.command(name="score")
@click.option("--log", "log_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", default=None, type=click.Path(exists=True, dir_okay=False),
              help="JSON document mirroring TunnelConfig.")
@click.option("--out", default=None, type=click.Path(dir_okay=False))
@pass_pipeline
def dns_score(pipeline: DetectionPipeline, log_path, config_path, out):
    """Emit one JSON alert per line."""
    config = TunnelConfig()
    if config_path:
        try:
            config = TunnelConfig.model_validate_json(Path(config_path).read_text(encoding="utf-8"))
        except ValidationError as e:
            raise DataError(f"invalid tunnel config {config_path}: {e}") from e
    alerts = pipeline.score_dns(log_path, config)
    _write_lines([json.dumps(alert.model_dump(mode="json"), sort_keys=True) for alert in alerts], out)


def dispatch(argv: Optional[List[str]] = None) -> int:
    """Run the CLI and map failures to exit codes: 1 usage, 2 data."""
    try:
        cli.main(args=argv, prog_name="sentinel", standalone_mode=False)
    except click.UsageError as e:
        if e.ctx is not None:
            click.echo(e.ctx.get_help(), err=True)
        click.echo(f"Error: {e.format_message()}", err=True)
        return 1
    except click.FileError as e:
        click.echo(f"Error: {e.format_message()}", err=True)
        return 2
    except click.Abort:
        click.echo("Aborted!", err=True)
        return 1
    except (SentinelError, OSError) as e:
        logger.error("Run failed: %s", str(e))
        click.echo(f"Error: {str(e)}", err=True)
        return 2
    return 0


def run() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO,
                        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    run()
