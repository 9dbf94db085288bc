"""Command-line entry point wiring all pipelines.

One binary, verb subcommands; every stage reads and writes JSONL so
stages compose via files. A TOML config file can preset any flag
(section per subcommand); explicit flags win. Each run writes its
resolved configuration beside its outputs as ``<out>.config.json``.

Exit codes: 0 success, 1 usage, 2 data/schema, 3 transport.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import corpus, matching, metrics, prompting, scoring, selection
from .errors import (
    KpsumError,
    RunFailureError,
    TemplateError,
    TransportError,
)
from .phrasing import Granularity, load_stopwords, segment


def _write_resolved_config(out: str, params: dict) -> None:
    side = Path(str(out) + ".config.json")
    clean = {k: (str(v) if isinstance(v, Path) else v) for k, v in params.items()}
    side.write_text(
        json.dumps(clean, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def _load_corpus(dataset, sample, seed, max_tokens):
    ds = corpus.load_dataset(dataset)
    if sample is not None:
        ds = corpus.sample_subset(ds, sample, seed)
    if max_tokens is not None:
        ds = corpus.Dataset(
            tuple(corpus.truncate_document(d, max_tokens) for d in ds), name=ds.name
        )
    return ds


def _stopwords(path):
    return load_stopwords(path) if path else None


def _write_keyphrases(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


@click.group()
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="TOML file with per-subcommand flag defaults; explicit flags win.",
)
@click.pass_context
def cli(ctx, config_path):
    """Keyphrase signal pipelines: label, extract, run, evaluate."""
    if config_path:
        with open(config_path, "rb") as fh:
            ctx.default_map = tomllib.load(fh)


def _common_options(fn):
    fn = click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False),
                      help="Dataset JSONL file.")(fn)
    fn = click.option("--sample", type=int, default=None, help="Evaluate on a sampled subset of this size.")(fn)
    fn = click.option("--seed", type=int, default=0, show_default=True, help="PRNG seed for sampling.")(fn)
    fn = click.option("--max-tokens", type=int, default=None,
                      help="Truncate sources to this many whitespace tokens first.")(fn)
    fn = click.option("--stopwords", "stopwords_path", type=click.Path(exists=True, dir_okay=False),
                      default=None, help="Override the bundled stopword list.")(fn)
    fn = click.option("--jobs", type=int, default=1, show_default=True,
                      help="Parallel workers for data-parallel stages.")(fn)
    return fn


@cli.command()
@_common_options
@click.option("--granularity", type=click.Choice(["word", "phrase", "sentence"]),
              default="phrase", show_default=True)
@click.option("--epsilon", type=float, default=0.7, show_default=True,
              help="Fuzzy matching threshold for salience labels.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def label(dataset, sample, seed, max_tokens, stopwords_path, jobs, granularity, epsilon, out):
    """Build salience-labeled training records from document/summary pairs."""
    ds = _load_corpus(dataset, sample, seed, max_tokens)
    cfg = matching.MatchConfig(epsilon=epsilon)
    count = matching.emit_training_records(
        ds, Granularity(granularity), cfg, out, stopwords=_stopwords(stopwords_path)
    )
    _write_resolved_config(out, {
        "command": "label", "dataset": dataset, "sample": sample, "seed": seed,
        "max_tokens": max_tokens, "stopwords": stopwords_path, "jobs": jobs,
        "granularity": granularity, "epsilon": epsilon, "out": out,
    })
    click.echo(f"wrote {count} training records to {out}")


def _make_scorer(scorer, scores_path, stopwords):
    if scorer == "external":
        if not scores_path:
            raise click.UsageError("--scorer external requires --scores")
        return scoring.ExternalScorer(scoring.load_external_scores(scores_path), stopwords)
    if scorer == "textrank":
        return scoring.TextRankScorer(stopwords=stopwords)
    if scorer == "rake":
        return scoring.RakeScorer(stopwords=stopwords)
    if scorer == "oracle":
        return scoring.OracleScorer(stopwords=stopwords)
    raise click.UsageError(f"unknown scorer {scorer!r}")


@cli.command()
@_common_options
@click.option("--scorer", type=click.Choice(["external", "textrank", "rake"]), required=True)
@click.option("--scores", "scores_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Logits JSONL (required with --scorer external).")
@click.option("--k", type=int, default=15, show_default=True, help="Keyphrases to keep per document.")
@click.option("--epsilon", type=float, default=0.7, show_default=True,
              help="Fuzzy dedup threshold.")
@click.option("--granularity", type=click.Choice(["word", "phrase", "sentence"]),
              default="phrase", show_default=True)
@click.option("--aggregate", type=click.Choice(["mean", "sum"]), default="mean",
              show_default=True, help="Phrase score aggregation (sum = native RAKE ranking).")
@click.option("--order", type=click.Choice(["score", "position"]), default="score",
              show_default=True, help="Order of phrases in the output list.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def extract(dataset, sample, seed, max_tokens, stopwords_path, jobs, scorer, scores_path,
            k, epsilon, granularity, aggregate, order, out):
    """Extract top-K deduplicated keyphrases per document."""
    ds = _load_corpus(dataset, sample, seed, max_tokens)
    stop = _stopwords(stopwords_path)
    src = _make_scorer(scorer, scores_path, stop)
    cfg = matching.MatchConfig(epsilon=epsilon)
    gran = Granularity(granularity)

    def worker(doc):
        spans = segment(doc.source, gran, stop)
        kset = selection.select_keyphrases(spans, src.score(doc), k, cfg, aggregate=aggregate)
        ordered = kset.ordered(order)
        return {
            "id": doc.id,
            "keyphrases": [p.text for p in ordered],
            "scores": [p.score for p in ordered],
        }

    rows = prompting._map_documents(worker, ds, jobs)
    _write_keyphrases(out, rows)
    _write_resolved_config(out, {
        "command": "extract", "dataset": dataset, "sample": sample, "seed": seed,
        "max_tokens": max_tokens, "stopwords": stopwords_path, "jobs": jobs,
        "scorer": scorer, "scores": scores_path, "k": k, "epsilon": epsilon,
        "granularity": granularity, "aggregate": aggregate, "order": order, "out": out,
    })
    click.echo(f"wrote keyphrases for {len(rows)} documents to {out}")


@cli.command()
@_common_options
@click.option("--mode", type=click.Choice(["source", "external"]), default="source",
              show_default=True,
              help="source: best source match per summary phrase; external: summary phrases unmatched in the source.")
@click.option("--granularity", type=click.Choice(["word", "phrase", "sentence"]),
              default="phrase", show_default=True)
@click.option("--epsilon", type=float, default=0.7, show_default=True,
              help="Match threshold for external mode.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def oracle(dataset, sample, seed, max_tokens, stopwords_path, jobs, mode, granularity,
           epsilon, out):
    """Construct oracle keyphrases from reference summaries."""
    ds = _load_corpus(dataset, sample, seed, max_tokens)
    stop = _stopwords(stopwords_path)
    gran = Granularity(granularity)
    cfg = matching.MatchConfig(epsilon=epsilon)

    def worker(doc):
        if mode == "source":
            spans = matching.oracle_keyphrases(doc, gran, stop)
        else:
            spans = matching.external_oracle_keyphrases(doc, gran, cfg, stop)
        return {"id": doc.id, "keyphrases": [s.text for s in spans]}

    rows = prompting._map_documents(worker, ds, jobs)
    _write_keyphrases(out, rows)
    _write_resolved_config(out, {
        "command": "oracle", "dataset": dataset, "sample": sample, "seed": seed,
        "max_tokens": max_tokens, "stopwords": stopwords_path, "jobs": jobs,
        "mode": mode, "granularity": granularity, "epsilon": epsilon, "out": out,
    })
    click.echo(f"wrote oracle keyphrases for {len(rows)} documents to {out}")


def _template_option(name, required=True):
    return click.option(name, required=required, type=click.Path(exists=True, dir_okay=False))


@cli.command()
@_common_options
@_template_option("--template")
@click.option("--endpoint", "endpoint_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Endpoint config JSON (mock:// URLs run offline).")
@click.option("--scorer", type=click.Choice(["external", "textrank", "rake", "oracle"]),
              default=None, help="Keyphrase score source (required for keyphrase templates).")
@click.option("--scores", "scores_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--k", type=int, default=15, show_default=True)
@click.option("--epsilon", type=float, default=0.7, show_default=True)
@click.option("--order", type=click.Choice(["score", "position"]), default="score", show_default=True)
@click.option("--max-completion-tokens", type=int, default=512, show_default=True)
@click.option("--temperature", type=float, default=0.0, show_default=True)
@click.option("--failure-cap", type=float, default=0.1, show_default=True,
              help="Abort when the per-document failure ratio exceeds this.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def run(dataset, sample, seed, max_tokens, stopwords_path, jobs, template, endpoint_path,
        scorer, scores_path, k, epsilon, order, max_completion_tokens, temperature,
        failure_cap, out):
    """Run prompt-based summarization over a dataset."""
    ds = _load_corpus(dataset, sample, seed, max_tokens)
    tpl = prompting.load_template(template)
    stop = _stopwords(stopwords_path)
    if tpl.needs_keyphrases and scorer is None:
        raise click.UsageError("keyphrase template requires --scorer")
    src = _make_scorer(scorer, scores_path, stop) if scorer else None
    endpoint = prompting.load_endpoint_config(endpoint_path)
    report = prompting.run_summarization(
        ds, tpl, src, k, endpoint, out,
        match=matching.MatchConfig(epsilon=epsilon),
        stopwords=stop,
        order=order,
        max_completion_tokens=max_completion_tokens,
        temperature=temperature,
        failure_cap=failure_cap,
        jobs=jobs,
    )
    _write_resolved_config(out, {
        "command": "run", "dataset": dataset, "sample": sample, "seed": seed,
        "max_tokens": max_tokens, "stopwords": stopwords_path, "jobs": jobs,
        "template": template, "endpoint": endpoint_path, "scorer": scorer,
        "scores": scores_path, "k": k, "epsilon": epsilon, "order": order,
        "max_completion_tokens": max_completion_tokens, "temperature": temperature,
        "failure_cap": failure_cap, "out": out,
    })
    click.echo(
        f"summarized {report.n_ok}/{report.n_total} documents "
        f"({report.completion_calls} completion calls) -> {out}"
    )


@cli.command("run-two-stage")
@_common_options
@_template_option("--extract-template")
@_template_option("--abstract-template")
@click.option("--endpoint", "endpoint_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--max-completion-tokens", type=int, default=512, show_default=True)
@click.option("--temperature", type=float, default=0.0, show_default=True)
@click.option("--failure-cap", type=float, default=0.1, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def run_two_stage(dataset, sample, seed, max_tokens, stopwords_path, jobs, extract_template,
                  abstract_template, endpoint_path, max_completion_tokens, temperature,
                  failure_cap, out):
    """Extract-then-abstract baseline: two completion passes per document."""
    ds = _load_corpus(dataset, sample, seed, max_tokens)
    report = prompting.two_stage_summarize(
        ds,
        prompting.load_template(extract_template),
        prompting.load_template(abstract_template),
        prompting.load_endpoint_config(endpoint_path),
        out,
        max_completion_tokens=max_completion_tokens,
        temperature=temperature,
        failure_cap=failure_cap,
        jobs=jobs,
    )
    _write_resolved_config(out, {
        "command": "run-two-stage", "dataset": dataset, "sample": sample, "seed": seed,
        "max_tokens": max_tokens, "stopwords": stopwords_path, "jobs": jobs,
        "extract_template": extract_template, "abstract_template": abstract_template,
        "endpoint": endpoint_path, "max_completion_tokens": max_completion_tokens,
        "temperature": temperature, "failure_cap": failure_cap, "out": out,
    })
    click.echo(
        f"summarized {report.n_ok}/{report.n_total} documents "
        f"({report.completion_calls} completion calls) -> {out}"
    )


@cli.command("eval")
@click.option("--run", "run_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Run output JSONL; omit for keyphrase-recall-only evaluation.")
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--keyphrases", "keyphrases_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Predicted keyphrases JSONL.")
@click.option("--oracle", "oracle_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Oracle keyphrases JSONL.")
@click.option("--k-list", default="15", show_default=True,
              help="Comma-separated K values for recall@K.")
@click.option("--epsilon", type=float, default=0.7, show_default=True)
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None,
              help="Write the JSON report here (default: stdout only).")
def eval_cmd(run_path, dataset, keyphrases_path, oracle_path, k_list, epsilon, report_path):
    """Score a run (ROUGE) and/or keyphrase predictions (recall@K)."""
    if run_path is None and not (keyphrases_path and oracle_path):
        raise click.UsageError("provide --run, or both --keyphrases and --oracle")
    if bool(keyphrases_path) != bool(oracle_path):
        raise click.UsageError("--keyphrases and --oracle must be given together")
    ds = corpus.load_dataset(dataset)
    ks = tuple(int(x) for x in str(k_list).split(",") if str(x).strip())
    report = metrics.evaluate_run(
        run_path, ds,
        keyphrases_path=keyphrases_path,
        oracle_path=oracle_path,
        k_list=ks,
        cfg=matching.MatchConfig(epsilon=epsilon),
    )
    click.echo(report.text_table())
    if report_path:
        Path(report_path).write_text(report.to_json() + "\n", encoding="utf-8")
        _write_resolved_config(report_path, {
            "command": "eval", "run": run_path, "dataset": dataset,
            "keyphrases": keyphrases_path, "oracle": oracle_path,
            "k_list": list(ks), "epsilon": epsilon, "report": report_path,
        })


def main(argv=None) -> int:
    """Invoke the CLI, mapping exceptions to documented exit codes."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except (TransportError, RunFailureError) as exc:
        click.echo(f"transport error: {exc}", err=True)
        return 3
    except TemplateError as exc:
        click.echo(f"template error: {exc}", err=True)
        return 2
    except KpsumError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except OSError as exc:
        click.echo(f"i/o error: {exc}", err=True)
        return 2


def entrypoint() -> None:
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    entrypoint()
