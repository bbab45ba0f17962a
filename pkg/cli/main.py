"""
sitevec command line.

    sitevec train --corpus corpus/ --out-dir model/
    sitevec explore nearest --embeddings model/vectors.bin acid
    sitevec keywords --reports reports.txt --out keywords.txt
    sitevec classify --reports reports.txt --labels labels.csv --embeddings model/vectors.bin --compress

Exit codes: 0 success, 1 usage error, 2 data error.
"""

import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import click
from dotenv import load_dotenv

from cli.config import RunConfig, build_default_map, load_config_file, parse_k_grid
from corpus import ingest
from data.errors import CorpusIOError, InvalidArgumentError, SitevecError
from data.models import Document, Task
from data.persistence import PersistenceManager, write_matrix_csv
from documents import keywords as kw
from documents.wmd import bow_distance_matrix, wmd_distance_matrix
from embeddings import store
from embeddings.explore import EmbeddingExplorer, read_word_list, read_word_pairs, write_pca_csv
from embeddings.trainer import SkipGramTrainer
from embeddings.vocab import build_negative_table, build_vocab, load_vocab, save_vocab
from evaluation.experiment import ExperimentOutcome, ExperimentRunner
from evaluation.knn import BOW, METRICS, WMD, nearest_documents
from monitoring.observability import configure_logging, flush_tracing, track_keyword_compression

logger = logging.getLogger(__name__)

TASK_NAMES = [t.value for t in Task]


class SitevecGroup(click.Group):
    """Maps usage errors to exit code 1 and data errors to their own exit code."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            rv = super().main(args=args, prog_name=prog_name, complete_var=complete_var,
                              standalone_mode=False, **extra)
            code = rv if isinstance(rv, int) else 0
        except click.exceptions.Abort:
            click.echo("Aborted!", err=True)
            code = 1
        except click.UsageError as e:
            e.show()
            code = 1
        except click.ClickException as e:
            e.show()
            code = e.exit_code
        except SitevecError as e:
            click.echo(f"Error: {e}", err=True)
            code = e.exit_code
        flush_tracing()
        if standalone_mode:
            sys.exit(code)
        return code


def _embedding_option(multiple: bool = False, required: bool = True):
    return click.option(
        "--embeddings", "embeddings", multiple=multiple, required=required,
        help="Embedding file (.bin is binary, anything else text)" + ("; repeat as NAME=PATH" if multiple else ""),
    )


def _load_embeddings(path: str, restrict_to=None) -> store.EmbeddingMatrix:
    return store.load(path, restrict_to=restrict_to)


def _open_out(path: Optional[str]):
    if path is None or path == "-":
        return click.get_text_stream("stdout")
    try:
        return open(path, "w", encoding="utf-8", newline="")
    except OSError as e:
        raise CorpusIOError(path, e.strerror or str(e)) from e


@click.group(cls=SitevecGroup)
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="key=value file of option defaults")
@click.option("--log-level", default=None, help="DEBUG, INFO, WARNING... (default: $SITEVEC_LOG_LEVEL or INFO)")
@click.pass_context
def cli(ctx: click.Context, config_path: Optional[str], log_level: Optional[str]):
    """Domain word embeddings, Word Mover's Distance and keyword compression for construction injury reports."""
    load_dotenv()
    configure_logging(log_level)
    if config_path:
        ctx.default_map = build_default_map(ctx.command, load_config_file(config_path))


@cli.command()
@click.option("--corpus", "corpus_path", required=True, help="Corpus file or directory of UTF-8 text files")
@click.option("--out-dir", default="model", show_default=True)
@click.option("--stoplist", "stoplists", multiple=True, help="Stopword file, one word per line (repeatable)")
@click.option("--dim", type=int, default=300, show_default=True)
@click.option("--window", type=int, default=5, show_default=True, help="Max context distance n")
@click.option("--negatives", type=int, default=3, show_default=True)
@click.option("--epochs", type=int, default=10, show_default=True)
@click.option("--initial-lr", type=float, default=0.025, show_default=True)
@click.option("--final-lr", type=float, default=1e-4, show_default=True)
@click.option("--subsample-t", type=float, default=1e-5, show_default=True)
@click.option("--min-count", type=int, default=5, show_default=True)
@click.option("--chunk-size", type=int, default=200, show_default=True)
@click.option("--alpha", type=float, default=0.75, show_default=True, help="Unigram exponent of the negative table")
@click.option("--table-size", type=int, default=100_000_000, show_default=True)
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
def train(corpus_path: str, out_dir: str, stoplists: Tuple[str, ...], **options):
    """Train skip-gram embeddings; writes vocab.txt, vectors.txt and vectors.bin."""
    cfg = RunConfig.from_options(**options)
    stopwords = ingest.load_stoplists(stoplists)
    stream = ingest.read_corpus(corpus_path, chunk_size=cfg.chunk_size, stopwords=stopwords)
    vocab = build_vocab(stream, min_count=cfg.min_count)
    tables = build_negative_table(vocab, alpha=cfg.alpha, table_size=max(cfg.table_size, len(vocab)),
                                  threshold=cfg.subsample_t)
    if cfg.epochs == 0:
        logger.warning("epochs=0: writing the initialization snapshot")
    trainer = SkipGramTrainer(vocab, tables, cfg.train_config())
    matrix = trainer.train(stream)

    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise CorpusIOError(out_dir, e.strerror or str(e)) from e
    save_vocab(vocab, out / "vocab.txt")
    store.save(matrix, out / "vectors.txt")
    store.save(matrix, out / "vectors.bin")
    click.echo(f"vocab_size\t{len(vocab)}")
    click.echo(f"dim\t{matrix.dim}")
    click.echo(f"tokens\t{stream.n_tokens}")
    click.echo(f"tokens_per_sec\t{trainer.tokens_per_sec:.0f}")


@cli.group()
def explore():
    """Similarity queries over an embedding file."""


@explore.command()
@_embedding_option()
@click.option("--k", type=int, default=10, show_default=True)
@click.argument("word")
def nearest(embeddings: str, k: int, word: str):
    """The k words most cosine-similar to WORD."""
    for r in EmbeddingExplorer(_load_embeddings(embeddings)).nearest(word, k):
        click.echo(f"{r.word} {r.score:.6f}")


@explore.command()
@_embedding_option()
@click.argument("words", nargs=-1, required=True)
def mismatch(embeddings: str, words: Tuple[str, ...]):
    """The word that fits least with the others."""
    click.echo(EmbeddingExplorer(_load_embeddings(embeddings)).mismatch(list(words)))


@explore.command()
@_embedding_option()
@click.option("--k", type=int, default=10, show_default=True)
@click.option("--keep-inputs", is_flag=True, help="Allow the query words among the answers")
@click.argument("a")
@click.argument("b")
@click.argument("c")
def analogy(embeddings: str, k: int, keep_inputs: bool, a: str, b: str, c: str):
    """A is to B as C is to ?"""
    explorer = EmbeddingExplorer(_load_embeddings(embeddings))
    for r in explorer.analogy(a, b, c, k, exclude_inputs=not keep_inputs):
        click.echo(f"{r.word} {r.score:.6f}")


@explore.command()
@_embedding_option()
@click.option("--words-file", type=click.Path(dir_okay=False), help="Whitespace-separated words")
@click.option("--pairs-file", type=click.Path(dir_okay=False), help="One 'source target' pair per line")
@click.option("--dims", type=int, default=2, show_default=True)
@click.option("--fit-global", is_flag=True, help="Fit components on the whole vocabulary")
@click.option("--header", is_flag=True)
@click.option("--out", default="-", show_default=True)
def pca(embeddings: str, words_file: Optional[str], pairs_file: Optional[str], dims: int, fit_global: bool,
        header: bool, out: str):
    """Project words onto their principal components as CSV rows word,x,y."""
    if bool(words_file) == bool(pairs_file):
        raise click.UsageError("give exactly one of --words-file and --pairs-file")
    try:
        words = read_word_list(words_file) if words_file else read_word_pairs(pairs_file)
    except OSError as e:
        raise CorpusIOError(words_file or pairs_file, e.strerror or str(e)) from e
    projection = EmbeddingExplorer(_load_embeddings(embeddings)).pca_project(words, dims, fit_global)
    stream = _open_out(out)
    write_pca_csv(projection, stream, header=header)
    if out != "-":
        stream.close()


@explore.command()
@_embedding_option()
@click.option("--reports", "reports_path", required=True, help="Processed reports, one per line")
@click.option("--labels", "labels_path", help="Labels CSV to print next to each neighbour")
@click.option("--index", type=int, required=True, help="0-based line of the query report")
@click.option("--k", type=int, default=5, show_default=True)
def reports(embeddings: str, reports_path: str, labels_path: Optional[str], index: int, k: int):
    """The k reports closest to one report by Word Mover's Distance."""
    docs = ingest.read_reports(reports_path)
    if not 0 <= index < len(docs):
        raise InvalidArgumentError(f"--index must be in [0, {len(docs)}), got {index}")
    labels = ingest.read_documents(reports_path, labels_path) if labels_path else None
    matrix = _load_embeddings(embeddings)
    for i, distance in nearest_documents(docs[index], docs, matrix, k=k, exclude=index):
        row = [str(i), f"{distance:.6f}"]
        if labels:
            row += [labels[i].severity, labels[i].injury_type, labels[i].trade]
        row.append(" ".join(docs[i]))
        click.echo("\t".join(row))


@cli.command()
@click.option("--docs-a", required=True, help="Documents, one per line")
@click.option("--docs-b", required=True, help="Documents, one per line")
@click.option("--metric", type=click.Choice(METRICS), default=WMD, show_default=True)
@_embedding_option(required=False)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--out", default="-", show_default=True)
def distance(docs_a: str, docs_b: str, metric: str, embeddings: Optional[str], workers: int, out: str):
    """Dense distance matrix between two document files, as CSV."""
    a = ingest.read_reports(docs_a)
    b = ingest.read_reports(docs_b)
    if metric == WMD:
        if not embeddings:
            raise click.UsageError("--embeddings is required for the wmd metric")
        matrix = wmd_distance_matrix(a, b, _load_embeddings(embeddings), workers=workers)
    else:
        matrix = bow_distance_matrix(a, b, _load_embeddings(embeddings) if embeddings else None)
    stream = _open_out(out)
    write_matrix_csv(matrix, stream)
    if out != "-":
        stream.close()


@cli.command()
@click.option("--reports", "reports_path", required=True, help="Processed reports, one per line")
@click.option("--out", required=True, help="Compressed reports, one per line")
@click.option("--vocab", "vocab_path", help="Keep only these words: a vocabulary or embedding file")
@click.option("--W", "W", type=int, default=8, show_default=True, help="Sliding window size")
@click.option("--p", "p", type=float, default=0.30, show_default=True, help="Share of nodes kept")
@click.option("--min-len", type=int, default=15, show_default=True, help="Shorter reports are kept whole")
@click.option("--scheme", type=click.Choice(kw.SCHEMES), default=kw.SLIDING, show_default=True)
@click.option("--weighted-cores", is_flag=True, help="Peel on weighted degree")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--lengths-csv", type=click.Path(dir_okay=False), help="Per-report lengths before and after")
def keywords(reports_path: str, out: str, vocab_path: Optional[str], lengths_csv: Optional[str], **options):
    """Compress reports to their CoreRank keywords."""
    cfg = RunConfig.from_options(**options)
    docs = ingest.read_reports(reports_path)
    vocabulary = _vocabulary(vocab_path) if vocab_path else None
    compressed = kw.compress_reports(docs, W=cfg.W, p=cfg.p, min_len=cfg.min_len, vocabulary=vocabulary,
                                     weighted=cfg.weighted_cores, scheme=cfg.scheme, workers=cfg.workers)
    try:
        ingest.write_reports(compressed, out)
    except OSError as e:
        raise CorpusIOError(out, e.strerror or str(e)) from e
    summary = kw.summarize_compression(docs, compressed)
    if lengths_csv:
        with _open_out(lengths_csv) as f:
            f.write("report,length_before,length_after\n")
            for i, (n0, n1) in enumerate(zip(summary.lengths_before, summary.lengths_after)):
                f.write(f"{i},{n0},{n1}\n")
    track_keyword_compression(n_reports=len(docs), median_before=summary.median_before,
                              median_after=summary.median_after)
    click.echo("stage\tq1\tmedian\tq3")
    for stage, q in (("before", summary.before), ("after", summary.after)):
        click.echo(f"{stage}\t{q['q1']:g}\t{q['median']:g}\t{q['q3']:g}")


def _vocabulary(path: str):
    """Word set from a vocabulary file (word<TAB>count) or an embedding file."""
    if path.endswith(".bin"):
        return set(store.load(path).words)
    with open(path, "r", encoding="utf-8") as f:
        first = f.readline()
    if "\t" in first:
        return set(load_vocab(path).words)
    return set(store.load(path).words)


@cli.command()
@click.option("--dataset", "dataset_path", help="Raw report table (CSV)")
@click.option("--stoplist", "stoplists", multiple=True)
@_embedding_option(required=False)
@click.option("--vocab", "vocab_path", help="Keep only words of this vocabulary or embedding file")
@click.option("--all-records", is_flag=True, help="Keep reports with blank labels too")
@click.option("--out-reports", required=True)
@click.option("--out-labels", required=True)
def prepare(dataset_path: Optional[str], stoplists: Tuple[str, ...], embeddings: Optional[str],
            vocab_path: Optional[str], all_records: bool, out_reports: str, out_labels: str):
    """Turn the report table into a processed-reports file and a labels file."""
    if not dataset_path:
        raise click.UsageError("--dataset is required")
    records = ingest.load_dataset(dataset_path)
    if not all_records:
        records = ingest.filter_labeled(records)
    source = embeddings or vocab_path
    vocabulary = _vocabulary(source) if source else None
    docs = ingest.process_reports(records, vocabulary, ingest.load_stoplists(stoplists))
    ingest.write_reports((d.tokens for d in docs), out_reports)
    ingest.write_labels(docs, out_labels)
    click.echo(f"reports\t{len(docs)}")
    click.echo(f"empty\t{sum(1 for d in docs if not d.tokens)}")


def _named_embeddings(specs: Sequence[str]) -> List[Tuple[str, str]]:
    named = []
    for spec in specs:
        name, sep, path = spec.partition("=")
        if not sep:
            name, path = Path(spec).stem, spec
        named.append((name, path))
    return named


def _documents(dataset_path, reports_path, labels_path, stoplists, vocabulary) -> List[Document]:
    if dataset_path:
        records = ingest.filter_labeled(ingest.load_dataset(dataset_path))
        return ingest.process_reports(records, vocabulary, ingest.load_stoplists(stoplists))
    if reports_path and labels_path:
        return ingest.read_documents(reports_path, labels_path)
    raise click.UsageError("give --dataset, or --reports together with --labels")


@cli.command()
@click.option("--dataset", "dataset_path", help="Raw report table (CSV); processed on the fly")
@click.option("--reports", "reports_path", help="Processed reports, one per line")
@click.option("--labels", "labels_path", help="Labels CSV matching --reports")
@click.option("--stoplist", "stoplists", multiple=True)
@_embedding_option(multiple=True, required=False)
@click.option("--restrict-vocab", type=click.Path(dir_okay=False),
              help="Keep only embedding rows whose word is in this vocabulary or embedding file")
@click.option("--task", "tasks", multiple=True, type=click.Choice(TASK_NAMES), help="Repeatable; default all")
@click.option("--k", "k_grid", default="5,10,15,20,25", show_default=True, help="Comma-separated k values")
@click.option("--metric", type=click.Choice(METRICS), default=WMD, show_default=True)
@click.option("--compress", "compression", is_flag=True, help="Also run on keyword-compressed reports")
@click.option("--n-folds", type=int, default=4, show_default=True)
@click.option("--shuffle-folds", is_flag=True, help="Shuffle with --seed instead of sequential folds")
@click.option("--per-fold", is_flag=True, help="Average fold-level scores instead of pooling predictions")
@click.option("--prune", is_flag=True, help="Skip WMD for documents whose centroid bound rules them out")
@click.option("--W", "W", type=int, default=8, show_default=True)
@click.option("--p", "p", type=float, default=0.30, show_default=True)
@click.option("--min-len", type=int, default=15, show_default=True)
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--out-dir", default="results", show_default=True)
@click.option("--cache/--no-cache", default=True, show_default=True, help="Reuse per-fold distance matrices")
def classify(dataset_path, reports_path, labels_path, stoplists, embeddings, restrict_vocab, tasks, k_grid,
             per_fold, out_dir, cache, **options):
    """Cross-validated k-NN classification of reports (WMD or bag-of-words)."""
    cfg = RunConfig.from_options(k_grid=parse_k_grid(k_grid), pooled=not per_fold, **options)
    exp_cfg = cfg.experiment_config(list(tasks) or TASK_NAMES)
    named = _named_embeddings(embeddings)
    if cfg.metric == WMD and not named:
        raise click.UsageError("--embeddings is required for the wmd metric")

    restrict = _vocabulary(restrict_vocab) if restrict_vocab else None
    matrices = [(name, _load_embeddings(path, restrict_to=restrict)) for name, path in named]
    # processing drops words that no embedding set covers
    vocabulary = set().union(*(m.words for _, m in matrices)) if matrices and cfg.metric == WMD else None
    docs = _documents(dataset_path, reports_path, labels_path, stoplists, vocabulary)
    artifacts = PersistenceManager(out_dir)

    runs = [(name, m) for name, m in matrices] if cfg.metric == WMD else [(BOW, None)]
    results, timings, changes = [], [], []
    for name, matrix in runs:
        runner = ExperimentRunner(docs, matrix, exp_cfg, store=artifacts if cache else None, method=name)
        outcome = ExperimentOutcome(full=runner.run(compressed=False))
        if cfg.compression:
            outcome.compressed = runner.run(compressed=True)
        for result in (outcome.full, outcome.compressed):
            if result is None:
                continue
            results.extend(result.result_rows())
            timings.extend(result.timing_rows())
        changes.extend(outcome.relative_change)

    artifacts.save_results(results)
    artifacts.save_timing(timings)
    if cfg.compression:
        artifacts.save_relative_change(changes)

    click.echo("method\tcompression\ttask\tk\tclass\tprecision\trecall\tf1\tsupport")
    for row in results:
        values = [row["method"], row["compression"], row["task"], row["k"], row["class"],
                  row.get("precision", ""), row.get("recall", ""), row["f1"], row["support"]]
        click.echo("\t".join(f"{v:.2f}" if isinstance(v, float) else str(v) for v in values))
    if changes:
        click.echo("method\ttask\tk\tf1_full\tf1_compressed\trelative_change_pct\tspeedup")
        for row in changes:
            click.echo("\t".join([row["method"], row["task"], str(row["k"]), f"{row['f1_full']:.2f}",
                                  f"{row['f1_compressed']:.2f}", f"{row['relative_change_pct']:.2f}",
                                  f"{row['speedup']:.2f}"]))


def run(argv: Optional[Sequence[str]] = None) -> int:
    return cli.main(args=list(argv) if argv is not None else None, prog_name="sitevec", standalone_mode=False)


if __name__ == "__main__":
    sys.exit(run())
