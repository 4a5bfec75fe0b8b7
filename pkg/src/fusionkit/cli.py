"""Operator CLI: ingest corpora, build indexes, query, evaluate, and serve.

Exit codes: 0 success, 1 unexpected failure, 2 usage or input-file errors,
3 adapter/provider errors (including --strict ingest failures), 4 dim
mismatch against an existing store.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .bench import bench_fused, bench_text
from .config import load_config
from .engine import Engine, build_vector_stores
from .errors import (
    ConfigError,
    DimMismatch,
    DuplicateVideoId,
    FusionkitError,
    MalformedLine,
    ProviderUnavailable,
)
from .embedding import HttpEmbeddingProvider, MockEmbeddingProvider
from .ingest import make_adapter, ingest_corpus, parse_manifest
from .rerank import rerank as rerank_hits


class CliError(click.ClickException):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


@click.group()
def main():
    """fusionkit: multimodal video retrieval engine."""


@main.command()
@click.option("--manifest", required=True, type=click.Path(), help="TSV manifest of videos.")
@click.option("--adapter", "adapter_spec", required=True, help="Extractor command template or http(s) URL.")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Corpus output directory.")
@click.option("--timeout-ms", default=60_000, show_default=True, help="Per-video adapter timeout.")
@click.option("--workers", default=4, show_default=True, help="Concurrent video extractions.")
@click.option("--strict", is_flag=True, help="Exit nonzero when any video fails.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
def ingest(manifest, adapter_spec, out_dir, timeout_ms, workers, strict, as_json):
    """Catalog videos and extract keyframes through the adapter."""
    try:
        manifest_text = Path(manifest).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read manifest: {exc}", 2)
    try:
        records = parse_manifest(manifest_text)
    except (MalformedLine, DuplicateVideoId) as exc:
        raise CliError(f"manifest error: {exc}", 2)

    adapter = make_adapter(adapter_spec, timeout_ms)
    catalog, report = ingest_corpus(records, adapter, workers=workers)
    catalog.save(out_dir)

    if as_json:
        click.echo(
            json.dumps(
                {
                    "videos": report.videos,
                    "keyframes": report.keyframes,
                    "failures": len(report.failures),
                    "failed": [{"video_id": v, "error": e} for v, e in report.failures],
                    "skipped": report.skipped,
                }
            )
        )
    else:
        for video_id, error in report.failures:
            click.echo(f"warning: {video_id}: {error}", err=True)
        for video_id in report.skipped:
            click.echo(f"warning: {video_id}: duration 0, extraction skipped", err=True)
        click.echo(report.summary())
    if strict and report.failures:
        sys.exit(3)


@main.group()
def index():
    """Index building commands."""


def _parse_spaces(spec: str) -> list[tuple[str, int]]:
    spaces = []
    for part in spec.split(","):
        try:
            model_id, dim_s = part.rsplit(":", 1)
            spaces.append((model_id.strip(), int(dim_s)))
        except ValueError:
            raise click.UsageError(f"bad space spec {part!r}, expected model_id:dim") from None
    if len(spaces) != 2:
        raise click.UsageError(f"exactly 2 spaces required, got {len(spaces)}")
    return spaces


@index.command("build")
@click.option("--corpus", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--provider", "provider_spec", default="mock", show_default=True, help="'mock' or embed endpoint URL.")
@click.option("--spaces", "spaces_spec", default="space-A:64,space-B:64", show_default=True)
@click.option("--batch-size", default=64, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def index_build(corpus, provider_spec, spaces_spec, batch_size, as_json):
    """Embed all keyframes into the two model spaces and write the stores."""
    from .ingest import Catalog

    spaces = _parse_spaces(spaces_spec)
    if provider_spec == "mock":
        provider = MockEmbeddingProvider(dict(spaces))
    elif provider_spec.startswith(("http://", "https://")):
        provider = HttpEmbeddingProvider(provider_spec)
    else:
        raise CliError(f"unknown provider {provider_spec!r} (use 'mock' or an http(s) URL)", 3)

    catalog = Catalog.load(corpus)
    try:
        counts = build_vector_stores(catalog, provider, spaces, Path(corpus) / "stores", batch_size)
    except DimMismatch as exc:
        raise CliError(f"dim mismatch vs existing store: {exc}", 4)
    except ProviderUnavailable as exc:
        raise CliError(str(exc), 3)
    if as_json:
        click.echo(json.dumps({"spaces": [{"model_id": m, "dim": d, "count": counts[m]} for m, d in spaces]}))
    else:
        for model_id, dim in spaces:
            click.echo(f"space {model_id} dim={dim} vectors={counts[model_id]}")


@main.command()
@click.argument("text")
@click.option("--corpus", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--k", default=10, show_default=True, type=click.IntRange(min=1))
@click.option("--alpha", default=0.7, show_default=True, type=click.FloatRange(0.0, 1.0))
@click.option("--rerank", "do_rerank", is_flag=True, help="Rerank with clarification questions.")
@click.option("--budget", default=20, show_default=True, type=click.IntRange(min=1))
@click.option("--yes", is_flag=True, help="Skip question confirmation.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--json", "as_json", is_flag=True)
def query(text, corpus, k, alpha, do_rerank, budget, yes, config_path, as_json):
    """Run a fused text query against a built corpus."""
    try:
        config = load_config(config_path)
    except ConfigError as exc:
        raise CliError(f"config error: {exc}", 2)
    engine = Engine(config)
    try:
        engine.load_corpus(corpus)
        hits = engine.search(text, k=k, alpha=alpha)
    except ProviderUnavailable as exc:
        raise CliError(str(exc), 3)
    except FusionkitError as exc:
        raise CliError(str(exc), 1)

    questions = None
    result = None
    if do_rerank:
        questions = engine.rerank_questions(text)
        if not as_json:
            for q in questions:
                click.echo(f"  [{q.index}] {q.text}")
        if not yes and not as_json:
            click.confirm("Run VQA with these questions?", abort=True)
        result = rerank_hits(
            hits,
            questions,
            engine.vqa_provider,
            budget=budget,
            image_ref_for=lambda kf_id: engine.catalog.keyframe(kf_id).image_uri,
            concurrency=config.vqa_concurrency,
        )

    if as_json:
        payload = {"alpha": alpha, "k": k, "hits": [engine.hit_payload(h) for h in hits]}
        if result is not None:
            payload["questions"] = [q.text for q in questions]
            payload["reranked"] = [
                {**engine.hit_payload(r.hit), "yes_count": r.yes_count, "unknown_count": r.unknown_count}
                for r in result.hits
            ]
            payload["degraded"] = result.degraded
        click.echo(json.dumps(payload))
        return

    click.echo(f"alpha={alpha:g} k={k} query={text!r}")
    rows = result.hits if result is not None else None
    if rows is None:
        for rank, hit in enumerate(hits, start=1):
            kf = engine.catalog.keyframe(hit.keyframe_id)
            click.echo(
                f"{rank:>3}  {hit.keyframe_id:<24} {kf.video_id:<12} {kf.timestamp_ms:>8}ms"
                f"  a={hit.score_a:+.4f} b={hit.score_b:+.4f} fused={hit.fused:+.4f}"
            )
    else:
        if result.degraded:
            click.echo("warning: VQA provider failed, original order kept", err=True)
        for rank, rh in enumerate(rows, start=1):
            kf = engine.catalog.keyframe(rh.hit.keyframe_id)
            click.echo(
                f"{rank:>3}  {rh.hit.keyframe_id:<24} {kf.video_id:<12} yes={rh.yes_count}"
                f" unknown={rh.unknown_count} fused={rh.hit.fused:+.4f}"
            )


def _read_tsv(path: str, expected_fields: int, label: str) -> list[list[str]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {label}: {exc}", 2)
    rows = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != expected_fields:
            raise CliError(f"{label} line {line_no}: expected {expected_fields} fields", 2)
        rows.append(fields)
    return rows


@main.command("eval")
@click.option("--qrels", required=True, type=click.Path())
@click.option("--runs", required=True, type=click.Path())
@click.option("--metrics", default="recall@10,mrr", show_default=True)
@click.option("--json", "as_json", is_flag=True)
def eval_cmd(qrels, runs, metrics, as_json):
    """Score a run file against relevance judgments (recall@k, MRR)."""
    qrel_rows = _read_tsv(qrels, 3, "qrels")
    if not qrel_rows:
        raise CliError("qrels file is empty", 2)
    relevant: dict[str, set[str]] = {}
    for query_id, keyframe_id, rel in qrel_rows:
        relevant.setdefault(query_id, set())
        if rel == "1":
            relevant[query_id].add(keyframe_id)
        elif rel != "0":
            raise CliError(f"qrels: relevance must be 0 or 1, got {rel!r}", 2)

    run_rows = _read_tsv(runs, 4, "runs")
    rankings: dict[str, list[tuple[int, str]]] = {}
    for query_id, keyframe_id, rank_s, _score in run_rows:
        try:
            rank = int(rank_s)
        except ValueError:
            raise CliError(f"runs: bad rank {rank_s!r}", 2) from None
        rankings.setdefault(query_id, []).append((rank, keyframe_id))
    for ranking in rankings.values():
        ranking.sort()

    requested = [m.strip() for m in metrics.split(",") if m.strip()]
    values: dict[str, float] = {}
    for metric in requested:
        if metric == "mrr":
            total = 0.0
            for query_id, rel_set in relevant.items():
                for rank, keyframe_id in rankings.get(query_id, []):
                    if keyframe_id in rel_set:
                        total += 1.0 / rank
                        break
            values["mrr"] = total / len(relevant)
        elif metric.startswith("recall@"):
            try:
                cutoff = int(metric.split("@", 1)[1])
            except ValueError:
                raise click.UsageError(f"bad metric {metric!r}") from None
            found = 0
            for query_id, rel_set in relevant.items():
                top = [kf for rank, kf in rankings.get(query_id, []) if rank <= cutoff]
                if any(kf in rel_set for kf in top):
                    found += 1
            values[metric] = found / len(relevant)
        else:
            raise click.UsageError(f"unknown metric {metric!r}")

    if as_json:
        click.echo(json.dumps({m: round(v, 4) for m, v in values.items()}))
    else:
        for metric in requested:
            click.echo(f"{metric} {values[metric]:.4f}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--corpus", type=click.Path(exists=True, file_okay=False), default=None)
@click.option("--host", default=None)
@click.option("--port", default=None, type=int)
def serve(config_path, corpus, host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    try:
        config = load_config(config_path)
    except ConfigError as exc:
        raise CliError(f"config error: {exc}", 2)
    if corpus:
        config.corpus = corpus
    engine = Engine(config)
    if config.corpus:
        engine.load_corpus(config.corpus)
    app = create_app(engine)
    uvicorn.run(app, host=host or config.host, port=port or config.port)


@main.command()
@click.option("--items", default=100_000, show_default=True)
@click.option("--dim", default=512, show_default=True)
@click.option("--segments", default=100_000, show_default=True)
@click.option("--k", default=10, show_default=True)
@click.option("--trials", default=5, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def bench(items, dim, segments, k, trials, as_json):
    """Measure fused-search and text-search latency on synthetic corpora."""
    fused = bench_fused(items=items, dim=dim, k=k, trials=trials)
    text = bench_text(segments=segments, k=k, trials=trials)
    if as_json:
        click.echo(json.dumps({"fused": fused, "text": text}))
    else:
        click.echo(
            f"fused  items={fused['items']} dim={fused['dim']} k={fused['k']}"
            f" best={fused['best_ms']}ms median={fused['median_ms']}ms"
        )
        click.echo(
            f"text   segments={text['segments']} k={text['k']}"
            f" best={text['best_ms']}ms median={text['median_ms']}ms"
        )


if __name__ == "__main__":
    main()
