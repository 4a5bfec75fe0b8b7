import json

import pytest
from click.testing import CliRunner

from fusionkit.cli import main

EXTRACTOR = """\
import sys
video = sys.argv[1]
name = video.rsplit("/", 1)[-1].split(".")[0]
for i in range(3):
    frame = i * 10
    print(f"{frame}\\t{frame * 40}\\tkf://{name}/{frame}/word{name}{i} tag{i}")
"""

MANIFEST = "v01\t/data/v01.mp4\t60000\t25\nv02\t/data/v02.mp4\t60000\t25\nv03\t/data/v03.mp4\t60000\t25\n"


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def extractor(tmp_path):
    script = tmp_path / "extract.py"
    script.write_text(EXTRACTOR)
    return f"python3 {script} {{source_uri}}"


@pytest.fixture()
def corpus(tmp_path, runner, extractor):
    manifest = tmp_path / "manifest.tsv"
    manifest.write_text(MANIFEST)
    out = tmp_path / "corpus"
    result = runner.invoke(
        main, ["ingest", "--manifest", str(manifest), "--adapter", extractor, "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    result = runner.invoke(main, ["index", "build", "--corpus", str(out), "--spaces", "space-A:48,space-B:48"])
    assert result.exit_code == 0, result.output
    return out


class TestIngestCommand:
    def test_summary_line(self, tmp_path, runner, extractor):
        manifest = tmp_path / "m.tsv"
        manifest.write_text(MANIFEST)
        result = runner.invoke(
            main,
            ["ingest", "--manifest", str(manifest), "--adapter", extractor, "--out", str(tmp_path / "c")],
        )
        assert result.exit_code == 0
        assert "videos=3 keyframes=9 failures=0" in result.output

    def test_missing_manifest_exit_2(self, tmp_path, runner, extractor):
        result = runner.invoke(
            main,
            ["ingest", "--manifest", str(tmp_path / "absent.tsv"), "--adapter", extractor, "--out", str(tmp_path / "c")],
        )
        assert result.exit_code == 2

    def test_malformed_manifest_exit_2(self, tmp_path, runner, extractor):
        manifest = tmp_path / "m.tsv"
        manifest.write_text("v01\tonly-two-fields\n")
        result = runner.invoke(
            main,
            ["ingest", "--manifest", str(manifest), "--adapter", extractor, "--out", str(tmp_path / "c")],
        )
        assert result.exit_code == 2

    def test_strict_failure_nonzero(self, tmp_path, runner):
        bad = tmp_path / "bad.py"
        bad.write_text("import sys; sys.exit(1)\n")
        manifest = tmp_path / "m.tsv"
        manifest.write_text("v01\t/data/v01.mp4\t60000\t25\n")
        args = ["ingest", "--manifest", str(manifest), "--adapter", f"python3 {bad}", "--out", str(tmp_path / "c")]
        lenient = CliRunner().invoke(main, args)
        assert lenient.exit_code == 0
        assert "failures=1" in lenient.output
        strict = CliRunner().invoke(main, args + ["--strict"])
        assert strict.exit_code == 3

    def test_json_output(self, tmp_path, runner, extractor):
        manifest = tmp_path / "m.tsv"
        manifest.write_text(MANIFEST)
        result = runner.invoke(
            main,
            ["ingest", "--manifest", str(manifest), "--adapter", extractor, "--out", str(tmp_path / "c"), "--json"],
        )
        body = json.loads(result.output)
        assert body["videos"] == 3 and body["keyframes"] == 9


class TestIndexBuild:
    def test_rebuild_byte_identical(self, runner, corpus):
        stores = corpus / "stores"
        first = {p.name: p.read_bytes() for p in stores.iterdir()}
        result = runner.invoke(
            main, ["index", "build", "--corpus", str(corpus), "--spaces", "space-A:48,space-B:48"]
        )
        assert result.exit_code == 0
        second = {p.name: p.read_bytes() for p in stores.iterdir()}
        assert first == second

    def test_unknown_provider_exit_3(self, runner, corpus):
        result = runner.invoke(
            main, ["index", "build", "--corpus", str(corpus), "--provider", "banana"]
        )
        assert result.exit_code == 3

    def test_dim_mismatch_exit_4(self, runner, corpus):
        result = runner.invoke(
            main, ["index", "build", "--corpus", str(corpus), "--spaces", "space-A:32,space-B:32"]
        )
        assert result.exit_code == 4

    def test_requires_two_spaces(self, runner, corpus):
        result = runner.invoke(main, ["index", "build", "--corpus", str(corpus), "--spaces", "only:8"])
        assert result.exit_code == 2


class TestQueryCommand:
    def test_header_prints_default_alpha(self, runner, corpus):
        result = runner.invoke(main, ["query", "wordv011 tag1", "--corpus", str(corpus)])
        assert result.exit_code == 0, result.output
        assert result.output.splitlines()[0].startswith("alpha=0.7")

    def test_self_retrieval_first(self, runner, corpus):
        result = runner.invoke(main, ["query", "wordv022 tag2", "--corpus", str(corpus), "--k", "3"])
        first_hit = result.output.splitlines()[1]
        assert "v02:00000020" in first_hit

    def test_alpha_out_of_range_usage_error(self, runner, corpus):
        result = runner.invoke(main, ["query", "dog", "--corpus", str(corpus), "--alpha", "2"])
        assert result.exit_code == 2

    def test_json_output(self, runner, corpus):
        result = runner.invoke(main, ["query", "wordv011 tag1", "--corpus", str(corpus), "--json"])
        body = json.loads(result.output)
        assert body["alpha"] == 0.7
        assert body["hits"][0]["keyframe_id"] == "v01:00000010"

    def test_rerank_yes_deterministic(self, runner, corpus):
        args = ["query", "wordv011", "--corpus", str(corpus), "--k", "5", "--rerank", "--yes", "--json"]
        first = runner.invoke(main, args)
        second = runner.invoke(main, args)
        assert first.exit_code == 0, first.output
        assert first.output == second.output
        body = json.loads(first.output)
        assert len(body["questions"]) == 3
        reranked = body["reranked"]
        assert sorted(h["keyframe_id"] for h in reranked) == sorted(h["keyframe_id"] for h in body["hits"])
        keys = [(-h["yes_count"], -h["fused"], h["keyframe_id"]) for h in reranked]
        assert keys == sorted(keys)


class TestEvalCommand:
    def write_pair(self, tmp_path, ranks):
        """ranks: query_id -> rank of its single relevant item."""
        qrels = tmp_path / "qrels.tsv"
        runs = tmp_path / "runs.tsv"
        qrel_lines = []
        run_lines = []
        for q, rank in ranks.items():
            qrel_lines.append(f"{q}\trel-{q}\t1")
            for r in range(1, 11):
                kf = f"rel-{q}" if r == rank else f"other-{q}-{r}"
                run_lines.append(f"{q}\t{kf}\t{r}\t{1.0 / r:.4f}")
        qrels.write_text("\n".join(qrel_lines) + "\n")
        runs.write_text("\n".join(run_lines) + "\n")
        return qrels, runs

    def test_perfect_run(self, tmp_path, runner):
        qrels, runs = self.write_pair(tmp_path, {"q1": 1, "q2": 1})
        result = runner.invoke(main, ["eval", "--qrels", str(qrels), "--runs", str(runs)])
        assert result.exit_code == 0
        assert "recall@10 1.0000" in result.output
        assert "mrr 1.0000" in result.output

    def test_rank_two_mrr(self, tmp_path, runner):
        qrels, runs = self.write_pair(tmp_path, {"q1": 2, "q2": 2})
        result = runner.invoke(main, ["eval", "--qrels", str(qrels), "--runs", str(runs)])
        assert "mrr 0.5000" in result.output
        assert "recall@10 1.0000" in result.output

    def test_recall_cutoff(self, tmp_path, runner):
        qrels, runs = self.write_pair(tmp_path, {"q1": 7, "q2": 2})
        result = runner.invoke(
            main, ["eval", "--qrels", str(qrels), "--runs", str(runs), "--metrics", "recall@5"]
        )
        assert "recall@5 0.5000" in result.output

    def test_empty_qrels_exit_2(self, tmp_path, runner):
        qrels = tmp_path / "qrels.tsv"
        qrels.write_text("")
        runs = tmp_path / "runs.tsv"
        runs.write_text("q1\tkf\t1\t1.0\n")
        result = runner.invoke(main, ["eval", "--qrels", str(qrels), "--runs", str(runs)])
        assert result.exit_code == 2

    def test_unknown_metric_usage_error(self, tmp_path, runner):
        qrels, runs = self.write_pair(tmp_path, {"q1": 1})
        result = runner.invoke(
            main, ["eval", "--qrels", str(qrels), "--runs", str(runs), "--metrics", "ndcg"]
        )
        assert result.exit_code == 2

    def test_json_output(self, tmp_path, runner):
        qrels, runs = self.write_pair(tmp_path, {"q1": 2})
        result = runner.invoke(main, ["eval", "--qrels", str(qrels), "--runs", str(runs), "--json"])
        body = json.loads(result.output)
        assert body == {"recall@10": 1.0, "mrr": 0.5}
