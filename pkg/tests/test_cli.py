"""CLI surface: every subcommand plus pipeline resume."""

from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from typeflow.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def fx(fixtures_dir, name: str) -> str:
    return str(fixtures_dir / name)


class TestSubcommands:
    def test_version_lists_schemas(self, runner):
        result = runner.invoke(main, ["--version"])
        assert result.exit_code == 0
        assert "typeflow 0.1.0" in result.output
        assert "schema wire: 1" in result.output

    def test_parse_clean_file_exits_zero(self, runner, fixtures_dir):
        result = runner.invoke(main, ["parse", fx(fixtures_dir, "dynamodb.js")])
        assert result.exit_code == 0

    def test_parse_dump_ast_stable_fields(self, runner, fixtures_dir):
        result = runner.invoke(
            main, ["parse", fx(fixtures_dir, "dynamodb.js"), "--dump-ast"]
        )
        obj = json.loads(result.stdout)
        assert obj["file"] == "dynamodb.js"
        node = obj["ast"]
        assert set(node) >= {"kind", "name", "span", "children", "annotation"}

    def test_parse_diagnostics_exit_two(self, runner, tmp_path):
        bad = tmp_path / "bad.js"
        bad.write_text("let ok = 1; class C {}")
        result = runner.invoke(main, ["parse", str(bad)])
        assert result.exit_code == 2

    def test_graph_out(self, runner, fixtures_dir, tmp_path):
        out = tmp_path / "g.json"
        result = runner.invoke(
            main, ["graph", fx(fixtures_dir, "dynamodb.js"), "--out", str(out)]
        )
        assert result.exit_code == 0
        obj = json.loads(out.read_text())
        assert {n["kind"] for n in obj["nodes"]} >= {"File", "Method", "Local"}

    def test_propagate_dump_typemap(self, runner, tmp_path):
        src = tmp_path / "p.js"
        src.write_text('let x = 1;\nx = "s";\nx.m();\n')
        result = runner.invoke(
            main, ["propagate", str(src), "--dump-typemap", "--iterations", "2"]
        )
        obj = json.loads(result.stdout)
        assert obj["typeMap"]["p.js::program:x"] == ["__ecma.Integer", "__ecma.String"]

    def test_slice_infer_validate_chain(self, runner, fixtures_dir, tmp_path):
        slices_path = tmp_path / "slices.json"
        result = runner.invoke(
            main,
            ["slice", fx(fixtures_dir, "dynamodb.js"), "--out", str(slices_path)],
        )
        assert result.exit_code == 0

        preds_path = tmp_path / "preds.json"
        result = runner.invoke(
            main,
            [
                "infer",
                "--backend", "heuristic",
                "--slices", str(slices_path),
                "--lexicon", fx(fixtures_dir, "lexicon.json"),
                "--decls", fx(fixtures_dir, "web_framework.d.ts"),
                "--out", str(preds_path),
            ],
        )
        assert result.exit_code == 0, result.output
        preds = json.loads(preds_path.read_text())
        assert {(p["symbol"], p["type"]) for p in preds} == {
            ("req", "NextApiRequest"),
            ("res", "NextApiResponse"),
        }
        assert all(p["validated"] for p in preds)

        result = runner.invoke(
            main,
            [
                "validate",
                "--decls", fx(fixtures_dir, "web_framework.d.ts"),
                "--slices", str(slices_path),
                "--suggestions", str(preds_path),
            ],
        )
        assert result.exit_code == 0
        verdicts = json.loads(result.stdout)
        assert all(v["verdict"]["status"] == "Consistent" for v in verdicts)

    def test_infer_remote_down_exits_one(self, runner, fixtures_dir, tmp_path):
        slices_path = tmp_path / "slices.json"
        runner.invoke(
            main, ["slice", fx(fixtures_dir, "dynamodb.js"), "--out", str(slices_path)]
        )
        result = runner.invoke(
            main,
            ["infer", "--backend", "http://127.0.0.1:1", "--slices", str(slices_path)],
            catch_exceptions=True,
        )
        assert result.exit_code != 0

    def test_eval_report(self, runner, fixtures_dir, tmp_path):
        report_path = tmp_path / "report.json"
        result = runner.invoke(
            main,
            [
                "eval",
                "--corpus", fx(fixtures_dir, "mini_corpus"),
                "--lexicon", fx(fixtures_dir, "corpus_lexicon.json"),
                "--top100", fx(fixtures_dir, "top100_mini.txt"),
                "--mode", "greedy",
                "--report", str(report_path),
            ],
        )
        assert result.exit_code == 0, result.output
        report = json.loads(report_path.read_text())
        by_cat = report["counts"]["byCategory"]
        assert sum(c["evaluated"] for c in by_cat.values()) == report["counts"]["evaluated"]

    def test_query_from_serialized_graph(self, runner, fixtures_dir, tmp_path):
        out_dir = tmp_path / "out"
        result = runner.invoke(
            main,
            [
                "pipeline", fx(fixtures_dir, "dynamodb.js"),
                "--lexicon", fx(fixtures_dir, "lexicon.json"),
                "--out-dir", str(out_dir),
            ],
        )
        assert result.exit_code == 0, result.output
        result = runner.invoke(
            main,
            [
                "query",
                "--graph", str(out_dir / "dynamodb.typed_graph.json"),
                "--source-types", "__ecma.Request,__express.Request,NextApiRequest",
                "--source-member", "body",
                "--sink", "*.query",
                "--sink-arg", "1",
            ],
        )
        assert result.exit_code == 0, result.output
        flows = json.loads(result.stdout)
        assert len(flows) == 1
        assert any(step["name"] == "params" for step in flows[0]["steps"])


class TestPipeline:
    def test_full_pipeline_artifacts(self, runner, fixtures_dir, tmp_path):
        out_dir = tmp_path / "out"
        result = runner.invoke(
            main,
            [
                "-v",
                "pipeline", fx(fixtures_dir, "dynamodb.js"),
                "--lexicon", fx(fixtures_dir, "lexicon.json"),
                "--decls", fx(fixtures_dir, "web_framework.d.ts"),
                "--source-types", "NextApiRequest",
                "--source-member", "body",
                "--sink", "*.query",
                "--sink-arg", "1",
                "--out-dir", str(out_dir),
            ],
        )
        assert result.exit_code == 0, result.output
        for artifact in (
            "dynamodb.graph.json",
            "dynamodb.slices.json",
            "preds.json",
            "dynamodb.typed_graph.json",
            "coverage.json",
            "flows.json",
        ):
            assert (out_dir / artifact).exists(), artifact
        coverage = json.loads((out_dir / "coverage.json").read_text())
        assert coverage["meanDelta"] > 0
        flows = json.loads((out_dir / "flows.json").read_text())
        assert len(flows) == 1

    def test_stage_order_in_logs(self, runner, fixtures_dir, tmp_path):
        result = runner.invoke(
            main,
            [
                "-v",
                "pipeline", fx(fixtures_dir, "dynamodb.js"),
                "--lexicon", fx(fixtures_dir, "lexicon.json"),
                "--out-dir", str(tmp_path / "out"),
            ],
        )
        log = result.stderr
        order = [
            log.index("stage parse"),
            log.index("stage graph"),
            log.index("stage propagate"),
            log.index("stage slice"),
            log.index("stage infer"),
            log.index("stage repropagate"),
            log.index("stage report"),
        ]
        assert order == sorted(order)

    def test_resume_from_infer(self, runner, fixtures_dir, tmp_path):
        out_dir = tmp_path / "out"
        first = runner.invoke(
            main,
            [
                "pipeline", fx(fixtures_dir, "dynamodb.js"),
                "--lexicon", fx(fixtures_dir, "lexicon.json"),
                "--out-dir", str(out_dir),
            ],
        )
        assert first.exit_code == 0
        preds_before = (out_dir / "preds.json").read_text()
        resumed = runner.invoke(
            main,
            [
                "pipeline", fx(fixtures_dir, "dynamodb.js"),
                "--lexicon", fx(fixtures_dir, "lexicon.json"),
                "--out-dir", str(out_dir),
                "--from-stage", "infer",
            ],
        )
        assert resumed.exit_code == 0, resumed.output
        assert (out_dir / "preds.json").read_text() == preds_before

    def test_resume_from_query(self, runner, fixtures_dir, tmp_path):
        out_dir = tmp_path / "out"
        runner.invoke(
            main,
            [
                "pipeline", fx(fixtures_dir, "dynamodb.js"),
                "--lexicon", fx(fixtures_dir, "lexicon.json"),
                "--out-dir", str(out_dir),
            ],
        )
        resumed = runner.invoke(
            main,
            [
                "pipeline", fx(fixtures_dir, "dynamodb.js"),
                "--out-dir", str(out_dir),
                "--from-stage", "query",
                "--source-types", "NextApiRequest",
                "--source-member", "body",
                "--sink", "*.query",
            ],
        )
        assert resumed.exit_code == 0, resumed.output
        flows = json.loads((out_dir / "flows.json").read_text())
        assert len(flows) == 1

    def test_token_budget_env_override(self, runner, fixtures_dir, tmp_path, monkeypatch):
        monkeypatch.setenv("TYPEFLOW_TOKEN_BUDGET", "15")
        result = runner.invoke(
            main,
            [
                "pipeline", fx(fixtures_dir, "dynamodb.js"),
                "--out-dir", str(tmp_path / "out"),
            ],
        )
        assert result.exit_code != 0  # budget floor is 16
