import json

import pytest
from click.testing import CliRunner

from fairrank.cli import main

from test_ingest import GOOD_REVIEWERS, GOOD_REVIEWS, reviewers_csv


@pytest.fixture
def runner():
    return CliRunner()


def write_inputs(tmp_path, reviewers=GOOD_REVIEWERS, reviews=GOOD_REVIEWS):
    reviewers_path = tmp_path / "reviewers.csv"
    reviews_path = tmp_path / "reviews.csv"
    reviewers_path.write_text(reviewers)
    reviews_path.write_text(reviews)
    return reviewers_path, reviews_path


def run_ingest(runner, tmp_path, **kwargs):
    reviewers_path, reviews_path = write_inputs(tmp_path, **kwargs)
    out_path = tmp_path / "dataset.json"
    result = runner.invoke(main, [
        "ingest", "--reviews", str(reviews_path), "--reviewers", str(reviewers_path),
        "--name", "demo", "--out", str(out_path),
    ])
    return result, out_path


class TestIngestCommand:
    def test_happy_path_writes_dataset_with_rate(self, runner, tmp_path):
        result, out_path = run_ingest(runner, tmp_path)
        assert result.exit_code == 0, result.output
        doc = json.loads(out_path.read_text())
        assert doc["unknown_name_rate"] == 0.0
        assert doc["name"] == "demo"

    def test_rejected_project_exits_two_with_reason(self, runner, tmp_path):
        reviewers = reviewers_csv([
            "f1,Ada Alpha,female,manual",
            "f2,Bea Beta,female,manual",
            "m1,Carl Gamma,male,manual",
            "m2,Dan Delta,male,manual",
            "u1,xX42Xx,,",
        ])
        result, out_path = run_ingest(runner, tmp_path, reviewers=reviewers)
        assert result.exit_code == 2
        assert "unknown rate 0.20 > 0.10" in result.output
        assert not out_path.exists()

    def test_protected_minimum_exits_two(self, runner, tmp_path):
        reviewers = reviewers_csv([
            "f1,Ada Alpha,female,manual",
            "m1,Carl Gamma,male,manual",
            "m2,Dan Delta,male,manual",
        ])
        reviews = (
            "review_id,timestamp,file_paths,subject,actual_reviewers\n"
            "r1,1,a.py,s,f1\nr2,2,b.py,s,m1\n"
        )
        result, _ = run_ingest(runner, tmp_path, reviewers=reviewers, reviews=reviews)
        assert result.exit_code == 2
        assert "fewer than 2" in result.output

    def test_missing_input_file_exits_two(self, runner, tmp_path):
        result = runner.invoke(main, [
            "ingest", "--reviews", str(tmp_path / "nope.csv"),
            "--reviewers", str(tmp_path / "also-nope.csv"),
            "--out", str(tmp_path / "out.json"),
        ])
        assert result.exit_code == 2
        assert "cannot read" in result.output


class TestAuditCommand:
    def _dataset(self, runner, tmp_path):
        _, out_path = run_ingest(runner, tmp_path)
        return out_path

    def test_audit_writes_report(self, runner, tmp_path):
        dataset = self._dataset(runner, tmp_path)
        report_path = tmp_path / "report.json"
        result = runner.invoke(main, [
            "audit", "--dataset", str(dataset), "--k", "2,3",
            "--train-fraction", "0.67", "--out", str(report_path),
        ])
        assert result.exit_code == 0, result.output
        report = json.loads(report_path.read_text())
        assert report["projects"]["demo"]["strategies"]["igrr"]

    def test_double_run_is_byte_identical(self, runner, tmp_path):
        dataset = self._dataset(runner, tmp_path)
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for out in (a, b):
            result = runner.invoke(main, [
                "audit", "--dataset", str(dataset), "--k", "2,3", "--out", str(out),
            ])
            assert result.exit_code == 0, result.output
        assert a.read_bytes() == b.read_bytes()

    def test_markdown_format(self, runner, tmp_path):
        dataset = self._dataset(runner, tmp_path)
        report_path = tmp_path / "report.md"
        result = runner.invoke(main, [
            "audit", "--dataset", str(dataset), "--k", "2",
            "--format", "markdown", "--out", str(report_path),
        ])
        assert result.exit_code == 0
        assert report_path.read_text().startswith("# Fairness audit report")

    def test_config_file_applies_but_flags_win(self, runner, tmp_path):
        dataset = self._dataset(runner, tmp_path)
        config = tmp_path / "audit.cfg"
        config.write_text('k = "2"\nmitigation = none,igrr\nformat = markdown\n')
        report_path = tmp_path / "report.out"
        result = runner.invoke(main, [
            "audit", "--dataset", str(dataset), "--config", str(config),
            "--format", "json", "--out", str(report_path),
        ])
        assert result.exit_code == 0, result.output
        report = json.loads(report_path.read_text())  # explicit --format json won
        assert report["config"]["k_set"] == [2]  # file-provided K applied
        assert report["config"]["strategies"] == ["none", "igrr"]

    def test_unknown_config_key_rejected(self, runner, tmp_path):
        dataset = self._dataset(runner, tmp_path)
        config = tmp_path / "audit.cfg"
        config.write_text("sneaky = true\n")
        result = runner.invoke(main, [
            "audit", "--dataset", str(dataset), "--config", str(config),
            "--out", str(tmp_path / "r.json"),
        ])
        assert result.exit_code == 2
        assert "unknown config keys" in result.output

    def test_invalid_k_exits_two(self, runner, tmp_path):
        dataset = self._dataset(runner, tmp_path)
        result = runner.invoke(main, [
            "audit", "--dataset", str(dataset), "--k", "6,4",
            "--out", str(tmp_path / "r.json"),
        ])
        assert result.exit_code == 2

    def test_external_scores_flow(self, runner, tmp_path):
        dataset_path = self._dataset(runner, tmp_path)
        doc = json.loads(dataset_path.read_text())
        test_ids = [rec["review_id"] for rec in doc["records"]][-1:]
        rows = ["record_id,reviewer_id,score"]
        for rid in test_ids:
            for i, reviewer in enumerate(doc["roster"]):
                rows.append(f"{rid},{reviewer['id']},{10 - i}")
        scores = tmp_path / "scores.csv"
        scores.write_text("\n".join(rows) + "\n")
        report_path = tmp_path / "ext.json"
        result = runner.invoke(main, [
            "audit", "--dataset", str(dataset_path), "--recommender", "external",
            "--scores", str(scores), "--k", "2", "--out", str(report_path),
        ])
        assert result.exit_code == 0, result.output
        assert json.loads(report_path.read_text())["config"]["recommender"] == "external"


class TestCompareCommand:
    def _report(self, runner, tmp_path, name):
        _, dataset = run_ingest(runner, tmp_path)
        report_path = tmp_path / name
        result = runner.invoke(main, [
            "audit", "--dataset", str(dataset), "--k", "2,3", "--out", str(report_path),
        ])
        assert result.exit_code == 0
        return report_path

    def test_self_comparison_is_degenerate(self, runner, tmp_path):
        report = self._report(runner, tmp_path, "r.json")
        result = runner.invoke(main, [
            "compare", "--baseline", str(report), "--treatment", str(report),
        ])
        assert result.exit_code == 2
        assert "degenerate" in result.output

    def test_shifted_report_compares_significant(self, runner, tmp_path):
        baseline = self._report(runner, tmp_path, "base.json")
        doc = json.loads(baseline.read_text())
        for strategy_doc in doc["projects"]["demo"]["strategies"].values():
            strategy_doc["ndkl"] += 0.02
            for cell in strategy_doc["by_k"].values():
                for measure in ("top_k_accuracy", "mrr_at_k", "spd_at_k", "skew_at_k"):
                    cell[measure] += 0.04
        treatment = baseline.parent / "treat.json"
        treatment.write_text(json.dumps(doc))
        result = runner.invoke(main, [
            "compare", "--baseline", str(baseline), "--treatment", str(treatment),
            "--alternative", "greater",
        ])
        assert result.exit_code == 0, result.output
        assert "verdict: significant" in result.output
        assert "p_value" in result.output

    def test_invalid_json_exits_two(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{nope")
        result = runner.invoke(main, [
            "compare", "--baseline", str(bad), "--treatment", str(bad),
        ])
        assert result.exit_code == 2
        assert "not valid JSON" in result.output


def test_unreachable_server_is_an_internal_error(runner, tmp_path):
    report = tmp_path / "r.json"
    report.write_text("{}")
    result = runner.invoke(main, [
        "--server", "http://127.0.0.1:9",  # discard port; nothing listens
        "compare", "--baseline", str(report), "--treatment", str(report),
    ])
    assert result.exit_code == 1
    assert "cannot reach service" in result.output


def test_console_script_help_runs():
    import subprocess
    import sys

    completed = subprocess.run(
        [sys.executable, "-m", "fairrank.cli", "--help"],
        capture_output=True, text=True, timeout=60,
    )
    assert completed.returncode == 0
    assert "ingest" in completed.stdout
    assert "audit" in completed.stdout
    assert "compare" in completed.stdout
