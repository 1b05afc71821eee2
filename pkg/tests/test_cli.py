import json
import sys
from pathlib import Path

import pytest

from livetl.cli import main
from livetl.ingest import read_timeline
from tests.conftest import write_corpus, write_jsonl

PEER = str(Path(__file__).parent / "peers.py")


def corpus(tmp_path, match_id="m1", n_tweets=6) -> Path:
    tweets = [(m, f"minute {m} report") for m in range(n_tweets)]
    reference = [(0, "kick off"), (2, "minute 2 report"), (4, "minute 4 report")]
    return write_corpus(tmp_path, match_id, tweets, reference, start=0, end=5)


def test_ingest_accepts_and_reports(tmp_path, capsys):
    manifest = corpus(tmp_path)
    code = main(["ingest", "--manifest", str(manifest), "--min-tweets", "0"])
    assert code == 0
    out = capsys.readouterr().out
    assert "m1: 6 tweets, ACCEPTED" in out


def test_ingest_rejects_low_volume(tmp_path, capsys):
    manifest = corpus(tmp_path)
    code = main(["ingest", "--manifest", str(manifest), "--min-tweets", "6"])
    assert code == 0
    assert "REJECTED (VOLUME)" in capsys.readouterr().out


def test_ingest_malformed_exits_2(tmp_path, capsys):
    manifest = corpus(tmp_path)
    (tmp_path / "m1.tweets.jsonl").write_text("{broken\n", encoding="utf-8")
    code = main(["ingest", "--manifest", str(manifest), "--min-tweets", "0"])
    assert code == 2


def test_ingest_summary_json(tmp_path):
    manifest = corpus(tmp_path)
    out = tmp_path / "summary.json"
    main(["ingest", "--manifest", str(manifest), "--min-tweets", "0", "--out", str(out)])
    summary = json.loads(out.read_text())
    assert summary["matches"][0]["match_id"] == "m1"
    assert summary["matches"][0]["accepted"] is True


def run_args(manifest, out_dir, *extra):
    return [
        "run", "--manifest", str(manifest), "--min-tweets", "0", "--out", str(out_dir), *extra,
    ]


def test_run_echo_writes_timeline_and_provenance(tmp_path):
    manifest = corpus(tmp_path)
    out_dir = tmp_path / "gen"
    assert main(run_args(manifest, out_dir)) == 0

    timeline = read_timeline(out_dir / "m1.jsonl")
    assert timeline.at(0).text == "minute 0 report"
    assert timeline.at(5).text == "minute 5 report"
    assert list(timeline.minutes()) == list(range(6))

    provenance = json.loads((out_dir / "provenance.json").read_text())
    assert provenance["tool"] == "livetl"
    assert provenance["config"]["variant"] == "base"
    assert provenance["config"]["matches"] == ["m1"]
    assert len(provenance["config_hash"]) == 64


def test_run_is_idempotent_and_deterministic(tmp_path):
    manifest = corpus(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(run_args(manifest, a)) == 0
    assert main(run_args(manifest, b)) == 0
    assert (a / "m1.jsonl").read_bytes() == (b / "m1.jsonl").read_bytes()
    assert (a / "provenance.json").read_bytes() == (b / "provenance.json").read_bytes()


def test_run_jobs_parallel_matches_serial(tmp_path):
    manifests = [str(corpus(tmp_path, match_id=f"m{k}")) for k in range(3)]
    serial, parallel = tmp_path / "serial", tmp_path / "parallel"
    assert main(["run", "--manifest", *manifests, "--min-tweets", "0", "--out", str(serial)]) == 0
    assert (
        main(["run", "--manifest", *manifests, "--min-tweets", "0", "--out", str(parallel), "--jobs", "3"])
        == 0
    )
    for k in range(3):
        assert (serial / f"m{k}.jsonl").read_bytes() == (parallel / f"m{k}.jsonl").read_bytes()
    assert (serial / "provenance.json").read_bytes() == (parallel / "provenance.json").read_bytes()


def test_run_oracle_with_reference_gate(tmp_path):
    manifest = corpus(tmp_path)
    out_dir = tmp_path / "gen"
    code = main(run_args(manifest, out_dir, "--variant", "clf", "--generator", "oracle"))
    assert code == 0
    timeline = read_timeline(out_dir / "m1.jsonl")
    assert [u.minute for u in timeline.present()] == [0, 2, 4]
    assert timeline.at(2).text == "minute 2 report"


def test_run_skips_low_volume_matches(tmp_path, capsys):
    manifest = corpus(tmp_path)
    out_dir = tmp_path / "gen"
    code = main(["run", "--manifest", str(manifest), "--min-tweets", "100", "--out", str(out_dir)])
    assert code == 0
    assert not (out_dir / "m1.jsonl").exists()
    assert "skipped (VOLUME)" in capsys.readouterr().err
    provenance = json.loads((out_dir / "provenance.json").read_text())
    assert provenance["config"]["matches"] == []


def test_run_bridge_loopback_matches_in_process_echo(tmp_path):
    manifest = corpus(tmp_path)
    echo_dir, bridge_dir = tmp_path / "echo", tmp_path / "bridge"
    assert main(run_args(manifest, echo_dir)) == 0
    cmd = f"{sys.executable} {PEER} --behavior echo"
    code = main(run_args(manifest, bridge_dir, "--generator", "bridge", "--bridge-cmd", cmd))
    assert code == 0
    assert (echo_dir / "m1.jsonl").read_bytes() == (bridge_dir / "m1.jsonl").read_bytes()


def test_run_bridge_failure_exits_3_and_cleans_up(tmp_path, capsys):
    manifests = [str(corpus(tmp_path, match_id=f"m{k}")) for k in range(2)]
    out_dir = tmp_path / "gen"
    cmd = f"{sys.executable} {PEER} --behavior sleep --sleep-s 2"
    code = main(
        [
            "run", "--manifest", *manifests, "--min-tweets", "0",
            "--generator", "bridge", "--bridge-cmd", cmd,
            "--timeout-ms", "200", "--out", str(out_dir),
        ]
    )
    assert code == 3
    assert "BridgeTimeout" in capsys.readouterr().err
    assert list(out_dir.glob("*.jsonl")) == []
    assert not (out_dir / "provenance.json").exists()


def test_run_gated_generator_returning_null_exits_3(tmp_path):
    manifest = corpus(tmp_path)
    cmd = f"{sys.executable} {PEER} --behavior null"
    code = main(
        run_args(
            tmp_path / "m1.manifest.json", tmp_path / "gen",
            "--variant", "clf", "--generator", "bridge", "--bridge-cmd", cmd,
            "--gate", "reference",
        )
    )
    assert code == 3
    assert manifest  # corpus written


def test_eval_identity_scores_one(tmp_path, capsys):
    manifest = corpus(tmp_path)
    gen_dir = tmp_path / "gen"
    gen_dir.mkdir()
    # generated == reference
    ref_lines = (tmp_path / "m1.ref.jsonl").read_text(encoding="utf-8")
    (gen_dir / "m1.jsonl").write_text(ref_lines, encoding="utf-8")
    report_path = tmp_path / "report.json"
    code = main(
        [
            "eval", "--manifest", str(manifest), "--gen-dir", str(gen_dir),
            "--tokenizer", "char", "--ngram", "1", "--out", str(report_path),
        ]
    )
    assert code == 0
    report = json.loads(report_path.read_text())
    assert report["micro"]["precision"] == 1.0
    assert report["micro"]["recall"] == 1.0
    assert report["matches"][0]["match_id"] == "m1"
    table = capsys.readouterr().out
    assert "micro" in table and "F1" in table


def test_eval_all_absent_gen_scores_zero(tmp_path):
    manifest = corpus(tmp_path)
    gen_dir = tmp_path / "gen"
    gen_dir.mkdir()
    write_jsonl(gen_dir / "m1.jsonl", [{"minute": m, "text": None} for m in range(6)])
    report_path = tmp_path / "report.json"
    assert main(["eval", "--manifest", str(manifest), "--gen-dir", str(gen_dir), "--out", str(report_path)]) == 0
    report = json.loads(report_path.read_text())
    assert report["micro"] == {
        "gen_total": 0, "ref_total": report["micro"]["ref_total"], "aligned": 0,
        "precision": 0.0, "recall": 0.0, "f1": 0.0,
    }
    assert report["micro"]["ref_total"] > 0


def test_eval_one_minute_shift_keeps_aligned(tmp_path):
    manifest = corpus(tmp_path)
    gen_dir = tmp_path / "gen"
    gen_dir.mkdir()
    reference = read_timeline(tmp_path / "m1.ref.jsonl")
    shifted = [{"minute": u.minute, "text": None} for u in reference.entries]
    for u in reference.present():
        shifted[u.minute + 1]["text"] = u.text
        shifted[u.minute]["text"] = None
    write_jsonl(gen_dir / "m1.jsonl", shifted)
    report_path = tmp_path / "report.json"
    assert main(["eval", "--manifest", str(manifest), "--gen-dir", str(gen_dir), "--out", str(report_path)]) == 0
    report = json.loads(report_path.read_text())
    assert report["micro"]["aligned"] == report["micro"]["ref_total"]
    assert report["micro"]["recall"] == 1.0


def test_eval_span_mismatch_exits_4(tmp_path):
    manifest = corpus(tmp_path)
    gen_dir = tmp_path / "gen"
    gen_dir.mkdir()
    write_jsonl(gen_dir / "m1.jsonl", [{"minute": m, "text": "x"} for m in range(3)])
    code = main(["eval", "--manifest", str(manifest), "--gen-dir", str(gen_dir), "--out", str(tmp_path / "r.json")])
    assert code == 4


def test_eval_missing_gen_file_exits_2(tmp_path):
    manifest = corpus(tmp_path)
    gen_dir = tmp_path / "gen"
    gen_dir.mkdir()
    code = main(["eval", "--manifest", str(manifest), "--gen-dir", str(gen_dir), "--out", str(tmp_path / "r.json")])
    assert code == 2


def test_events_identity_and_modes(tmp_path, capsys):
    root = tmp_path
    tweets = [(m, f"minute {m}") for m in range(6)]
    reference = [(1, "ゴール!! 中村"), (3, "10 MJunio OUT → 16 Fujita IN")]
    manifest = write_corpus(root, "ev1", tweets, reference, start=0, end=5)
    gen_dir = tmp_path / "gen"
    gen_dir.mkdir()
    (gen_dir / "ev1.jsonl").write_text(
        (tmp_path / "ev1.ref.jsonl").read_text(encoding="utf-8"), encoding="utf-8"
    )
    report_path = tmp_path / "events.json"
    code = main(
        [
            "events", "--manifest", str(manifest), "--gen-dir", str(gen_dir),
            "--mode", "strict", "--out", str(report_path),
        ]
    )
    assert code == 0
    report = json.loads(report_path.read_text())
    corpus_scores = report["corpus"]
    assert corpus_scores["lenient"]["goal"]["f1"] == 1.0
    assert corpus_scores["strict"]["substitution"]["f1"] == 1.0
    assert report["matches"][0]["match_id"] == "ev1"
    out = capsys.readouterr().out
    assert "(strict)" in out


def test_events_custom_patterns_and_window(tmp_path):
    tweets = [(0, "quiet")]
    reference = [(1, "boom 10"), (4, None)]
    manifest = write_corpus(tmp_path, "ev2", tweets, reference, start=0, end=4)
    gen_dir = tmp_path / "gen"
    gen_dir.mkdir()
    write_jsonl(
        gen_dir / "ev2.jsonl",
        [{"minute": m, "text": "boom 10" if m == 4 else None} for m in range(5)],
    )
    patterns = tmp_path / "patterns.json"
    patterns.write_text(json.dumps({"goal": [r"boom (?P<scorer>\d+)"], "card": [], "substitution": []}))
    report_path = tmp_path / "events.json"
    args = [
        "events", "--manifest", str(manifest), "--gen-dir", str(gen_dir),
        "--patterns", str(patterns), "--out", str(report_path),
    ]
    assert main(args + ["--window", "3"]) == 0
    assert json.loads(report_path.read_text())["corpus"]["lenient"]["goal"]["matched"] == 1
    assert main(args + ["--window", "2"]) == 0
    assert json.loads(report_path.read_text())["corpus"]["lenient"]["goal"]["matched"] == 0


def test_missing_manifest_file_exits_2(tmp_path):
    assert main(["ingest", "--manifest", str(tmp_path / "nope.json")]) == 2
