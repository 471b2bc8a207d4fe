"""End-to-end tests for the ``weigh`` command line tool.

These tests also exercise the real handshake with the evaluator package:
the chunk dump is regenerated through ``chunkeval dump-chunks`` and the
emitted weight file is fed back into ``chunkeval evaluate``.
"""

import json
import shutil
import subprocess

import pytest

from dumpfix import GOLDEN_DUMP, write_golden_corpus
from chunkeval import cli as core_cli
from chunkeval.corpus_io import load_weights
from simweigh.cli import main
from simweigh.dump_io import parse_dump
from simweigh.encoder import LocalEncoder
from simweigh.scorer import weigh_corpus


@pytest.fixture()
def golden_dump_path(tmp_path):
    """Chunk dump for the golden corpus, produced by the evaluator CLI."""
    paths = write_golden_corpus(tmp_path)
    out_dir = tmp_path / "dump"
    rc = core_cli.main(
        [
            "dump-chunks",
            "--src", str(paths["src"]),
            "--hyp", str(paths["hyp"]),
            "--ref", str(paths["ref"]),
            "--out", str(out_dir),
        ]
    )
    assert rc == 0
    return out_dir / "chunks.dump"


def test_evaluator_dump_matches_frozen_fixture(golden_dump_path):
    # If this fails, the dump format drifted and dumpfix.GOLDEN_DUMP (and
    # likely the parser) needs a matching update.
    assert golden_dump_path.read_text(encoding="utf-8") == GOLDEN_DUMP


def test_weigh_happy_path(golden_dump_path, tmp_path, capsys):
    out = tmp_path / "sim.weights"
    rc = main(["--chunks", str(golden_dump_path), "--out", str(out)])
    assert rc == 0
    assert out.exists()
    assert f"{out}: 7 weights from 2 sentences" in capsys.readouterr().out

    text = out.read_text(encoding="utf-8")
    assert text.startswith("# simweigh model=local\n")
    assert text.endswith("\n")

    wf = load_weights(text, path=str(out))
    expected = weigh_corpus(parse_dump(GOLDEN_DUMP), LocalEncoder())
    assert set(wf.entries) == {
        (e.sentence_index, e.column_index) for e in expected
    }
    for e in expected:
        key = (e.sentence_index, e.column_index)
        # the file stores six decimals, so compare after the same rounding
        assert wf.entries[key] == float(f"{e.weight:.6f}")


def test_weigh_runs_are_deterministic(golden_dump_path, tmp_path):
    first = tmp_path / "a.weights"
    second = tmp_path / "b.weights"
    assert main(["--chunks", str(golden_dump_path), "--out", str(first)]) == 0
    assert main(["--chunks", str(golden_dump_path), "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_weigh_batch_size_flag_does_not_change_output(golden_dump_path, tmp_path):
    one = tmp_path / "one.weights"
    big = tmp_path / "big.weights"
    assert main(["--chunks", str(golden_dump_path), "--out", str(one), "--batch-size", "1"]) == 0
    assert main(["--chunks", str(golden_dump_path), "--out", str(big), "--batch-size", "256"]) == 0
    assert one.read_bytes() == big.read_bytes()


def test_missing_chunks_file_fails(tmp_path, capsys):
    rc = main(["--chunks", str(tmp_path / "nope.dump"), "--out", str(tmp_path / "w")])
    assert rc == 1
    assert "cannot read" in capsys.readouterr().err


def test_malformed_dump_fails_with_line_number(tmp_path, capsys):
    bad = tmp_path / "bad.dump"
    bad.write_text("# sentence 0 columns=1 chosen_ref=0\nnot a column line\n")
    rc = main(["--chunks", str(bad), "--out", str(tmp_path / "w")])
    assert rc == 1
    err = capsys.readouterr().err
    assert "line 2" in err and "bad.dump" in err


def test_zero_batch_size_is_a_usage_error(tmp_path, capsys):
    rc = main(["--chunks", "x", "--out", "y", "--batch-size", "0"])
    assert rc == 2
    assert "--batch-size" in capsys.readouterr().err


def test_unloadable_checkpoint_path_fails(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("HF_HUB_OFFLINE", "1")
    monkeypatch.setenv("TRANSFORMERS_OFFLINE", "1")
    rc = main(
        [
            "--chunks", "x",
            "--out", "y",
            "--model", str(tmp_path / "no_such_checkpoint"),
        ]
    )
    assert rc == 1
    assert "cannot load checkpoint" in capsys.readouterr().err


def test_weights_feed_back_into_evaluator(golden_dump_path, tmp_path, capsys):
    weights = tmp_path / "sim.weights"
    assert main(["--chunks", str(golden_dump_path), "--out", str(weights)]) == 0

    paths = write_golden_corpus(tmp_path)
    run_dir = tmp_path / "run"
    rc = core_cli.main(
        [
            "evaluate",
            "--src", str(paths["src"]),
            "--hyp", str(paths["hyp"]),
            "--ref", str(paths["ref"]),
            "--weighting", "file",
            "--weights", str(weights),
            "--out", str(run_dir),
        ]
    )
    captured = capsys.readouterr()
    assert rc == 0
    # every column the evaluator scores has an entry, so no fallback warning
    assert "missed" not in captured.err
    record = json.loads((run_dir / "records.jsonl").read_text().strip())
    assert 0.0 <= record["score"] <= 1.0
    assert record["weighting"] == "file"


def test_console_script_smoke(golden_dump_path, tmp_path):
    exe = shutil.which("weigh")
    assert exe, "console script 'weigh' not installed"
    out = tmp_path / "cli.weights"
    proc = subprocess.run(
        [exe, "--chunks", str(golden_dump_path), "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "7 weights" in proc.stdout
    ref = tmp_path / "inproc.weights"
    assert main(["--chunks", str(golden_dump_path), "--out", str(ref)]) == 0
    assert out.read_bytes() == ref.read_bytes()
