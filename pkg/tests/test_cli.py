"""End-to-end command-line tests: synth, rank, eval, flags, exit codes."""

import subprocess
import sys

import numpy as np
import pytest

from mars.bundle_io import decode_rle, read_prediction, read_proposals
from mars.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_table(text):
    """Score table rows as dicts, skipping '#' comments and the header."""
    rows = []
    for line in text.splitlines():
        if line.startswith("#") or line.lstrip().startswith("id") or not line.strip():
            continue
        pid, lc, gc, lv, gv, mars, flag = line.split()
        rows.append(
            {
                "id": int(pid),
                "lc": float(lc),
                "gc": float(gc),
                "lv": float(lv),
                "gv": float(gv),
                "mars": float(mars),
                "selected": int(flag),
            }
        )
    return rows


@pytest.fixture
def episode(tmp_path, capsys):
    code, _, err = run(capsys, "synth", "--out", str(tmp_path / "ep"), "--seed", "5")
    assert code == 0, err
    return tmp_path / "ep"


# -- synth --------------------------------------------------------------------

def test_synth_writes_a_complete_episode(episode):
    assert (episode / "bundle" / "manifest.txt").is_file()
    assert (episode / "proposals.rle").is_file()
    assert (episode / "gt.rle").is_file()


def test_synth_same_seed_is_byte_identical(tmp_path, capsys):
    for name in ("a", "b"):
        code, _, _ = run(capsys, "synth", "--out", str(tmp_path / name), "--seed", "9")
        assert code == 0
    a, b = tmp_path / "a", tmp_path / "b"
    files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    assert files_a == files_b
    for rel in files_a:
        assert (a / rel).read_bytes() == (b / rel).read_bytes()


def test_synth_different_seed_differs(tmp_path, capsys):
    run(capsys, "synth", "--out", str(tmp_path / "a"), "--seed", "1")
    run(capsys, "synth", "--out", str(tmp_path / "b"), "--seed", "2")
    same = (tmp_path / "a" / "bundle" / "query_patch_features.mten").read_bytes() == (
        tmp_path / "b" / "bundle" / "query_patch_features.mten"
    ).read_bytes()
    assert not same


def test_synth_shots_flag_controls_support_count(tmp_path, capsys):
    code, _, _ = run(capsys, "synth", "--out", str(tmp_path / "ep"), "--shots", "5")
    assert code == 0
    manifest = (tmp_path / "ep" / "bundle" / "manifest.txt").read_text()
    for i in range(5):
        assert f"support_patch_features_{i}=" in manifest
    assert "support_patch_features_5=" not in manifest


# -- rank ---------------------------------------------------------------------

def test_rank_selects_planted_proposal(episode, tmp_path, capsys):
    out = tmp_path / "out"
    code, stdout, _ = run(
        capsys, "rank", str(episode / "bundle"), str(episode / "proposals.rle"), str(out)
    )
    assert code == 0
    assert "selected=0" in stdout.splitlines()
    pred = read_prediction(out / "prediction.rle")
    gt = decode_rle((episode / "gt.rle").read_text())
    np.testing.assert_array_equal(pred, gt)
    planted = read_proposals(episode / "proposals.rle")[0]
    np.testing.assert_array_equal(pred, planted.mask_full)


def test_rank_score_table_shape_and_ranges(episode, tmp_path, capsys):
    out = tmp_path / "out"
    code, _, _ = run(
        capsys, "rank", str(episode / "bundle"), str(episode / "proposals.rle"), str(out)
    )
    assert code == 0
    rows = parse_table((out / "scores.txt").read_text())
    n = len(read_proposals(episode / "proposals.rle"))
    assert [r["id"] for r in rows] == list(range(n))
    for r in rows:
        for key in ("lc", "gc", "lv", "gv", "mars"):
            assert 0.0 <= r[key] <= 1.0
        assert r["selected"] in (0, 1)
    assert any(r["selected"] for r in rows)


def test_rank_default_header_carries_stock_settings(episode, tmp_path, capsys):
    code, stdout, _ = run(
        capsys, "rank", str(episode / "bundle"), str(episode / "proposals.rle"),
        str(tmp_path / "out"),
    )
    assert code == 0
    assert "alpha=0.85" in stdout
    assert "th_static=0.55" in stdout
    assert "th_dynamic=0.95" in stdout
    assert "clip_pir_threshold=0.4" in stdout
    assert "dino_pir_threshold=0.85" in stdout
    assert "clip_pir_layers=8" in stdout
    assert "components=gc,gv,lc,lv" in stdout
    assert "jobs" not in stdout


def test_rank_component_subset_changes_the_mean(episode, tmp_path, capsys):
    code, _, _ = run(
        capsys, "rank", str(episode / "bundle"), str(episode / "proposals.rle"),
        str(tmp_path / "out"), "--components", "lv,gv",
    )
    assert code == 0
    rows = parse_table((tmp_path / "out" / "scores.txt").read_text())
    for r in rows:
        assert r["mars"] == pytest.approx((r["lv"] + r["gv"]) / 2, abs=1e-6)


def test_rank_jobs_do_not_change_output(episode, tmp_path, capsys):
    outputs = []
    stdouts = []
    for jobs, name in (("1", "serial"), ("8", "parallel")):
        code, stdout, _ = run(
            capsys, "rank", str(episode / "bundle"), str(episode / "proposals.rle"),
            str(tmp_path / name), "--jobs", jobs,
        )
        assert code == 0
        outputs.append(
            (
                (tmp_path / name / "prediction.rle").read_bytes(),
                (tmp_path / name / "scores.txt").read_bytes(),
            )
        )
        stdouts.append([l for l in stdout.splitlines() if not l.startswith("wrote=")])
    assert outputs[0] == outputs[1]
    assert stdouts[0] == stdouts[1]


def test_rank_missing_bundle_is_input_error(tmp_path, capsys):
    code, _, err = run(
        capsys, "rank", str(tmp_path / "absent"), str(tmp_path / "nope.rle"),
        str(tmp_path / "out"),
    )
    assert code == 1
    assert "error:" in err
    assert "IoFailure" in err or "MissingTensor" in err


def test_rank_rejects_out_of_range_alpha(episode, tmp_path, capsys):
    code, _, err = run(
        capsys, "rank", str(episode / "bundle"), str(episode / "proposals.rle"),
        str(tmp_path / "out"), "--alpha", "1.5",
    )
    assert code == 1
    assert "InvalidValue" in err


def test_rank_rejects_unknown_component(episode, tmp_path, capsys):
    code, _, err = run(
        capsys, "rank", str(episode / "bundle"), str(episode / "proposals.rle"),
        str(tmp_path / "out"), "--components", "lc,bogus",
    )
    assert code == 1
    assert "bogus" in err


def test_usage_errors_exit_one(capsys):
    assert run(capsys, "rank")[0] == 1                   # missing positionals
    assert run(capsys, "no-such-command")[0] == 1
    code, _, err = run(capsys, "rank", "a", "b", "c", "--alpha", "x")
    assert code == 1
    assert "InvalidValue" in err


def test_internal_failures_exit_two(episode, tmp_path, capsys, monkeypatch):
    import mars.cli as cli_mod

    def boom(*a, **k):
        raise RuntimeError("synthetic breach")

    monkeypatch.setattr(cli_mod, "rank_proposals", boom)
    code, _, err = run(
        capsys, "rank", str(episode / "bundle"), str(episode / "proposals.rle"),
        str(tmp_path / "out"),
    )
    assert code == 2
    assert "internal error: RuntimeError" in err


# -- eval ---------------------------------------------------------------------

def eval_corpus(tmp_path, entries):
    """entries: list of (episode_id, class_id, fold, pred_mask, gt_mask)."""
    pred_dir = tmp_path / "pred"
    gt_dir = tmp_path / "gt"
    pred_dir.mkdir()
    gt_dir.mkdir()
    lines = []
    from mars.bundle_io import write_prediction

    for eid, cls, fold, pred, gt in entries:
        write_prediction(pred, pred_dir / f"{eid}.rle")
        write_prediction(gt, gt_dir / f"{eid}.rle")
        lines.append(f"{eid} {cls} {fold}")
    folds = tmp_path / "folds.txt"
    folds.write_text("\n".join(lines) + "\n")
    return pred_dir, gt_dir, folds


def square(on):
    m = np.zeros((4, 4), dtype=np.uint8)
    if on:
        m[:2, :2] = 1
    return m


def test_eval_identical_corpus_scores_one(tmp_path, capsys):
    entries = [(f"e{i}", "cat", "f0", square(True), square(True)) for i in range(3)]
    pred_dir, gt_dir, folds = eval_corpus(tmp_path, entries)
    code, out, _ = run(capsys, "eval", str(pred_dir), str(gt_dir), str(folds))
    assert code == 0
    assert "miou=1.000000" in out


def test_eval_empty_predictions_score_zero(tmp_path, capsys):
    entries = [("e0", "cat", "f0", square(False), square(True))]
    pred_dir, gt_dir, folds = eval_corpus(tmp_path, entries)
    code, out, _ = run(capsys, "eval", str(pred_dir), str(gt_dir), str(folds))
    assert code == 0
    assert "miou=0.000000" in out


def test_eval_two_class_hand_computed(tmp_path, capsys):
    # [DERIVED] class a: I=4, U=8 -> 0.5; class b: 1.0; mean 0.75
    half = np.zeros((4, 4), dtype=np.uint8)
    half[:2, :2] = 1
    full = np.zeros((4, 4), dtype=np.uint8)
    full[:2, :] = 1
    entries = [
        ("e0", "a", "f0", half, full),
        ("e1", "b", "f1", square(True), square(True)),
    ]
    pred_dir, gt_dir, folds = eval_corpus(tmp_path, entries)
    code, out, _ = run(capsys, "eval", str(pred_dir), str(gt_dir), str(folds))
    assert code == 0
    assert "iou.a=0.500000" in out
    assert "iou.b=1.000000" in out
    assert "miou.fold.f0=0.500000" in out
    assert "miou=0.750000" in out


def test_eval_rejects_malformed_folds_line(tmp_path, capsys):
    pred_dir, gt_dir, folds = eval_corpus(
        tmp_path, [("e0", "a", "f0", square(True), square(True))]
    )
    folds.write_text("e0 a\n")
    code, _, err = run(capsys, "eval", str(pred_dir), str(gt_dir), str(folds))
    assert code == 1
    assert "InvalidValue" in err


def test_eval_skips_comments_and_blanks(tmp_path, capsys):
    pred_dir, gt_dir, folds = eval_corpus(
        tmp_path, [("e0", "a", "f0", square(True), square(True))]
    )
    folds.write_text("# header\n\ne0 a f0\n")
    code, out, _ = run(capsys, "eval", str(pred_dir), str(gt_dir), str(folds))
    assert code == 0
    assert "miou=1.000000" in out


def test_eval_empty_folds_file(tmp_path, capsys):
    pred_dir, gt_dir, folds = eval_corpus(
        tmp_path, [("e0", "a", "f0", square(True), square(True))]
    )
    folds.write_text("# nothing\n")
    code, _, err = run(capsys, "eval", str(pred_dir), str(gt_dir), str(folds))
    assert code == 1
    assert "EmptyInput" in err


# -- process-level behavior -----------------------------------------------------

def test_module_entrypoint_and_logging(tmp_path):
    out = subprocess.run(
        [sys.executable, "-m", "mars", "synth", "--out", str(tmp_path / "ep"), "--seed", "3"],
        capture_output=True,
        text=True,
    )
    assert out.returncode == 0

    ranked = subprocess.run(
        [
            sys.executable, "-m", "mars", "rank",
            str(tmp_path / "ep" / "bundle"),
            str(tmp_path / "ep" / "proposals.rle"),
            str(tmp_path / "out"),
        ],
        capture_output=True,
        text=True,
        env={"PATH": "/usr/bin:/bin", "MARS_LOG": "info"},
    )
    assert ranked.returncode == 0
    assert "ranking" in ranked.stderr
    quiet = subprocess.run(
        [
            sys.executable, "-m", "mars", "rank",
            str(tmp_path / "ep" / "bundle"),
            str(tmp_path / "ep" / "proposals.rle"),
            str(tmp_path / "out2"),
        ],
        capture_output=True,
        text=True,
        env={"PATH": "/usr/bin:/bin"},
    )
    assert quiet.returncode == 0
    assert "ranking" not in quiet.stderr
    strip = lambda s: [l for l in s.splitlines() if not l.startswith("wrote=")]
    assert strip(quiet.stdout) == strip(ranked.stdout)
