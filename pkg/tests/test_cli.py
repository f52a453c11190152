"""End-to-end tests of the command line interface.

Every test drives ``kpboost.cli.main`` in process with a real argv list
and checks exit codes, stdout formats, and the files written to disk.
"""

import csv
import os

import pytest

from kpboost.boosting import load_model
from kpboost.cli import main
from kpboost.corpus import generate_frames, load_truth_csv
from kpboost.evaluate import read_error_csv, read_pr_csv
from kpboost.image import load_pgm, write_pgm
from kpboost.localization import load_votes


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """A trained corpus/model/votes workspace shared by the read tests."""
    root = tmp_path_factory.mktemp("cli")
    train = root / "train"
    test = root / "test"
    model = root / "model.kpb"
    votes = root / "votes.kpv"
    assert run("synth", "--n-pos", 12, "--n-neg", 12, "--seed", 7, "--out", train) == 0
    assert run("synth", "--n-pos", 8, "--n-neg", 8, "--seed", 8, "--out", test) == 0
    assert run("train", train, "--rounds", 5, "--out", model) == 0
    assert run("learn-votes", model, train, "--out", votes) == 0
    return {"root": root, "train": train, "test": test, "model": model, "votes": votes}


class TestSynth:
    def test_writes_corpus_layout(self, tmp_path):
        out = tmp_path / "c"
        assert run("synth", "--n-pos", 3, "--n-neg", 2, "--seed", 1, "--out", out) == 0
        assert sorted(os.listdir(out / "pos")) == ["0000.pgm", "0001.pgm", "0002.pgm"]
        assert sorted(os.listdir(out / "neg")) == ["0000.pgm", "0001.pgm"]
        truth = load_truth_csv(out / "truth.csv")
        assert sorted(truth) == ["0000.pgm", "0001.pgm", "0002.pgm"]
        for r in truth.values():
            assert (r.w, r.h) == (48, 30)

    def test_same_seed_same_bytes(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run("synth", "--n-pos", 2, "--n-neg", 1, "--seed", 5, "--out", out) == 0
        for rel in ("pos/0000.pgm", "pos/0001.pgm", "neg/0000.pgm", "truth.csv"):
            assert (a / rel).read_bytes() == (b / rel).read_bytes()

    def test_different_seed_different_images(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run("synth", "--n-pos", 1, "--n-neg", 0, "--seed", 1, "--out", a) == 0
        assert run("synth", "--n-pos", 1, "--n-neg", 0, "--seed", 2, "--out", b) == 0
        assert (a / "pos/0000.pgm").read_bytes() != (b / "pos/0000.pgm").read_bytes()

    def test_zero_images_is_contract_error(self, tmp_path):
        assert run("synth", "--n-pos", 0, "--n-neg", 0, "--seed", 0,
                   "--out", tmp_path / "c") == 1


class TestKeypoints:
    def test_stdout_csv(self, workspace, capsys):
        img = workspace["train"] / "pos" / "0000.pgm"
        assert run("keypoints", img) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "x,y,scale_fp8,response"
        assert len(lines) >= 3
        for line in lines[1:]:
            x, y, s, r = (int(v) for v in line.split(","))
            assert 0 <= x < 100 and 0 <= y < 40
            assert s > 256 and r > 0

    def test_out_file_matches_stdout(self, workspace, tmp_path, capsys):
        img = workspace["train"] / "pos" / "0000.pgm"
        out = tmp_path / "kp.csv"
        assert run("keypoints", img, "--out", out) == 0
        capsys.readouterr()
        assert run("keypoints", img) == 0
        stdout = capsys.readouterr().out.replace("\r\n", "\n")
        assert out.read_text().replace("\r\n", "\n") == stdout

    def test_max_keypoints_truncates(self, workspace, capsys):
        img = workspace["train"] / "pos" / "0000.pgm"
        assert run("keypoints", img, "--max-keypoints", 1) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 2

    def test_missing_image_is_io_error(self, capsys):
        assert run("keypoints", "/nonexistent/image.pgm") == 2
        assert "error:" in capsys.readouterr().err


class TestTrainClassify:
    def test_model_round_trips(self, workspace):
        model = load_model(workspace["model"])
        assert len(model.weaks) == 5
        assert model.theta == sum(w.alpha for w in model.weaks) // 2

    def test_classify_separates_classes(self, workspace, capsys):
        pos = workspace["test"] / "pos" / "0000.pgm"
        neg = workspace["test"] / "neg" / "0000.pgm"
        assert run("classify", workspace["model"], pos, neg) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 2
        path0, score0, dec0 = lines[0].split()
        path1, score1, dec1 = lines[1].split()
        assert path0.endswith("0000.pgm") and path1.endswith("0000.pgm")
        assert (dec0, dec1) == ("1", "0")
        assert int(score0) > int(score1)

    def test_rounds_zero_is_contract_error(self, workspace, tmp_path):
        assert run("train", workspace["train"], "--rounds", 0,
                   "--out", tmp_path / "m.kpb") == 1

    def test_missing_corpus_is_io_error(self, tmp_path):
        assert run("train", tmp_path / "nope", "--rounds", 1,
                   "--out", tmp_path / "m.kpb") == 2


class TestEval:
    def test_pr_csv_is_valid(self, workspace, tmp_path):
        out = tmp_path / "pr.csv"
        assert run("eval", workspace["model"], workspace["test"],
                   "--pr-out", out) == 0
        curve = read_pr_csv(out)
        assert curve.rows[0].recall_fp20 == 0
        assert curve.rows[-1].theta == 0
        best = max(min(r.precision_fp20, r.recall_fp20) for r in curve.rows)
        assert best >= (1 << 20) * 3 // 4

    def test_curve_csv_matches_rounds(self, workspace, tmp_path):
        out = tmp_path / "curve.csv"
        assert run("eval", workspace["model"], workspace["test"],
                   "--curve-out", out, "--train-dir", workspace["train"]) == 0
        rows = read_error_csv(out)
        assert [r[0] for r in rows] == [1, 2, 3, 4, 5]
        assert rows[-1][1] == 0  # training reached zero error on this corpus

    def test_no_outputs_is_contract_error(self, workspace):
        assert run("eval", workspace["model"], workspace["test"]) == 1

    def test_curve_without_train_dir_is_contract_error(self, workspace, tmp_path):
        assert run("eval", workspace["model"], workspace["test"],
                   "--curve-out", tmp_path / "c.csv") == 1


class TestLearnVotesDetect:
    def test_votes_file_round_trips(self, workspace):
        votes = load_votes(workspace["votes"])
        assert 1 <= len(votes.entries) <= 5
        for e in votes.entries:
            assert e.support >= 1
            assert e.vw > 0 and e.vh > 0

    def test_detect_recovers_implanted_box(self, workspace, tmp_path, capsys):
        frames = generate_frames(3, seed=99, with_object=True)
        hits = 0
        for i, (path, img, truth) in enumerate(frames):
            pgm = tmp_path / f"f{i}.pgm"
            write_pgm(img, pgm)
            assert run("detect", workspace["model"], workspace["votes"], pgm) == 0
            lines = capsys.readouterr().out.strip().splitlines()
            assert lines[0] == "x,y,w,h,score_fp20"
            for line in lines[1:]:
                x, y, w, h, score = (int(v) for v in line.split(","))
                ix = min(x + w, truth.x + truth.w) - max(x, truth.x)
                iy = min(y + h, truth.y + truth.h) - max(y, truth.y)
                inter = max(0, ix) * max(0, iy)
                union = w * h + truth.w * truth.h - inter
                if 2 * inter > union:
                    hits += 1
                assert score > 0
        assert hits == 3

    def test_detect_empty_frame_yields_no_rows(self, workspace, tmp_path, capsys):
        (path, img, truth) = generate_frames(1, seed=100, with_object=False)[0]
        pgm = tmp_path / "empty.pgm"
        write_pgm(img, pgm)
        assert run("detect", workspace["model"], workspace["votes"], pgm) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines == ["x,y,w,h,score_fp20"]

    def test_detect_out_file(self, workspace, tmp_path):
        (path, img, truth) = generate_frames(1, seed=99, with_object=True)[0]
        pgm = tmp_path / "f.pgm"
        write_pgm(img, pgm)
        out = tmp_path / "det.csv"
        assert run("detect", workspace["model"], workspace["votes"], pgm,
                   "--out", out) == 0
        with open(out, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["x", "y", "w", "h", "score_fp20"]
        assert len(rows) == 2

    def test_min_mass_flag_filters(self, workspace, tmp_path, capsys):
        (path, img, truth) = generate_frames(1, seed=99, with_object=True)[0]
        pgm = tmp_path / "f.pgm"
        write_pgm(img, pgm)
        assert run("detect", workspace["model"], workspace["votes"], pgm) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        score = int(lines[1].split(",")[-1])
        assert run("detect", workspace["model"], workspace["votes"], pgm,
                   "--min-mass", score + 1) == 0
        assert capsys.readouterr().out.strip().splitlines() == ["x,y,w,h,score_fp20"]

    def test_corpus_without_truth_is_io_error(self, workspace, tmp_path):
        bare = tmp_path / "bare"
        assert run("synth", "--n-pos", 1, "--n-neg", 1, "--seed", 0,
                   "--out", bare) == 0
        os.remove(bare / "truth.csv")
        assert run("learn-votes", workspace["model"], bare,
                   "--out", tmp_path / "v.kpv") == 2


class TestUsageErrors:
    def test_no_arguments_exits_1(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run()
        assert exc.value.code == 1
        capsys.readouterr()

    def test_unknown_subcommand_exits_1(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run("bogus")
        assert exc.value.code == 1
        capsys.readouterr()

    def test_help_exits_0(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run("--help")
        assert exc.value.code == 0
        assert "COMMAND" in capsys.readouterr().out

    def test_bad_detector_flag_exits_1(self, workspace, capsys):
        img = workspace["train"] / "pos" / "0000.pgm"
        assert run("keypoints", img, "--stride", 0) == 1
        assert "stride" in capsys.readouterr().err
