"""Command line front end.

Subcommands cover the full workflow: ``synth`` writes a deterministic
corpus to disk, ``keypoints`` dumps one image's detections, ``train``
fits a boosted classifier over a ``pos/``+``neg/`` directory, ``classify``
scores images against a saved model, ``eval`` writes precision/recall
and error-curve CSVs, ``learn-votes`` estimates per-weak-classifier
box votes from truth boxes, and ``detect`` localizes objects in a frame.

Exit codes: 0 on success, 1 on a contract violation (bad arguments or
inputs that break a documented precondition), 2 on an I/O failure
(missing or malformed files).  The only random subcommand is ``synth``
and all of its entropy comes from ``--seed``.
"""

import argparse
import csv
import os
import sys

from .boosting import load_model, save_model, strong_score, train_adaboost
from .corpus import (
    TRUTH_FILE,
    generate_labeled,
    load_corpus,
    load_truth_csv,
    write_corpus,
)
from .detector import (
    DEFAULT_RESPONSE_THRESHOLD,
    DEFAULT_STRIDE,
    DetectorParams,
    detect_keypoints,
)
from .errors import ContractError, FileFormatError, TrainingError
from .evaluate import eval_pr, prefix_error_counts, write_error_csv, write_pr_csv
from .image import integral, load_pgm
from .localization import (
    DEFAULT_CELL_SIZE,
    DEFAULT_MIN_MASS,
    HoughParams,
    hough_detect,
    learn_votes,
    load_votes,
    save_votes,
)
from .matching import build_distance_matrix, extract_features

KEYPOINT_HEADER = ("x", "y", "scale_fp8", "response")
DETECTION_HEADER = ("x", "y", "w", "h", "score_fp20")


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with the contract code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _detector_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("detector options")
    g.add_argument(
        "--response-threshold",
        type=int,
        default=DEFAULT_RESPONSE_THRESHOLD,
        metavar="R",
        help="minimum blob response to keep a keypoint (default: %(default)s)",
    )
    g.add_argument(
        "--stride",
        type=int,
        default=DEFAULT_STRIDE,
        metavar="S",
        help="sampling stride of the response grid (default: %(default)s)",
    )
    g.add_argument(
        "--max-keypoints",
        type=int,
        default=None,
        metavar="K",
        help="keep only the K strongest keypoints (default: keep all)",
    )
    return p


def _params(args) -> DetectorParams:
    return DetectorParams(
        stride=args.stride,
        response_threshold=args.response_threshold,
        max_keypoints=args.max_keypoints,
    )


def _emit_rows(out, header, rows) -> None:
    """Write a CSV to ``out``, or to stdout when ``out`` is None."""
    if out is None:
        w = csv.writer(sys.stdout)
        w.writerow(header)
        w.writerows(rows)
        return
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _corpus_features(corpus, params):
    pos = [extract_features(img, params, path) for path, img in corpus.positives]
    neg = [extract_features(img, params, path) for path, img in corpus.negatives]
    return pos, neg


def cmd_keypoints(args) -> int:
    img = load_pgm(args.image)
    kps = detect_keypoints(integral(img), _params(args))
    rows = [(k.x, k.y, k.scale, k.response) for k in kps]
    _emit_rows(args.out, KEYPOINT_HEADER, rows)
    return 0


def cmd_train(args) -> int:
    corpus = load_corpus(args.corpus)
    params = _params(args)
    pos, neg = _corpus_features(corpus, params)
    matrix = build_distance_matrix(pos, neg)
    result = train_adaboost(matrix, args.rounds)
    save_model(result.classifier, args.out)
    n = corpus.n_pos + corpus.n_neg
    print(
        f"trained {len(result.classifier.weaks)} rounds on {n} images; "
        f"final train error {result.train_errors[-1]}/{n}; wrote {args.out}"
    )
    return 0


def cmd_classify(args) -> int:
    model = load_model(args.model)
    params = _params(args)
    for path in args.images:
        img = load_pgm(path)
        feats = extract_features(img, params, path)
        score = strong_score(model, feats)
        decision = 1 if score >= model.theta else 0
        print(f"{path} {score} {decision}")
    return 0


def cmd_eval(args) -> int:
    if args.pr_out is None and args.curve_out is None:
        raise ContractError("nothing to do: pass --pr-out and/or --curve-out")
    if args.curve_out is not None and args.train_dir is None:
        raise ContractError("--curve-out needs --train-dir for the train column")
    model = load_model(args.model)
    params = _params(args)
    test = load_corpus(args.corpus)
    if args.pr_out is not None:
        write_pr_csv(eval_pr(model, test, params), args.pr_out)
        print(f"wrote {args.pr_out}")
    if args.curve_out is not None:
        train = load_corpus(args.train_dir)
        train_errors = prefix_error_counts(model, train, params)
        test_errors = prefix_error_counts(model, test, params)
        rows = [
            (k + 1, train_errors[k], test_errors[k])
            for k in range(len(model.weaks))
        ]
        write_error_csv(rows, args.curve_out)
        print(f"wrote {args.curve_out}")
    return 0


def cmd_learn_votes(args) -> int:
    model = load_model(args.model)
    corpus = load_corpus(args.corpus)
    truth = load_truth_csv(os.path.join(args.corpus, TRUTH_FILE))
    params = _params(args)
    pairs = []
    for path, img in corpus.positives:
        name = os.path.basename(path)
        if name not in truth:
            raise ContractError(f"no truth box for {name}")
        pairs.append((extract_features(img, params, path), truth[name]))
    votes = learn_votes(model, pairs)
    save_votes(votes, args.out)
    print(
        f"learned votes for {len(votes.entries)} of {len(model.weaks)} "
        f"weak classifiers; wrote {args.out}"
    )
    return 0


def cmd_detect(args) -> int:
    model = load_model(args.model)
    votes = load_votes(args.votes)
    img = load_pgm(args.image)
    feats = extract_features(img, _params(args), args.image)
    hp = HoughParams(cell_size=args.cell_size, min_mass=args.min_mass)
    dets = hough_detect(model, votes, feats, img.width, img.height, hp)
    rows = [(d.box.x, d.box.y, d.box.w, d.box.h, d.score) for d in dets]
    _emit_rows(args.out, DETECTION_HEADER, rows)
    return 0


def cmd_synth(args) -> int:
    corpus, truths = generate_labeled(args.n_pos, args.n_neg, args.seed)
    write_corpus(corpus, args.out, truths)
    print(
        f"wrote {corpus.n_pos} positive and {corpus.n_neg} negative "
        f"images to {args.out}"
    )
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="kpboost",
        description="Object-category recognition with boosted keypoint features.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    det = _detector_parent()

    p = sub.add_parser(
        "keypoints",
        parents=[det],
        help="detect keypoints in one image and emit x,y,scale_fp8,response",
    )
    p.add_argument("image", help="PGM image to analyse")
    p.add_argument("--out", default=None, metavar="F", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_keypoints)

    p = sub.add_parser(
        "train",
        parents=[det],
        help="fit a boosted classifier on DIR/pos and DIR/neg",
    )
    p.add_argument("corpus", help="corpus directory holding pos/ and neg/")
    p.add_argument("--rounds", type=int, default=50, metavar="T",
                   help="boosting rounds (default: %(default)s)")
    p.add_argument("--out", required=True, metavar="F", help="model output path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser(
        "classify",
        parents=[det],
        help="print `path score_fp20 decision` for each image",
    )
    p.add_argument("model", help="saved model path")
    p.add_argument("images", nargs="+", help="PGM images to score")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser(
        "eval",
        parents=[det],
        help="write precision/recall and per-round error CSVs",
    )
    p.add_argument("model", help="saved model path")
    p.add_argument("corpus", help="test corpus directory holding pos/ and neg/")
    p.add_argument("--pr-out", default=None, metavar="F",
                   help="precision/recall CSV output path")
    p.add_argument("--curve-out", default=None, metavar="F",
                   help="per-round error CSV output path")
    p.add_argument("--train-dir", default=None, metavar="DIR",
                   help="training corpus for the curve's train-error column")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser(
        "learn-votes",
        parents=[det],
        help="estimate box votes from DIR/pos plus DIR/truth.csv",
    )
    p.add_argument("model", help="saved model path")
    p.add_argument("corpus", help="corpus directory with pos/, neg/ and truth.csv")
    p.add_argument("--out", required=True, metavar="F", help="votes output path")
    p.set_defaults(func=cmd_learn_votes)

    p = sub.add_parser(
        "detect",
        parents=[det],
        help="localize objects in one frame and emit x,y,w,h,score_fp20",
    )
    p.add_argument("model", help="saved model path")
    p.add_argument("votes", help="saved votes path")
    p.add_argument("image", help="PGM frame to search")
    p.add_argument("--cell-size", type=int, default=DEFAULT_CELL_SIZE, metavar="C",
                   help="accumulator cell size in pixels (default: %(default)s)")
    p.add_argument("--min-mass", type=int, default=DEFAULT_MIN_MASS, metavar="M",
                   help="minimum smoothed vote mass for a peak (default: %(default)s)")
    p.add_argument("--out", default=None, metavar="F", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser(
        "synth",
        help="write a deterministic synthetic corpus with truth boxes",
    )
    p.add_argument("--n-pos", type=int, required=True, metavar="N",
                   help="number of positive images")
    p.add_argument("--n-neg", type=int, required=True, metavar="N",
                   help="number of negative images")
    p.add_argument("--seed", type=int, default=0, metavar="S",
                   help="seed for all generated randomness (default: %(default)s)")
    p.add_argument("--out", required=True, metavar="DIR", help="output directory")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ContractError, TrainingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
