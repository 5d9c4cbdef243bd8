"""Command-line entry point: ``g2c {build-dataset,train,eval,predict,gradcheck}``.

Exit codes: 0 success, 1 usage error, 2 data or format error.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .checkpoint import CheckpointFormatError, load_checkpoint, save_checkpoint
from .config import RunConfig, variant_flags
from .dataset import (
    DatasetFormatError,
    build_dataset,
    emit_dataset,
    load_collocation_list,
    load_labels,
    read_jsonl,
    write_jsonl,
)
from .gradcheck import GRADCHECK_DEFAULTS, run_gradcheck
from .metrics import confusion_to_tsv
from .model import G2CModel
from .training import evaluate_model, run_training
from .validation import check_labels, check_sentences

logger = logging.getLogger("g2c")

GRADCHECK_TOLERANCE = 1e-4
CHECKPOINT_NAME = "model.g2ck"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _seed_override(seed):
    env = os.environ.get("G2C_SEED")
    if env is None:
        return seed
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"G2C_SEED must be an integer, got {env!r}") from None


def _load_config(path):
    config = RunConfig.from_json(path) if path else RunConfig()
    config.seed = _seed_override(config.seed)
    return config


def cmd_build_dataset(args):
    corpus = Path(args.corpus)
    if not corpus.is_dir():
        raise DatasetFormatError(f"corpus directory not found: {corpus}")
    paths = sorted(corpus.rglob("*.conllu"))
    if not paths:
        raise DatasetFormatError(f"no .conllu files under {corpus}")
    instances = load_collocation_list(args.collocations)
    result = build_dataset(paths, instances, seed=args.seed, max_len=args.max_len,
                           allow_case_hop=args.allow_case_hop)
    emit_dataset(result, args.out, review=args.review)
    print(json.dumps(result.stats["sentences"]))
    return 0


def cmd_train(args):
    config = _load_config(args.config)
    data = Path(args.data)
    labels = load_labels(data)
    train = check_sentences(read_jsonl(data / "train.jsonl"), require_gold=True, name="train")
    dev_path = data / "dev.jsonl"
    dev = read_jsonl(dev_path) if dev_path.exists() else []
    dev = check_sentences(dev, require_gold=True, name="dev") if dev else []
    check_labels(train, labels["lf_labels"], name="train")
    check_labels(dev, labels["lf_labels"], name="dev")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    frequencies = {lf: sum(s.sentence_label == lf for s in train) for lf in labels["lf_labels"]}
    model = G2CModel.create(config, train, labels["lf_labels"], dep_labels=labels.get("dep_labels") or None)

    def on_improve(epoch, trainer):
        save_checkpoint(out / CHECKPOINT_NAME, trainer.model, config,
                        optimizer=trainer.optimizer.state_dict(),
                        rng_state=trainer.rng.bit_generator.state,
                        meta={"epoch": epoch, "train_frequencies": frequencies})

    _, result = run_training(model, config, train, dev, on_improve=on_improve)
    history = {"best_epoch": result.best_epoch, "stopped_early": result.stopped_early,
               "config": config.to_dict(), "epochs": result.history}
    (out / "history.json").write_text(json.dumps(history, indent=2) + "\n", encoding="utf-8")
    best = result.history[result.best_epoch - 1]
    print(json.dumps({"best_epoch": result.best_epoch,
                      **{k: v for k, v in best.items() if k.startswith("dev")}}))
    return 0


def cmd_eval(args):
    ckpt = load_checkpoint(args.checkpoint)
    sentences = check_sentences(read_jsonl(args.data), require_gold=True, name="data")
    check_labels(sentences, ckpt.model.lf_labels, name="data")
    report, _ = evaluate_model(ckpt.model, sentences, frequencies=ckpt.meta.get("train_frequencies"))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json() + "\n", encoding="utf-8")
    (out / "confusion.tsv").write_text(confusion_to_tsv(report.confusion), encoding="utf-8")
    print(json.dumps({"sentence_accuracy": report.sentence_accuracy, "macro_f1": report.macro_f1_by_role,
                      "macro_f1_by_lf": report.macro_f1_by_lf}))
    return 0


def cmd_predict(args):
    ckpt = load_checkpoint(args.checkpoint)
    sentences = check_sentences(read_jsonl(args.input), name="input")
    preds = ckpt.model.predict(sentences)
    records = []
    for s, p in zip(sentences, preds):
        rec = s.to_record()
        rec["tags"] = p.tags
        rec["sentence_label"] = p.sentence_label
        rec.pop("instances", None)
        records.append(rec)
    write_jsonl(args.output, records)
    return 0


def cmd_gradcheck(args):
    options = dict(GRADCHECK_DEFAULTS)
    seed = _seed_override(args.seed)
    if args.config:
        config = RunConfig.from_json(args.config)
        use_graph, use_pos, _ = variant_flags(config.model_variant)
        options.update(n_layers=config.n_layers, n_heads=config.n_heads, head_dim=config.head_dim,
                       ffn_dim=config.ffn_dim, use_graph=use_graph, use_pos=use_pos,
                       token_reduction=config.token_reduction)
    if args.n_words is not None:
        options["n_words"] = args.n_words
    err = run_gradcheck(seed=seed, h=args.step, **options)
    print(f"max relative error: {err:.3e}")
    return 0 if err <= GRADCHECK_TOLERANCE else 1


def build_parser():
    parser = _Parser(prog="g2c", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build-dataset", help="extract, label and split a collocation dataset")
    p.add_argument("--corpus", required=True, help="directory of .conllu files")
    p.add_argument("--collocations", required=True, help="5-column TSV of LF instances")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--max-len", type=int, default=128, help="maximum length including CLS/SEP")
    p.add_argument("--allow-case-hop", action="store_true", help="accept one ADP between base and collocate")
    p.add_argument("--review", action="store_true", help="also write review.tsv for manual filtering")
    p.set_defaults(func=cmd_build_dataset)

    p = sub.add_parser("train", help="train with early stopping on dev")
    p.add_argument("--data", required=True, help="directory produced by build-dataset")
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a checkpoint on a gold JSONL file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help="JSONL with gold tags")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="tag sentences from JSONL")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("gradcheck", help="finite-difference check of the full model")
    p.add_argument("--config", help="JSON run configuration (dimensions and variant)")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--step", type=float, default=1e-5)
    p.add_argument("--n-words", type=int, default=None)
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (DatasetFormatError, CheckpointFormatError, ValueError, KeyError, OSError) as exc:
        print(f"g2c: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
