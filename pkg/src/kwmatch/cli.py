"""Command-line entry point: gen-data, train, eval, rank, explain."""

from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .config import ModelConfig, TrainingConfig, load_config, parse_pairs
from .data import SyntheticConfig, gen_synthetic, load_candidates, load_tsv, save_aliases, save_tsv
from .embeddings import load_aliases
from .errors import ConfigError, KwMatchError
from .matching import similarity
from .pipeline import fit
from .training import evaluate

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _global_flags() -> argparse.ArgumentParser:
    p = Parser(add_help=False)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed for data, init and shuffling")
    p.add_argument("--config", default=argparse.SUPPRESS, help="key = value config file")
    p.add_argument("--set", action="append", default=argparse.SUPPRESS, metavar="KEY=VALUE",
                   help="override one config key (repeatable)")
    p.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS, help="only print results")
    return p


def build_parser() -> Parser:
    common = _global_flags()
    parser = Parser(prog="kwmatch", description="Question matching over multi-level keyword sets.",
                    parents=[common])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    g = sub.add_parser("gen-data", parents=[common], help="write a synthetic question-pair TSV")
    g.add_argument("--n-pairs", type=int, default=1000)
    g.add_argument("--content-vocab", type=int, default=200)
    g.add_argument("--function-vocab", type=int, default=50)
    g.add_argument("--hard-fraction", type=float, default=0.3)
    g.add_argument("--out", required=True, help="output TSV")
    g.add_argument("--aliases-out", help="write the synonym map as an alias file")

    t = sub.add_parser("train", parents=[common], help="train a model and write a checkpoint")
    t.add_argument("--train", required=True, help="training TSV")
    t.add_argument("--dev", help="dev TSV for best-epoch selection")
    t.add_argument("--out", required=True, help="checkpoint path")
    t.add_argument("--history", help="write per-epoch history here")
    t.add_argument("--aliases", help="alias file for hash-initialised embeddings")
    t.add_argument("--epochs", type=int)

    e = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint on a TSV")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)

    r = sub.add_parser("rank", parents=[common], help="rank candidates for one query")
    r.add_argument("--model", required=True)
    r.add_argument("--query", required=True)
    r.add_argument("--candidates", required=True, help="one candidate question per line")

    x = sub.add_parser("explain", parents=[common], help="show importances, chains and pairs for one pair")
    x.add_argument("--model", required=True)
    x.add_argument("q")
    x.add_argument("d")
    return parser


def _configs(args) -> tuple[ModelConfig, TrainingConfig]:
    model, training = ModelConfig(), TrainingConfig()
    if getattr(args, "config", None):
        model, training = load_config(args.config)
    overrides = []
    for item in getattr(args, "set", None) or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        overrides.append((key.strip(), value.strip()))
    if overrides:
        model, training = parse_pairs(overrides, model, training)
    return model, training


def _load_model(args):
    expect = None
    if getattr(args, "config", None) or getattr(args, "set", None):
        expect = _configs(args)[0]
    return load_checkpoint(args.model, expect)


def cmd_gen_data(args, out) -> int:
    cfg = SyntheticConfig(n_pairs=args.n_pairs, content_vocab=args.content_vocab,
                          function_vocab=args.function_vocab, seed=getattr(args, "seed", 0),
                          hard_fraction=args.hard_fraction)
    syn = gen_synthetic(cfg)
    save_tsv(args.out, syn.records)
    if args.aliases_out:
        save_aliases(args.aliases_out, syn.alias_map())
    if not args.quiet:
        counts = {k: syn.kinds.count(k) for k in ("regular", "hard", "negative")}
        print(f"pairs={len(syn.records)} " + " ".join(f"{k}={v}" for k, v in counts.items()), file=out)
    return EXIT_OK


def cmd_train(args, out) -> int:
    model_cfg, train_cfg = _configs(args)
    if hasattr(args, "seed"):
        train_cfg.seed = args.seed
    if args.epochs is not None:
        train_cfg = TrainingConfig(**{**train_cfg.__dict__, "epochs": args.epochs})
    train_set = load_tsv(args.train)
    dev_set = load_tsv(args.dev) if args.dev else None
    aliases = load_aliases(args.aliases) if args.aliases else None

    def report(stats):
        if not args.quiet:
            print(_epoch_line(stats), file=out, flush=True)

    model, result = fit(model_cfg, train_cfg, train_set, dev_set, aliases, on_epoch=report)
    save_checkpoint(model, args.out, train_cfg)
    if args.history:
        with open(args.history, "w", encoding="utf-8") as fh:
            fh.write("\n".join(result.lines()) + "\n")
    if not args.quiet and result.best_epoch is not None:
        print(f"best_epoch={result.best_epoch}", file=out)
    return EXIT_OK


def _epoch_line(stats) -> str:
    fmt = lambda v: "n/a" if v is None else f"{v:.6f}"  # noqa: E731
    return (f"epoch={stats.epoch} loss={stats.loss:.6f} "
            f"dev_accuracy={fmt(stats.dev_accuracy)} dev_auc={fmt(stats.dev_auc)}")


def cmd_eval(args, out) -> int:
    model = _load_model(args)
    records = load_tsv(args.data)
    rep = evaluate(model, records)
    if not args.quiet:
        print(rep.table(), file=out)
        print(file=out)
    print("\n".join(rep.lines()), file=out)
    return EXIT_OK


def cmd_rank(args, out) -> int:
    model = _load_model(args)
    candidates = load_candidates(args.candidates)
    if not candidates:
        raise KwMatchError("candidate file is empty")
    scores = model.predict([(args.query, c) for c in candidates])
    order = sorted(range(len(candidates)), key=lambda i: -scores[i])
    for i in order:
        print(f"{scores[i]:.6f}\t{candidates[i]}", file=out)
    return EXIT_OK


def _chain_lines(levels, keywords) -> list[str]:
    out = []
    for m, kept in enumerate(levels.levels, start=1):
        ratio = Fraction(len(kept), levels.length)
        words = " ".join(keywords[p].surface for p in kept)
        out.append(f"  KS_{m}\tr={float(ratio):.3f}\t{{{words}}}")
    return out


def cmd_explain(args, out) -> int:
    model = _load_model(args)
    rep = similarity(args.q, args.d, model)
    lines = [f"similarity\t{rep.similarity:.6f}", f"decision\t{int(rep.decision)}"]
    for side, kws, levels in (("q", rep.q_keywords, rep.q_levels), ("d", rep.d_keywords, rep.d_levels)):
        lines.append(f"{side} keywords (position, surface, importance, pos, stopword, idf bucket):")
        for k in kws:
            c = k.candidate
            lines.append(f"  {c.position}\t{c.surface}\t{k.importance:.6f}\t{c.pos_tag}\t"
                         f"{int(c.is_stopword)}\t{c.idf_bucket}")
        lines.append(f"{side} chain ({levels.length} levels):")
        lines += _chain_lines(levels, kws)
    lines.append(f"comparable pairs ({len(rep.pairs)}):")
    lines.append("  m\tn\tweight\t|mlp|\t|att|\tbm25\tjaccard\twlm")
    for p in rep.pairs:
        v = p.views
        mlp = "-" if v.mlp_part is None else f"{np.linalg.norm(v.mlp_part):.4f}"
        att = "-" if v.att_part is None else f"{np.linalg.norm(v.att_part):.4f}"
        lex = ["-", "-", "-"] if v.lex_part is None else [f"{x:.4f}" for x in v.lex_part]
        flag = "\ttruncated" if p.truncated else ""
        lines.append(f"  {p.pair.q_level}\t{p.pair.d_level}\t{p.pair.weight:.6f}\t{mlp}\t{att}\t"
                     + "\t".join(lex) + flag)
    print("\n".join(lines), file=out)
    return EXIT_OK


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "rank": cmd_rank,
    "explain": cmd_explain,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    args.quiet = getattr(args, "quiet", False)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"kwmatch: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"kwmatch: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (KwMatchError, OSError) as exc:
        print(f"kwmatch: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
