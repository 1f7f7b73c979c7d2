"""Command-line interface: train a checkpoint, serve it, convert data."""

from __future__ import annotations

import argparse
import logging
import sys

from .data import convert_judged_collection, load_examples, write_examples
from .model import ModelConfig
from .service import ScoringSession, serve_http, serve_stdio
from .training import TrainConfig, fine_tune


def cmd_train(args) -> int:
    config = TrainConfig(
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        freeze_embeddings=not args.no_freeze_embeddings,
        max_sequence_length=args.max_sequence_length,
        epochs=args.epochs,
        validation_fraction=args.validation_fraction,
        seed=args.seed,
    )
    examples = load_examples(args.examples)
    model_config = None
    if args.base_checkpoint is None:
        model_config = ModelConfig(
            vocab_size=0,  # replaced after the tokenizer is built
            dim=args.dim, heads=args.heads, layers=args.layers,
            ffn_dim=args.ffn_dim, max_positions=args.max_sequence_length,
            name=args.model_name)
    result = fine_tune(examples, config, args.out,
                       base_checkpoint=args.base_checkpoint,
                       model_config=model_config)
    print(f"best epoch {result.best_epoch}: "
          f"val loss {result.validation_losses[result.best_epoch]:.4f} -> {args.out}")
    return 0


def cmd_serve(args) -> int:
    session = ScoringSession.load(args.checkpoint)
    if args.transport == "stdio":
        return serve_stdio(session)
    server = serve_http(session, host=args.host, port=args.port)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def cmd_convert(args) -> int:
    examples = convert_judged_collection(args.topics, args.docs, args.qrels,
                                         lang=args.lang)
    write_examples(args.out, examples)
    positives = sum(ex.label for ex in examples)
    print(f"wrote {len(examples)} examples ({positives} positive) -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scorer-service", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fine-tune a relevance classifier")
    p.add_argument("--examples", required=True, help="training JSONL (query/sentence/label)")
    p.add_argument("--out", required=True, help="checkpoint directory")
    p.add_argument("--base-checkpoint", help="start from an existing checkpoint")
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--learning-rate", type=float, default=3e-5)
    p.add_argument("--no-freeze-embeddings", action="store_true",
                   help="update embeddings during training (frozen by default)")
    p.add_argument("--max-sequence-length", type=int, default=512)
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--validation-fraction", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--heads", type=int, default=4)
    p.add_argument("--layers", type=int, default=1)
    p.add_argument("--ffn-dim", type=int, default=128)
    p.add_argument("--model-name", default="pair-scorer-tiny")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("serve", help="serve a checkpoint over the wire protocol")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--transport", choices=["http", "stdio"], default="http")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=0,
                   help="0 picks a free port; the URL is printed on startup")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("convert", help="build training examples from a judged collection")
    p.add_argument("--topics", required=True)
    p.add_argument("--docs", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--lang", default="en")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_convert)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"scorer-service: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
