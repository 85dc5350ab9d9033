"""Command line: fine-tune on a dataset file, then serve the artifacts."""

import argparse
import logging

from .config import FinetuneConfig
from .data import load_pairs
from .training import exact_match_rate, fine_tune
from .vocabulary import load_relations, special_tokens


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="dblpqa-model-server")
    ap.add_argument("--log-level", default="INFO")
    sub = ap.add_subparsers(dest="command", required=True)

    tp = sub.add_parser("train", help="fine-tune on question/query pairs")
    tp.add_argument("--train", required=True, help="dataset JSON")
    tp.add_argument("--relations", required=True,
                    help="relations file shared with the QA pipeline")
    tp.add_argument("--out", required=True, help="artifact directory")
    tp.add_argument("--base-model", default="facebook/bart-base")
    tp.add_argument("--epochs", type=int, default=30)
    tp.add_argument("--batch-size", type=int, default=8)
    tp.add_argument("--learning-rate", type=float, default=5e-4)
    tp.add_argument("--seed", type=int, default=13)
    tp.add_argument("--report-exact-match", action="store_true",
                    help="decode the training set after training")

    sp = sub.add_parser("serve", help="serve trained artifacts")
    sp.add_argument("--model-dir", required=True)
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8764)

    args = ap.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level.upper(),
                                      logging.INFO))

    if args.command == "train":
        cfg = FinetuneConfig(
            base_model_id=args.base_model,
            special_tokens=special_tokens(load_relations(args.relations)),
            epochs=args.epochs, batch_size=args.batch_size,
            learning_rate=args.learning_rate, seed=args.seed,
            output_dir=args.out)
        pairs = load_pairs(args.train)
        model, losses = fine_tune(pairs, cfg)
        print(f"trained on {len(pairs)} pairs; "
              f"loss {losses[0]:.4f} -> {losses[-1]:.4f}; artifacts in {args.out}")
        if args.report_exact_match:
            print(f"training-set exact match: {exact_match_rate(model, pairs):.2%}")
        return 0

    from .server import serve
    serve(args.model_dir, host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
