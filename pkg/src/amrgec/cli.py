"""Command-line entry point.

Exit codes: 0 success, 1 validation failure, 2 usage error. Data goes to
stdout or the ``-o`` file; warnings go to stderr.

Any long option may also be given in a ``--config`` file of ``key=value``
lines (``mask-rate=0.2``); options on the command line take precedence.
"""

from __future__ import annotations

import argparse
import contextlib
import random
import sys

import numpy as np

from . import __version__
from .align import align
from .denoise import STRATEGIES, GraphTooSmall, MaskSpec
from .encoder import VARIANTS, EncoderParams
from .penman import PenmanError, format_record, iter_blocks, record_id
from .rng import derive_seed
from .seqgraph import build_sequence_amr_graph, export_graph_json
from .smatch import DEFAULT_RESTARTS, f_score, graphs_identical, smatch
from .training import (
    DEFAULT_CLIP,
    DEFAULT_LR,
    gradient_report,
    make_toy_corpus,
    overfit_toy,
    toy_graph,
    toy_student,
)

EXIT_OK, EXIT_INVALID, EXIT_USAGE = 0, 1, 2
GRADIENT_TOLERANCE = 1e-4


class LengthMismatch(ValueError):
    pass


def warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as fh:
            yield fh


def _records(path):
    """Yield (block, graph or None, error or None) for each record of a corpus file."""
    with open(path, encoding="utf-8") as fh:
        for block in iter_blocks(fh):
            try:
                yield block, block.parse(), None
            except PenmanError as exc:
                yield block, None, exc


def _describe(exc: PenmanError) -> str:
    return f"{type(exc).__name__}\tline {exc.line} col {exc.col}\t{exc.message}"


# ---------------------------------------------------------------------------
# commands


def cmd_parse(args) -> int:
    n = failed = 0
    for block, g, err in _records(args.input):
        rid = record_id(g, block.index) if g is not None else str(block.index)
        if err is None:
            print(f"{rid}\tOK")
        else:
            failed += 1
            print(f"{rid}\tERROR\t{_describe(err)}")
        n += 1
    print(f"{n} graphs" + (f", {failed} failed" if failed else ""))
    return EXIT_INVALID if failed else EXIT_OK


class _Invalid(Exception):
    pass


def _aligned_records(path):
    status = EXIT_OK
    for block, g, err in _records(path):
        if err is not None:
            warn(f"record {block.index}: {err}")
            status = EXIT_INVALID
            continue
        rid = record_id(g, block.index)
        tokens = g.tokens
        if not tokens:
            warn(f"record {rid}: no '# ::tok' line, skipped")
            continue
        yield rid, g, tokens, align(g, tokens)
    if status:
        raise _Invalid()


def cmd_align(args) -> int:
    try:
        with _output(args.output) as out:
            for _, _, _, a in _aligned_records(args.input):
                out.write(a.to_json() + "\n")
    except _Invalid:
        return EXIT_INVALID
    return EXIT_OK


def cmd_build(args) -> int:
    try:
        with _output(args.output) as out:
            for _, g, tokens, a in _aligned_records(args.input):
                out.write(export_graph_json(build_sequence_amr_graph(tokens, g, a)) + "\n")
    except _Invalid:
        return EXIT_INVALID
    return EXIT_OK


def cmd_mask(args) -> int:
    spec = MaskSpec(
        strategy=args.mask_strategy.replace("-", "_"),
        rate=args.mask_rate,
        max_subgraph_size=args.max_subgraph_size,
        seed=args.seed,
    )
    status = EXIT_OK
    first = True
    with _output(args.output) as out:
        for block, g, err in _records(args.input):
            if err is not None:
                warn(f"record {block.index}: {err}")
                status = EXIT_INVALID
                continue
            try:
                masked = spec.apply(g, seed=derive_seed(spec.seed, block.index))
            except GraphTooSmall as exc:
                warn(f"record {record_id(g, block.index)}: {exc}; passed through unmasked")
                masked = g
            if not first:
                out.write("\n")
            out.write(format_record(masked))
            first = False
    return status


def _paired(path1, path2):
    left = list(_records(path1))
    right = list(_records(path2))
    if len(left) != len(right):
        raise LengthMismatch(f"{path1} has {len(left)} records but {path2} has {len(right)}")
    for (b1, g1, e1), (b2, g2, e2) in zip(left, right):
        err = e1 or e2
        if err is not None:
            raise _Invalid(f"record {b1.index}: {err}")
        yield record_id(g1, b1.index), g1, g2


def cmd_smatch(args) -> int:
    matched = total1 = total2 = 0
    try:
        for i, (rid, g1, g2) in enumerate(_paired(args.first, args.second)):
            r = smatch(g1, g2, restarts=args.restarts, seed=derive_seed(args.seed, i))
            print(f"{rid}\t{r.precision:.4f}\t{r.recall:.4f}\t{r.f1:.4f}")
            matched += r.matched
            total1 += r.total1
            total2 += r.total2
    except (LengthMismatch, _Invalid) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    p, r, f = f_score(matched, total1, total2)
    print(f"ALL\t{p:.4f}\t{r:.4f}\t{f:.4f}")
    return EXIT_OK


def cmd_reliability(args) -> int:
    count = identical = 0
    f1_sum = 0.0
    try:
        for i, (_, g1, g2) in enumerate(_paired(args.source, args.corrected)):
            count += 1
            identical += graphs_identical(g1, g2)
            f1_sum += smatch(g1, g2, restarts=args.restarts, seed=derive_seed(args.seed, i)).f1
    except (LengthMismatch, _Invalid) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if count == 0:
        print("error: empty corpus", file=sys.stderr)
        return EXIT_INVALID
    print(f"{count}\t{identical}\t{identical / count:.4f}\t{f1_sum / count:.4f}")
    return EXIT_OK


def _check_fixture(variant, d, n, seed, params=None):
    rng = random.Random(seed)
    if params is None:
        params = toy_student(d=d, variant=variant, seed=seed)
    vocab = params.vocab[1:] or ["x"]
    tokens = [rng.choice(vocab) for _ in range(n)]
    g = toy_graph(tokens, rng)
    sg = build_sequence_amr_graph(tokens, g, align(g, tokens))
    target = np.random.default_rng(seed).normal(size=(n, params.d))
    return params, [(tokens, sg, target)]


def cmd_encode_check(args) -> int:
    loaded = None
    if args.params:
        with open(args.params, encoding="utf-8") as fh:
            loaded = EncoderParams.from_json(fh.read())
    variants = [loaded.variant] if loaded else (VARIANTS if args.variant == "all" else [args.variant])
    worst = 0.0
    for variant in variants:
        params, batch = _check_fixture(variant, args.d, args.n, args.seed, loaded)
        if args.save_params:
            with open(args.save_params, "w", encoding="utf-8") as fh:
                fh.write(params.to_json())
        for name, err in gradient_report(params, batch, epsilon=args.epsilon).items():
            label = name if len(variants) == 1 else f"{variant}/{name}"
            print(f"{label}\t{err:.3e}")
            worst = max(worst, err)
    return EXIT_OK if worst < GRADIENT_TOLERANCE else EXIT_INVALID


def cmd_overfit_demo(args) -> int:
    corpus, _ = make_toy_corpus(args.pairs, d=args.d, variant=args.variant, seed=args.seed)
    params = toy_student(d=args.d, variant=args.variant, seed=args.seed + 1)
    curve = overfit_toy(params, corpus, args.steps, args.lr, args.clip if args.clip > 0 else None)
    for step, value in enumerate(curve):
        if step % args.every == 0 or step == len(curve) - 1:
            print(f"{step}\t{value:.6g}")
    print(f"final/initial\t{curve[-1] / curve[0]:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _read_config(path) -> dict[str, str]:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            values[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="amrgec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="file of key=value option defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="validate an AMR corpus file")
    p.add_argument("input")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("align", help="align graph nodes to '# ::tok' tokens (JSON lines)")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("build", help="build sequence-AMR graphs (JSON lines)")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("mask", help="apply a denoising mask to every graph")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.add_argument("--mask-strategy", choices=[s.replace("_", "-") for s in STRATEGIES], default="node-edge")
    p.add_argument("--mask-rate", type=float, default=0.15)
    p.add_argument("--max-subgraph-size", type=int, default=3)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_mask, needs_seed=True)

    p = sub.add_parser("smatch", help="Smatch scores of two parallel corpora")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_smatch, needs_seed=True)

    p = sub.add_parser("reliability", help="pairs, identical pairs, rate, mean Smatch F1 (TSV)")
    p.add_argument("source")
    p.add_argument("corrected")
    p.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_reliability, needs_seed=True)

    p = sub.add_parser("encode-check", help="finite-difference gradient check of the encoder")
    p.add_argument("--variant", choices=[*VARIANTS, "all"], default="all")
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--epsilon", type=float, default=1e-5)
    p.add_argument("--params", help="check a saved parameter file instead of fresh weights")
    p.add_argument("--save-params", help="write the checked parameters to this file")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_encode_check, needs_seed=True)

    p = sub.add_parser("overfit-demo", help="fit a student encoder to a random teacher")
    p.add_argument("--variant", choices=VARIANTS, default="GCN")
    p.add_argument("--pairs", type=int, default=20)
    p.add_argument("--d", type=int, default=8)
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--lr", type=float, default=DEFAULT_LR)
    p.add_argument("--clip", type=float, default=DEFAULT_CLIP, help="gradient norm limit; 0 disables")
    p.add_argument("--every", type=int, default=50)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_overfit_demo, needs_seed=True)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        try:
            config = _read_config(known.config)
        except (OSError, ValueError) as exc:
            parser.error(str(exc))
        subparsers = parser._subparsers._group_actions[0].choices
        for sp in subparsers.values():
            dests = {a.dest for a in sp._actions}
            sp.set_defaults(**{k: v for k, v in config.items() if k in dests})
    args = parser.parse_args(argv)
    if getattr(args, "needs_seed", False) and args.seed is None:
        parser.error(f"{args.command} requires an explicit --seed")
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ValueError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
