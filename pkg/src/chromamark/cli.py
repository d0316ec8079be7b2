"""``chromamark`` command line: embed, trace, detect, bench, selftest.

Exit codes: 0 ok, 1 self-test failure, 2 usage error, 3 file I/O error
(including unreadable images), 4 capacity error, 5 invalid parameter value.

Every flag may also come from a ``--config`` file in INI form.  Keys use the
long flag names; ``[common]`` applies to all commands and a section named
after a command applies to that command only.  Command-line flags win.
"""
from __future__ import annotations

import argparse
import configparser
import sys
import time
from pathlib import Path

import numpy as np

from . import bench, decode, dtcwt, embed, noise, objectives
from .image import ImageFormatError, load_png, psnr, save_png, ssim

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO, EXIT_CAPACITY, EXIT_VALUE = 0, 1, 2, 3, 4, 5


class UsageError(Exception):
    pass


def _key(text: str) -> int:
    try:
        return embed.parse_key(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _level(text: str) -> int:
    if text not in ("1", "2"):
        raise argparse.ArgumentTypeError("level must be 1 or 2")
    return int(text)


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def _decode_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--in", dest="input", required=True, help="input PNG")
    p.add_argument("--key", type=_key, required=True, help="16 hex digits")
    p.add_argument("--length", type=int, default=None, help="message length (default: --ref length or 30)")
    p.add_argument("--level", type=_level, default=2)
    p.add_argument("--scores", type=_bool, nargs="?", const=True, default=False,
                   help="also print per-bit soft scores")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chromamark", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="INI file with default flag values")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="watermark one image")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--key", type=_key, required=True)
    p.add_argument("--msg", required=True, help="bit string, or hex with 0x prefix")
    p.add_argument("--length", type=int, default=None, help="bits to embed when --msg is hex")
    p.add_argument("--alpha", type=float, default=embed.DEFAULT_ALPHA)
    p.add_argument("--level", type=_level, default=2)
    p.add_argument("--mask", type=_bool, nargs="?", const=True, default=False,
                   help="weight the pattern by the texture mask")

    p = sub.add_parser("trace", help="robust read-out")
    _decode_flags(p)
    p.add_argument("--ref", default=None, help="reference message for BER")

    p = sub.add_parser("detect", help="semi-robust read-out and verdict")
    _decode_flags(p)
    p.add_argument("--ref", required=True)
    p.add_argument("--tau", type=float, default=decode.DEFAULT_TAU)

    p = sub.add_parser("bench", help="corpus benchmark to CSV")
    p.add_argument("--corpus", required=True)
    p.add_argument("--size", type=int, choices=(128, 256), default=128)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--distortions", default=None,
                   help="';'-separated common distortions, e.g. 'jpeg:q=50;blur:sigma=1'")
    p.add_argument("--malicious", default=None, help="';'-separated malicious distortions ('none' for none)")
    p.add_argument("--key", type=_key, default=embed.format_key(bench.DEFAULT_KEY))
    p.add_argument("--alpha", type=float, default=embed.DEFAULT_ALPHA)
    p.add_argument("--level", type=_level, default=2)
    p.add_argument("--length", type=int, default=None)
    p.add_argument("--mask", type=_bool, nargs="?", const=True, default=False)
    p.add_argument("--tau", type=float, default=decode.DEFAULT_TAU)
    p.add_argument("--single-key", type=_bool, nargs="?", const=True, default=False,
                   help="use --key for every image instead of key XOR hash(image id)")
    p.add_argument("--workers", type=int, default=None,
                   help=f"worker processes (default: ${bench.WORKERS_ENV} or CPU count)")
    p.add_argument("--limit", type=int, default=None, help="only the first N images")
    p.add_argument("--quiet", type=_bool, nargs="?", const=True, default=False)

    p = sub.add_parser("selftest", help="fast invariant checks")
    p.add_argument("--perturb", default=None, help=argparse.SUPPRESS)  # NAME:INDEX:DELTA
    return ap


def _apply_config(ap: argparse.ArgumentParser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    path = Path(known.config)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    cp = configparser.ConfigParser()
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise UsageError(f"bad config file: {exc}") from None
    subs = next(a for a in ap._actions if isinstance(a, argparse._SubParsersAction))
    for name, sp in subs.choices.items():
        values = {}
        for section in ("common", name):
            if cp.has_section(section):
                values.update(cp.items(section))
        actions = {a.dest: a for a in sp._actions}
        actions.update({o.lstrip("-").replace("-", "_"): a for a in sp._actions for o in a.option_strings})
        defaults = {}
        for k, v in values.items():
            act = actions.get(k.replace("-", "_"))
            if act is None:
                if cp.has_section(name) and cp.has_option(name, k) and not cp.has_option("common", k):
                    raise UsageError(f"config: unknown option {k!r} for {name}")
                continue
            try:
                defaults[act.dest] = act.type(v) if act.type else v
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"config: bad value for {k}: {exc}") from None
            act.required = False
        sp.set_defaults(**defaults)


def _message_length(args, ref) -> int:
    if args.length is not None:
        return args.length
    return ref.size if ref is not None else 30


def _parse_msg(text, length):
    try:
        return embed.parse_message(text, length)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _print_result(res: decode.ExtractionResult, ref, show_scores: bool) -> None:
    print(f"BITS {embed.bits_to_str(res.bits)}")
    if ref is not None:
        print(f"BER {res.ber_vs(ref):.6f}")
    if show_scores:
        print("SCORES " + " ".join(f"{s:.4f}" for s in res.soft_scores))


def cmd_embed(args) -> int:
    bits = _parse_msg(args.msg, args.length)
    cfg = embed.EmbedConfig(alpha=args.alpha, level=args.level, message_length=bits.size,
                            mask_enabled=args.mask)
    img = load_png(args.input)
    res = embed.embed_image_report(img, bits, args.key, cfg)
    save_png(res.image, args.out)
    print(f"BITS {embed.bits_to_str(bits)}")
    print(f"PSNR {psnr(img, res.image):.4f}")
    print(f"SSIM {ssim(img, res.image):.6f}")
    print(f"CLAMPED {res.clamped}")
    return EXIT_OK


def _decode_cmd(args, fn):
    ref = _parse_msg(args.ref, args.length) if args.ref is not None else None
    l = _message_length(args, ref)
    cfg = decode.DecodeConfig(level=args.level, message_length=l,
                              tau=getattr(args, "tau", decode.DEFAULT_TAU))
    img = load_png(args.input)
    return fn(img, args.key, cfg), ref, cfg


def cmd_trace(args) -> int:
    res, ref, _ = _decode_cmd(args, decode.trace)
    _print_result(res, ref, args.scores)
    return EXIT_OK


def cmd_detect(args) -> int:
    if not 0 < args.tau < 0.5:
        raise UsageError("tau must be in (0, 0.5)")
    res, ref, cfg = _decode_cmd(args, decode.detect)
    _print_result(res, ref, args.scores)
    print(f"VERDICT {decode.decide(res, ref, cfg.tau).value}")
    return EXIT_OK


def _specs(text, default):
    if text is None:
        return default
    if text.strip().lower() == "none":
        return []
    try:
        return noise.parse_list(text)
    except noise.DistortionError as exc:
        raise UsageError(str(exc)) from None


def cmd_bench(args) -> int:
    cfg = bench.BenchConfig(
        corpus_dir=args.corpus, image_size=args.size, message_length=args.length, key=args.key,
        alpha=args.alpha, level=args.level, mask=args.mask,
        common=[s for s in _specs(args.distortions, noise.common_pool()) if not s.malicious],
        malicious=[s for s in _specs(args.malicious, noise.malicious_pool())],
        seed=args.seed, tau=args.tau, single_key=args.single_key, limit=args.limit)
    extra = [s for s in _specs(args.distortions, []) if s.malicious]
    if extra:
        cfg = bench.BenchConfig(**{**cfg.__dict__, "malicious": cfg.malicious + tuple(extra)})
    out = Path(args.out)
    if not out.parent.exists():
        raise FileNotFoundError(f"output directory does not exist: {out.parent}")
    t0 = time.time()
    rows = bench.run(cfg, args.workers)
    bench.write_report(rows, out)
    if not args.quiet:
        print(bench.summary(rows))
        print(f"wrote {out} ({len(rows)} rows, {time.time() - t0:.1f}s)")
    return EXIT_OK


# -- self test -------------------------------------------------------------

def _check_reconstruction(bank) -> tuple[bool, str]:
    rng = np.random.default_rng(1)
    worst = 0.0
    for size in (64, 128):
        for _ in range(5):
            p = rng.normal(0, 50, (size, size))
            worst = max(worst, float(np.max(np.abs(dtcwt.inverse(dtcwt.forward(p, bank=bank), bank=bank) - p))))
    return worst <= 1e-6, f"max error {worst:.2e}"


def _check_ber() -> tuple[bool, str]:
    rng = np.random.default_rng(2)
    for _ in range(500):
        n = int(rng.integers(1, 200))
        a, b = rng.integers(0, 2, n), rng.integers(0, 2, n)
        if objectives.ber(a, b) != sum(int(x != y) for x, y in zip(a, b)) / n:
            return False, f"mismatch at length {n}"
    return True, "500 random pairs"


def _check_carriers() -> tuple[bool, str]:
    a = embed.derive_carriers(0x1234, 30, (32, 32), 1)
    b = embed.derive_carriers(0x1234, 30, (32, 32), 1)
    if not np.array_equal(a, b):
        return False, "not deterministic"
    overlap = np.count_nonzero(a, axis=0).max()
    if overlap > 1:
        return False, "supports overlap"
    return True, "deterministic, disjoint"


def _check_roundtrip() -> tuple[bool, str]:
    rng = np.random.default_rng(3)
    yy, xx = np.mgrid[0:128, 0:128]
    base = 128 + 60 * np.sin(xx / 7.0)[..., None] * np.array([1.0, -0.5, 0.3]) + rng.normal(0, 8, (128, 128, 3))
    img = np.clip(base + 20 * np.cos(yy / 5.0)[..., None], 0, 255).astype(np.uint8)
    bits = embed.random_message(30, 4)
    w = embed.embed_image(img, bits, 0xABCDEF0123456789)
    b = decode.trace(w, 0xABCDEF0123456789).ber_vs(bits)
    return b == 0.0, f"BER {b:.4f}"


def selftest(bank=dtcwt.DEFAULT_BANK) -> list[tuple[str, bool, str]]:
    out = []
    for name, fn in (("dtcwt reconstruction", lambda: _check_reconstruction(bank)),
                     ("ber oracle", _check_ber),
                     ("carrier determinism", _check_carriers),
                     ("embed/trace round trip", _check_roundtrip)):
        ok, detail = fn()
        out.append((name, ok, detail))
    return out


def cmd_selftest(args) -> int:
    bank = dtcwt.DEFAULT_BANK
    if args.perturb:
        try:
            name, idx, delta = args.perturb.split(":")
            bank = bank.perturbed(name, int(idx), float(delta))
        except (ValueError, AttributeError, IndexError) as exc:
            raise UsageError(f"bad --perturb value: {exc}") from None
    t0 = time.time()
    results = selftest(bank)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    print(f"{sum(ok for _, ok, _ in results)}/{len(results)} passed in {time.time() - t0:.1f}s")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_FAIL


COMMANDS = {"embed": cmd_embed, "trace": cmd_trace, "detect": cmd_detect,
            "bench": cmd_bench, "selftest": cmd_selftest}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        _apply_config(ap, argv)
    except UsageError as exc:
        print(f"chromamark: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"chromamark: error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"chromamark: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except embed.CapacityError as exc:
        print(f"chromamark: capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ImageFormatError, FileNotFoundError, PermissionError, IsADirectoryError, bench.BenchError) as exc:
        print(f"chromamark: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"chromamark: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"chromamark: error: {exc}", file=sys.stderr)
        return EXIT_VALUE


if __name__ == "__main__":
    sys.exit(main())
