"""Corpus benchmark: embed, distort, decode and score every image.

One CSV row per (image, distortion) plus a ``__mean__`` row per distortion.
Rows are ordered by distortion list order, then image id, so the file is
byte-identical for a given corpus, config and seed whatever the worker count.
"""
from __future__ import annotations

import csv
import hashlib
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from . import decode, dtcwt, embed, graph, noise, objectives
from .image import load_png, psnr, rgb_to_yuv, ssim

WORKERS_ENV = "CHROMAMARK_WORKERS"
MEAN_ID = "__mean__"
DEFAULT_KEY = 0x5EED5EED5EED5EED
LENGTH_FOR_SIZE = {128: 30, 256: 128}

COLUMNS = [
    "image", "distortion", "malicious", "tracer_ber", "detector_ber", "psnr", "ssim",
    "psnr_noised", "sc_consistency", "l_gnn", "l_en", "l_tr", "l_de1", "l_de2", "l_total",
    "forged", "decision",
]
NUMERIC = COLUMNS[3:16]


class BenchError(RuntimeError):
    pass


@dataclass(frozen=True)
class BenchConfig:
    corpus_dir: Path
    image_size: int = 128
    message_length: int | None = None
    key: int = DEFAULT_KEY
    alpha: float = embed.DEFAULT_ALPHA
    level: int = 2
    mask: bool = False
    common: tuple = field(default_factory=lambda: tuple(noise.common_pool()))
    malicious: tuple = field(default_factory=lambda: tuple(noise.malicious_pool()))
    seed: int = 0
    tau: float = decode.DEFAULT_TAU
    single_key: bool = False
    limit: int | None = None

    def __post_init__(self):
        if self.image_size not in LENGTH_FOR_SIZE:
            raise ValueError(f"image_size must be one of {sorted(LENGTH_FOR_SIZE)}")
        if self.message_length is None:
            object.__setattr__(self, "message_length", LENGTH_FOR_SIZE[self.image_size])
        object.__setattr__(self, "corpus_dir", Path(self.corpus_dir))
        object.__setattr__(self, "common", tuple(self.common))
        object.__setattr__(self, "malicious", tuple(self.malicious))
        if not self.common and not self.malicious:
            raise ValueError("no distortions selected")

    @property
    def distortions(self) -> tuple:
        return self.common + self.malicious

    def embed_config(self) -> embed.EmbedConfig:
        return embed.EmbedConfig(alpha=self.alpha, level=self.level,
                                 message_length=self.message_length, mask_enabled=self.mask)

    def decode_config(self) -> decode.DecodeConfig:
        return decode.DecodeConfig(level=self.level, message_length=self.message_length, tau=self.tau)


def id_hash(image_id: str) -> int:
    return int.from_bytes(hashlib.blake2b(image_id.encode(), digest_size=8).digest(), "big")


def image_key(key: int, image_id: str, single: bool = False) -> int:
    return key if single else key ^ id_hash(image_id)


def image_message(seed: int, image_id: str, length: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, id_hash(image_id)]))
    return rng.integers(0, 2, length).astype(np.uint8)


def distortion_seed(seed: int, image_id: str, index: int) -> int:
    ss = np.random.SeedSequence([seed, id_hash(image_id), index, 0xD157])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def list_corpus(corpus_dir, limit: int | None = None) -> list[Path]:
    d = Path(corpus_dir)
    if not d.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {d}")
    files = sorted(p for p in d.iterdir() if p.suffix.lower() == ".png" and p.is_file())
    if limit is not None:
        files = files[:limit]
    if not files:
        raise BenchError(f"no PNG images in {d}")
    return files


def load_sized(path: Path, size: int) -> np.ndarray:
    img = load_png(path)
    if img.shape[:2] != (size, size):
        img = np.asarray(Image.fromarray(img).resize((size, size), Image.LANCZOS), dtype=np.uint8)
    return img


def _subbands(img, cfg: BenchConfig) -> np.ndarray:
    dec = dtcwt.forward(rgb_to_yuv(img).u, levels=2)
    return np.stack([dtcwt.subband(dec, cfg.level, d) for d in cfg.embed_config().embed_subbands])


def run_image(path: Path, cfg: BenchConfig) -> list[dict]:
    """All rows for one image (no aggregate rows)."""
    image_id = path.stem
    cover = load_sized(path, cfg.image_size)
    key = image_key(cfg.key, image_id, cfg.single_key)
    bits = image_message(cfg.seed, image_id, cfg.message_length)
    marked = embed.embed_image(cover, bits, key, cfg.embed_config())
    dcfg = cfg.decode_config()

    base = {
        "image": image_id,
        "psnr": psnr(cover, marked),
        "ssim": ssim(cover, marked),
        "sc_consistency": graph.consistency(cover, marked),
        "l_en": objectives.embedding_loss(_subbands(cover, cfg), _subbands(marked, cfg)),
    }
    rows = []
    for i, spec in enumerate(cfg.distortions):
        spec = spec.with_seed(distortion_seed(cfg.seed, image_id, i))
        noised = noise.apply(marked, spec, original=cover)
        tr = decode.trace(noised, key, dcfg)
        de = decode.detect(noised, key, dcfg)
        l_tr = objectives.tracing_loss(bits, objectives.to_unit(tr.soft_scores))
        if spec.malicious:
            l_de1, l_de2 = 0.0, objectives.detection_losses(
                bits, objectives.to_unit(de.soft_scores), objectives.to_signed(de.soft_scores))[1]
        else:
            l_de1, l_de2 = objectives.detection_losses(bits, objectives.to_unit(de.soft_scores),
                                                       np.zeros(len(bits)))[0], 0.0
        rep = objectives.loss_report(base["sc_consistency"], base["l_en"], l_tr, l_de1, l_de2)
        verdict = decode.decide(de, bits, cfg.tau)
        rows.append({
            **base,
            "distortion": spec.label,
            "malicious": int(spec.malicious),
            "tracer_ber": tr.ber_vs(bits),
            "detector_ber": de.ber_vs(bits),
            "psnr_noised": psnr(marked, noised),
            "l_gnn": rep.l_gnn, "l_tr": rep.l_tr, "l_de1": rep.l_de1, "l_de2": rep.l_de2,
            "l_total": rep.l_total,
            "forged": int(verdict is decode.Verdict.FORGED),
            "decision": verdict.value,
        })
    return rows


def aggregate(rows: list[dict], labels) -> list[dict]:
    out = []
    for label in labels:
        member = [r for r in rows if r["distortion"] == label]
        if not member:
            continue
        agg = {"image": MEAN_ID, "distortion": label, "malicious": member[0]["malicious"], "decision": ""}
        for c in NUMERIC:
            agg[c] = float(np.mean([float(r[c]) for r in member]))
        out.append(agg)
    return out


def worker_count(requested: int | None = None) -> int:
    if requested is not None:
        n = requested
    else:
        env = os.environ.get(WORKERS_ENV)
        if env:
            try:
                n = int(env)
            except ValueError:
                raise BenchError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
        else:
            n = os.cpu_count() or 1
    if n < 1:
        raise BenchError("worker count must be >= 1")
    return n


def run(cfg: BenchConfig, workers: int | None = None) -> list[dict]:
    """Per-image rows (sorted by distortion order then image id) followed by mean rows."""
    files = list_corpus(cfg.corpus_dir, cfg.limit)
    n = min(worker_count(workers), len(files))
    if n == 1:
        per_image = [run_image(p, cfg) for p in files]
    else:
        with ProcessPoolExecutor(max_workers=n) as ex:
            per_image = list(ex.map(run_image, files, [cfg] * len(files)))
    labels = [s.label for s in cfg.distortions]
    flat = [r for rows in per_image for r in rows]
    ordered = sorted(flat, key=lambda r: (labels.index(r["distortion"]), r["image"]))
    return ordered + aggregate(ordered, dict.fromkeys(labels))


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.6f}" if abs(v) >= 1e-4 or v == 0 else f"{v:.6e}"


def to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in COLUMNS])
    return buf.getvalue()


def write_report(rows: list[dict], out) -> None:
    out = Path(out)
    if out.parent and not out.parent.exists():
        raise BenchError(f"output directory does not exist: {out.parent}")
    out.write_text(to_csv(rows))


def summary(rows: list[dict]) -> str:
    """Human-readable table of the mean rows."""
    lines = [f"{'distortion':40s} {'tracer':>8s} {'detector':>9s} {'forged':>7s}"]
    for r in rows:
        if r["image"] == MEAN_ID:
            lines.append(f"{r['distortion']:40s} {100 * r['tracer_ber']:7.3f}% {100 * r['detector_ber']:8.3f}% "
                         f"{100 * r['forged']:6.1f}%")
    return "\n".join(lines)
