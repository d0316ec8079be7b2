"""Build the 128x128 desk corpus of face crops used by the acceptance suite.

Sources are public-domain portraits that ship inside common Python packages:
skimage's ``astronaut`` (NASA), matplotlib's ``grace_hopper.jpg`` (US Navy)
and the official White House portraits in the face_recognition test images.

    python scripts/build_corpus.py SRC_DIR tests/data/corpus
"""
import sys
from pathlib import Path

import numpy as np
from PIL import Image

# file -> (center x, center y, head size) in source pixels, picked by eye
FACES = {
    "astronaut.png": (222, 118, 110),
    "biden.jpg": (573, 335, 230),
    "grace_hopper.jpg": (266, 195, 230),
    "obama.jpg": (492, 215, 215),
    "obama2.jpg": (348, 405, 245),
    "obama3.jpg": (746, 440, 240),
    "obama_partial_face.jpg": (95, 215, 215),
    "obama_partial_face2.jpg": (447, 215, 215),
}
ZOOMS = (1.25, 1.5, 1.8, 2.2, 2.7, 3.3)
OFFSETS = ((0.0, 0.0), (-0.12, 0.05), (0.12, -0.05), (0.0, 0.15))


def crops(im: Image.Image, cx, cy, size, n, rng):
    out = []
    for k in range(n):
        zoom = ZOOMS[k % len(ZOOMS)]
        dx, dy = OFFSETS[(k // len(ZOOMS) + k) % len(OFFSETS)]
        side = min(size * zoom, im.width, im.height)
        x0 = cx - side / 2 + dx * side
        y0 = cy - side / 2 + dy * side
        x0 = float(np.clip(x0, 0, im.width - side))
        y0 = float(np.clip(y0, 0, im.height - side))
        tile = im.resize((128, 128), Image.LANCZOS, box=(x0, y0, x0 + side, y0 + side))
        if rng.random() < 0.5:
            tile = tile.transpose(Image.FLIP_LEFT_RIGHT)
        out.append(tile)
    return out


def main(src: str, dst: str, total: int = 50) -> None:
    rng = np.random.default_rng(2024)
    dst_dir = Path(dst)
    dst_dir.mkdir(parents=True, exist_ok=True)
    names = sorted(FACES)
    per = [total // len(names) + (i < total % len(names)) for i in range(len(names))]
    idx = 0
    for name, n in zip(names, per):
        im = Image.open(Path(src) / name).convert("RGB")
        for tile in crops(im, *FACES[name], n, rng):
            tile.save(dst_dir / f"face_{idx:03d}.png")
            idx += 1
    print(f"wrote {idx} images to {dst_dir}")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
