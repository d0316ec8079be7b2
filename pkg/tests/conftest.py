from pathlib import Path

import numpy as np
import pytest

from chromamark.image import load_png

DATA = Path(__file__).parent / "data"
CORPUS = DATA / "corpus"

# filled by test_acceptance, printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def corpus_files():
    return sorted(CORPUS.glob("*.png"))


@pytest.fixture(scope="session")
def corpus():
    files = corpus_files()
    assert len(files) == 50, "desk corpus missing; run scripts/build_corpus.py"
    return [(p.stem, load_png(p)) for p in files]


@pytest.fixture(scope="session")
def face(corpus):
    return corpus[0][1]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def textured(seed=0, size=128):
    """Synthetic colour texture with real chroma detail."""
    r = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size]
    base = 128 + 50 * np.sin(xx / 6.0 + r.uniform(0, 6))[..., None] * np.array([1.0, -0.4, 0.6])
    base = base + 30 * np.cos(yy / 4.0 + r.uniform(0, 6))[..., None] * np.array([-0.5, 0.8, 0.2])
    base = base + r.normal(0, 10, (size, size, 3))
    return np.clip(base, 0, 255).astype(np.uint8)


def periodic_texture(seed=0, size=128, slope=1.2):
    """Grey texture with a 1/f^slope spectrum that tiles seamlessly, so a
    circular shift moves content without creating a border seam."""
    r = np.random.default_rng(seed)
    f = np.fft.fftfreq(size)
    rad = np.hypot(*np.meshgrid(f, f, indexing="ij"))
    spec = (r.normal(size=(size, size)) + 1j * r.normal(size=(size, size))) / np.maximum(rad, 1 / size) ** slope
    x = np.real(np.fft.ifft2(spec))
    return 128 + 40 * x / x.std()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
