import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chromamark import objectives as ob
from chromamark.objectives import LossWeights


def bits(n):
    return st.lists(st.integers(0, 1), min_size=n, max_size=n)


def test_ber_examples():
    a = np.zeros(30, np.uint8)
    assert ob.ber(a, a) == 0.0
    assert ob.ber(a, 1 - a) == 1.0
    b = a.copy()
    b[::2] = 1
    assert ob.ber(a, b) == 0.5


def test_ber_errors():
    with pytest.raises(ValueError):
        ob.ber([0, 1], [0, 1, 1])
    with pytest.raises(ValueError):
        ob.ber([], [])
    with pytest.raises(ValueError):
        ob.ber([0, 2], [0, 1])


@settings(max_examples=200)
@given(st.integers(1, 64).flatmap(lambda n: st.tuples(bits(n), bits(n), bits(n))))
def test_ber_is_a_normalised_metric(t):
    a, b, c = (np.array(x, np.uint8) for x in t)
    assert ob.ber(a, b) == ob.ber(b, a)
    assert 0.0 <= ob.ber(a, b) <= 1.0
    assert ob.ber(a, c) <= ob.ber(a, b) + ob.ber(b, c) + 1e-12


def test_soft_score_maps():
    s = np.array([-50.0, -1.0, 0.0, 1.0, 50.0])
    u = ob.to_unit(s)
    assert u[2] == 0.5 and u[0] == pytest.approx(0.0) and u[-1] == pytest.approx(1.0)
    assert u[3] == pytest.approx(1 / (1 + np.exp(-1)))
    assert np.allclose(ob.to_signed(s), 2 * u - 1)
    assert np.isfinite(ob.to_unit([1e6, -1e6])).all()


def test_embedding_loss_cases():
    u = np.array([[1 + 1j, 2], [0, -1j]])
    assert ob.embedding_loss(u, u) == 0.0
    v = u + np.array([[1 + 1j, 0], [0, 2j]])
    # hand sum: (1 + 0 + 0 + 0) real + (1 + 0 + 0 + 4) imag over 8 entries
    assert ob.embedding_loss(u, v) == pytest.approx(6 / 8)
    assert ob.embedding_loss(u, u + 2 * (v - u)) == pytest.approx(4 * ob.embedding_loss(u, v))
    with pytest.raises(ValueError):
        ob.embedding_loss(u, u[:1])


def test_tracing_loss_cases():
    w = np.array([1, 0, 1, 1])
    assert ob.tracing_loss(w, w.astype(float)) == 0.0
    assert ob.tracing_loss(w, 1.0 - w) == 1.0
    soft = np.array([0.9, 0.3, 1.7, -0.2])      # clamps to .9 .3 1 0
    assert ob.tracing_loss(w, soft) == pytest.approx((0.01 + 0.09 + 0 + 1) / 4)


def test_detection_loss_cases():
    w = np.array([1, 0, 0, 1])
    assert ob.detection_losses(w, w.astype(float), np.zeros(4)) == (0.0, 0.0)
    l1, l2 = ob.detection_losses(w, [0.5, 0.5, 0.0, 1.0], [0.5, -0.5, 1.0, 2.0])
    assert l1 == pytest.approx((0.25 + 0.25) / 4)
    assert l2 == pytest.approx((0.25 + 0.25 + 1 + 1) / 4)


def test_total_loss_examples():
    assert ob.total_loss(0, 0, 0, 0, 0) == 0.0
    assert ob.total_loss(1, 1, 1, 1, 1) == pytest.approx(31.01, abs=1e-9)
    zero = LossWeights(0, 0, 0, 0, 0)
    assert ob.total_loss(3, 1, 4, 1, 5, zero) == 0.0
    with pytest.raises(ValueError):
        LossWeights(gnn=-1)


@settings(max_examples=100)
@given(st.lists(st.floats(0, 1e3), min_size=5, max_size=5), st.integers(0, 4), st.floats(0, 1e3))
def test_total_loss_is_linear_per_component(parts, i, delta):
    moved = list(parts)
    moved[i] += delta
    w = np.array([0.01, 1, 10, 10, 10])
    assert ob.total_loss(*moved) - ob.total_loss(*parts) == pytest.approx(w[i] * delta, rel=1e-9, abs=1e-6)


def test_loss_report():
    rep = ob.loss_report(1, 2, 3, 4, 5)
    assert rep.l_total == pytest.approx(0.01 + 2 + 30 + 40 + 50, abs=1e-9)
    assert set(rep.as_dict()) == {"l_gnn", "l_en", "l_tr", "l_de1", "l_de2", "l_total"}
    with pytest.raises(ValueError):
        ob.loss_report(-1, 0, 0, 0, 0)


@settings(max_examples=100)
@given(st.integers(1, 40).flatmap(lambda n: st.tuples(
    bits(n), st.lists(st.floats(-20, 20), min_size=n, max_size=n))))
def test_losses_are_non_negative(t):
    w, s = np.array(t[0]), np.array(t[1])
    assert ob.tracing_loss(w, ob.to_unit(s)) >= 0
    l1, l2 = ob.detection_losses(w, ob.to_unit(s), ob.to_signed(s))
    assert l1 >= 0 and l2 >= 0
