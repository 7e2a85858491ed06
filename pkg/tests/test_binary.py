import numpy as np
import pytest

from waring.binary import BinaryForm, binary_decompose, hankel_slice
from waring.core import expand_power_sum, parse_poly


def _reexpand_err(dec, f):
    g = expand_power_sum(dec, 2, dec.degree)
    return (g - f).coeff_norm() / f.coeff_norm()


def test_moments_divide_by_binomials():
    bf = BinaryForm(4, np.array([1, 8, 12, 8, 1], dtype=complex))
    assert np.allclose(bf.moments(), [1, 2, 2, 2, 1])


def test_hankel_slice_example():
    bf = BinaryForm(3, np.array([1, 0, 0, 1], dtype=complex))
    h = hankel_slice(bf, 2)
    assert h.shape == (2, 3)
    assert np.allclose(h, [[1, 0, 0], [0, 0, 1]])
    assert hankel_slice(bf, 3).shape == (1, 4)


def test_hankel_slice_bounds():
    bf = BinaryForm(3, np.ones(4, dtype=complex))
    with pytest.raises(ValueError):
        hankel_slice(bf, 0)
    with pytest.raises(ValueError):
        hankel_slice(bf, 4)


def test_fermat_cubic():
    dec = binary_decompose(parse_poly("x0^3 + x1^3"))
    assert dec.rank == 2
    assert dec.residual < 1e-12
    got = sorted(
        (np.argmax(np.abs(m)), w * m[np.argmax(np.abs(m))] ** 3)
        for w, m in dec.terms
    )
    for axis, (pos, val) in zip([0, 1], got):
        assert pos == axis
        assert abs(val - 1) < 1e-10


def test_product_of_lines():
    dec = binary_decompose(parse_poly("x0^2 x1 + x0 x1^2"))
    assert dec.rank == 2
    assert dec.residual < 1e-10


def test_degenerate_cubic_needs_three():
    f = parse_poly("x0^2 x1")
    dec = binary_decompose(f)
    assert dec.rank == 3
    assert _reexpand_err(dec, f) < 1e-10


def test_planted_instances():
    rng = np.random.default_rng(7)
    worst = 0.0
    for trial in range(60):
        d = int(rng.integers(4, 11))
        rmax = (d + 2) // 2 - 1
        r = int(rng.integers(1, rmax + 1))
        pts = []
        while len(pts) < r:
            v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            v /= np.linalg.norm(v)
            if all(abs(v[0] * q[1] - v[1] * q[0]) > 0.05 for q in pts):
                pts.append(v)
        wts = rng.standard_normal(r) + 1j * rng.standard_normal(r)
        f = expand_power_sum(list(zip(wts, pts)), 2, d)
        dec = binary_decompose(f, rng_seed=trial)
        assert dec.rank == r, (trial, d, r, dec.rank)
        err = _reexpand_err(dec, f)
        worst = max(worst, err)
        assert err < 1e-8, (trial, d, r, err)
    assert worst < 1e-8


def test_direction_at_infinity():
    pts = [
        np.array([1.0, 0.0]),
        np.array([0.3 + 0.4j, 1.0]) / np.linalg.norm([0.5, 1.0]),
    ]
    f = expand_power_sum([(2.0, pts[0]), (1.5 - 1j, pts[1])], 2, 5)
    dec = binary_decompose(f)
    assert dec.rank == 2
    assert any(abs(m[1]) < 1e-10 for _, m in dec.terms)


def test_binary_form_round_trip():
    f = parse_poly("2 x0^4 - 3 x0^2 x1^2 + x1^4")
    assert (BinaryForm.from_poly(f).to_poly() - f).is_zero


def test_binary_form_validates_length():
    with pytest.raises(ValueError):
        BinaryForm(3, np.ones(3, dtype=complex))
