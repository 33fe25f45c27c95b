import math

import numpy as np
import pytest

from ctxlab.errors import InvalidArgumentError
from ctxlab.rope import FrequencyBasis, apply_rope, make_basis, rope_score, rotate_batch


def test_make_basis_small_cases():
    assert make_basis(4, 10000).to_list() == pytest.approx([1.0, 0.01], rel=1e-15)
    assert make_basis(2, 10000).to_list() == [1.0]


def test_make_basis_default_base():
    basis = make_basis(8, 1e7)
    expected = [1.0, 1e7 ** -0.25, 1e7 ** -0.5, 1e7 ** -0.75]
    np.testing.assert_allclose(basis.values, expected, rtol=1e-14)
    assert np.all(np.diff(basis.values) < 0)


@pytest.mark.parametrize("d", [0, -2, 3])
def test_make_basis_rejects_odd_or_non_positive_dims(d):
    with pytest.raises(InvalidArgumentError):
        make_basis(d)


def test_frequency_basis_rejects_non_positive_entries():
    with pytest.raises(InvalidArgumentError):
        FrequencyBasis(np.array([1.0, 0.0]))
    with pytest.raises(InvalidArgumentError):
        FrequencyBasis(np.array([1.0, np.inf]))


def test_frequency_basis_is_read_only():
    basis = make_basis(4)
    with pytest.raises(ValueError):
        basis.values[0] = 2.0


def test_apply_rope_identity_at_zero(rng):
    x = rng.normal(size=8)
    np.testing.assert_array_equal(apply_rope(x, 0.0, make_basis(8)), x)


def test_apply_rope_single_pair():
    out = apply_rope([1.0, 0.0], 2.0, FrequencyBasis(np.array([1.0])))
    np.testing.assert_allclose(out, [math.cos(2.0), math.sin(2.0)], atol=1e-15)
    assert out[0] == pytest.approx(-0.416147, abs=1e-6)
    assert out[1] == pytest.approx(0.909297, abs=1e-6)


def test_apply_rope_zero_vector():
    np.testing.assert_array_equal(apply_rope(np.zeros(8), 123.5, make_basis(8)), np.zeros(8))


def test_apply_rope_preserves_pair_norms(rng):
    basis = make_basis(16)
    for _ in range(50):
        x = rng.normal(size=16)
        out = apply_rope(x, rng.uniform(0, 5000), basis)
        np.testing.assert_allclose(np.hypot(out[0::2], out[1::2]), np.hypot(x[0::2], x[1::2]), atol=1e-12)


def test_apply_rope_dimension_mismatch():
    with pytest.raises(InvalidArgumentError):
        apply_rope(np.ones(6), 1.0, make_basis(8))


def test_apply_rope_rejects_negative_position():
    with pytest.raises(InvalidArgumentError):
        apply_rope(np.ones(4), -1.0, make_basis(4))


def test_rotate_batch_matches_apply_rope(rng):
    basis = make_basis(8)
    x = rng.normal(size=(5, 8))
    positions = np.array([1.0, 2.5, 3.0, 10.0, 40.25])
    out = rotate_batch(x, positions, basis)
    for j in range(5):
        np.testing.assert_allclose(out[j], apply_rope(x[j], positions[j], basis), atol=1e-14)


def test_rope_score_examples():
    theta = FrequencyBasis(np.array([1.0]))
    assert rope_score([1.0, 0.0], [1.0, 0.0], 5.0, 5.0, theta) == pytest.approx(1.0, abs=1e-15)
    assert rope_score([1.0, 0.0], [0.0, 1.0], 0.0, 0.0, theta) == 0.0


def test_rope_score_depends_on_offset_only(rng):
    basis = make_basis(8)
    q, k = rng.normal(size=8), rng.normal(size=8)
    assert rope_score(q, k, 3, 1, basis) == pytest.approx(rope_score(q, k, 10, 8, basis), abs=1e-12)
    for _ in range(1000):
        m_q, m_k, delta = rng.uniform(0, 100), rng.uniform(0, 100), rng.uniform(0, 1e4)
        assert abs(rope_score(q, k, m_q + delta, m_k + delta, basis) - rope_score(q, k, m_q, m_k, basis)) <= 1e-9


def test_rope_score_shape_mismatch():
    with pytest.raises(InvalidArgumentError):
        rope_score(np.ones(4), np.ones(2), 0, 0, make_basis(4))
