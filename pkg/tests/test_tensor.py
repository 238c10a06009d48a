import numpy as np
import pytest

from deltacnn import ShapeError, Tensor, abs_diff, from_array, new_zeros


def test_new_zeros_basic():
    t = new_zeros((1, 2, 2))
    assert t.shape == (1, 2, 2)
    assert list(t.flat) == [0.0, 0.0, 0.0, 0.0]


def test_new_zeros_size_arithmetic():
    t = new_zeros((3, 4, 4))
    assert t.flat.size == 48
    assert not t.flat.any()


def test_new_zeros_input_plane():
    t = new_zeros((1, 64, 64))
    assert t.flat.size == 4096


@pytest.mark.parametrize("shape", [(0, 2, 2), (1, 0, 2), (1, 2, 0)])
def test_new_zeros_rejects_zero_dims(shape):
    with pytest.raises(ShapeError):
        new_zeros(shape)


def test_layout_is_c_outermost_row_major():
    # Encode each index as a distinct value and confirm flat order is
    # lexicographic in (c, y, x).
    t = new_zeros((2, 3, 4))
    for c in range(2):
        for y in range(3):
            for x in range(4):
                t.set(c, y, x, c * 100 + y * 10 + x)
    expected = [c * 100 + y * 10 + x for c in range(2) for y in range(3) for x in range(4)]
    assert list(t.flat) == expected


def test_set_get_round_trip():
    t = new_zeros((2, 3, 3))
    t.set(1, 2, 0, 0.25)
    assert t.get(1, 2, 0) == 0.25


def test_get_on_fresh_zeros():
    assert new_zeros((2, 2, 2)).get(1, 1, 1) == 0.0


def test_layout_formula_flat_index():
    t = new_zeros((1, 4, 4))
    t.set(0, 1, 2, 7.0)
    assert t.flat[1 * 4 + 2] == 7.0
    assert np.count_nonzero(t.flat) == 1


@pytest.mark.parametrize("idx", [(2, 0, 0), (0, 3, 0), (0, 0, 3), (-1, 0, 0), (0, -1, 0)])
def test_index_out_of_bounds(idx):
    t = new_zeros((2, 3, 3))
    with pytest.raises(IndexError):
        t.get(*idx)
    with pytest.raises(IndexError):
        t.set(*idx, 1.0)


def test_abs_diff_self_is_zero():
    rng = np.random.default_rng(7)
    a = from_array(rng.normal(size=(3, 5, 5)))
    d = abs_diff(a, a)
    assert not d.data.any()


def test_abs_diff_arithmetic():
    a = from_array([1.0, 0.5], shape=(1, 1, 2))
    b = from_array([0.25, 0.5], shape=(1, 1, 2))
    assert list(abs_diff(a, b).flat) == [0.75, 0.0]


def test_abs_diff_region_against_loop_oracle():
    # Two frames differing exactly in a 28x28 patch; expectation computed
    # by an elementwise loop.
    rng = np.random.default_rng(3)
    a = from_array(rng.uniform(0, 1, (1, 64, 64)))
    b = a.copy()
    patch = rng.uniform(0.5, 1.5, (28, 28)).astype(np.float32)
    b.data[0, 10:38, 20:48] += patch

    d = abs_diff(a, b)
    for y in range(64):
        for x in range(64):
            expect = abs(float(a.data[0, y, x]) - float(b.data[0, y, x]))
            assert d.get(0, y, x) == np.float32(expect)
    nz_y, nz_x = np.nonzero(d.data[0])
    assert nz_y.min() >= 10 and nz_y.max() < 38
    assert nz_x.min() >= 20 and nz_x.max() < 48


def test_abs_diff_commutes():
    rng = np.random.default_rng(11)
    a = from_array(rng.normal(size=(2, 6, 6)))
    b = from_array(rng.normal(size=(2, 6, 6)))
    assert abs_diff(a, b) == abs_diff(b, a)


def test_abs_diff_shape_mismatch():
    with pytest.raises(ShapeError):
        abs_diff(new_zeros((1, 2, 2)), new_zeros((1, 2, 3)))


def test_tensor_requires_3d():
    with pytest.raises(ShapeError):
        Tensor(np.zeros((4, 4), dtype=np.float32))
