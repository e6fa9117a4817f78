import numpy as np
import pytest
from hypothesis import given, strategies as st

from nlps.errors import ConfigError, InitializationError
from nlps.grid import Field, State, make_grid, random_ternary_init, sample_field, wrap_index


def test_make_grid_spacing():
    assert make_grid(128, 1.0).dx == 0.0078125
    g = make_grid(4, 2.0)
    assert g.dx == 0.5
    assert g.cell_area == 0.25


@pytest.mark.parametrize("n,length", [(3, 1.0), (0, 1.0), (8, 0.0), (8, -1.0)])
def test_make_grid_rejects(n, length):
    with pytest.raises(ConfigError):
        make_grid(n, length)


def test_wrap_index_examples():
    assert wrap_index(-1, 8) == 7
    assert wrap_index(8, 8) == 0
    assert wrap_index(3, 8) == 3


@pytest.mark.parametrize("n", [4, 7, 8, 13])
def test_wrap_index_periodic_sweep(n):
    for i in range(-3 * n, 3 * n + 1):
        w = wrap_index(i, n)
        assert 0 <= w < n
        assert wrap_index(i + n, n) == w


def test_field_layout_row_major():
    g = make_grid(4, 1.0)
    f = Field(g, np.arange(16.0))
    # flat index j*n + i, i along x
    assert f.data[1, 2] == 1 * 4 + 2
    assert np.array_equal(f.flat(), np.arange(16.0))
    with pytest.raises(ValueError):
        f.data[0, 0] = 1.0


def test_sample_field_constant_and_midpoints():
    g = make_grid(4, 1.0)
    assert np.all(sample_field(lambda x, y: 0.7 + 0 * x, g).data == 0.7)
    f = sample_field(lambda x, y: np.sin(2 * np.pi * x), g)
    xs = np.array([0.125, 0.375, 0.625, 0.875])
    for j in range(4):
        np.testing.assert_array_equal(f.data[j], np.sin(2 * np.pi * xs))


def test_sample_field_scalar_callable():
    import math

    g = make_grid(4, 1.0)
    f = sample_field(lambda x, y: math.cos(x) + y, g)
    assert f.data[2, 1] == pytest.approx(math.cos(0.375) + 0.625)


def test_sample_field_nan_names_cell():
    g = make_grid(4, 1.0)

    def f(x, y):
        out = np.zeros_like(x)
        out[2, 1] = np.nan
        return out

    with pytest.raises(InitializationError, match=r"i=1, j=2"):
        sample_field(f, g)


def test_random_init_extremes():
    g = make_grid(16, 1.0)
    s = random_ternary_init(1.0, 123, g)
    assert np.all(s.m.data == 0) and np.all(s.phi.data == 0)
    s = random_ternary_init(0.0, 123, g)
    assert np.all(s.phi.data == 1)
    assert set(np.unique(s.m.data)) <= {-1.0, 1.0}
    assert s.time == 0 and s.step == 0


def test_random_init_solvent_fraction():
    g = make_grid(128, 1.0)
    s = random_ternary_init(0.8, 42, g)
    frac = float(np.mean(s.phi.data == 0))
    # binomial sd = sqrt(.8*.2/16384) ~ 0.0031, so 0.02 is > 6 sd
    assert abs(frac - 0.8) <= 0.02


@pytest.mark.parametrize("s", [-0.1, 1.5])
def test_random_init_rejects_ratio(s):
    with pytest.raises(ConfigError):
        random_ternary_init(s, 0, make_grid(8, 1.0))


@given(st.floats(0, 1), st.integers(0, 2**64 - 1), st.integers(4, 24))
def test_random_init_properties(s, seed, n):
    g = make_grid(n, 1.0)
    a = random_ternary_init(s, seed, g)
    b = random_ternary_init(s, seed, g)
    assert a == b
    m, phi = a.m.data, a.phi.data
    assert np.array_equal(np.abs(m), phi)
    assert set(np.unique(phi)) <= {0.0, 1.0}
    assert np.all((0 <= np.abs(m)) & (np.abs(m) <= phi) & (phi <= 1))


def test_state_requires_matching_grids():
    with pytest.raises(ValueError):
        State(Field.zeros(make_grid(4, 1.0)), Field.zeros(make_grid(8, 1.0)))
