import math

import numpy as np
import pytest

import rhlab.kernel as kernel_module
from rhlab.errors import PreconditionError, ResourceError
from rhlab.kernel import (
    Kernel,
    apply,
    convolve,
    convolve_at,
    inner,
    next_pow2,
    op_norm,
    refine_extremum,
    symbol,
    symbol_at,
)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def test__kernel__when__zero_ends_are_trimmed():
    K = Kernel(-2, [0.0, 0.0, 1.0, 2.0, 0.0])

    assert K.lo == 0
    assert K.hi == 1
    assert len(K) == 2
    assert list(K.points) == [0, 1]


def test__kernel__when__all_values_zero():
    K = Kernel(5, [0.0, 0.0])

    assert K.is_zero
    assert K == Kernel.zero()
    assert K.radius() == 0
    assert K.l1() == 0


def test__kernel__when__mutated():
    K = Kernel.delta(3, 2.0)

    with pytest.raises(AttributeError):
        K.base = 0
    with pytest.raises(ValueError):
        K.values[0] = 1.0


def test__kernel_evaluation__when__inside_and_outside_support():
    K = Kernel(-1, [1.0, 2.0, 3.0])

    assert K(0) == 2.0
    assert K(5) == 0.0
    assert list(K(np.array([-2, -1, 1]))) == [0.0, 1.0, 3.0]
    assert list(K.dense(-2, 2)) == [0.0, 1.0, 2.0, 3.0, 0.0]


def test__kernel_arithmetic():
    K = Kernel(0, [1.0, 2.0])
    L = Kernel(1, [1.0, -2.0])

    assert K + L == Kernel(0, [1.0, 3.0, -2.0])
    assert K - K == Kernel.zero()
    assert -K == Kernel(0, [-1.0, -2.0])
    assert 2 * K == Kernel(0, [2.0, 4.0])
    assert K @ L == convolve(K, L)


def test__kernel_norms():
    K = Kernel(-1, [3.0, 0.0, -4.0])

    assert K.mass() == -1.0
    assert K.l1() == 7.0
    assert K.l2() == 5.0
    assert K.sup() == 4.0
    assert K.radius() == 1


def test__kernel_mass__when__complex_values():
    K = Kernel(0, [1 + 2j, 3 - 1j])

    assert K.mass() == 4 + 1j
    assert not K.is_real
    assert K.real() == Kernel(0, [1.0, 3.0])


def test__is_odd__when__antisymmetric():
    K = Kernel(-2, [-1.0, -2.0, 0.0, 2.0, 1.0])

    assert K.is_odd()
    assert K.reflect() == -K
    assert not Kernel(-1, [1.0, 0.0, 1.0]).is_odd()


def test__window():
    K = Kernel(-3, np.arange(1.0, 8.0))

    assert K.window(-1, 1) == Kernel(-1, [3.0, 4.0, 5.0])
    assert K.window(10, 20).is_zero


def test__multiply__when__cutoff_given():
    K = Kernel(-2, np.ones(5))

    assert K.multiply(lambda x: (np.abs(x) <= 1).astype(float)) == Kernel(-1, np.ones(3))


def test__from_points():
    K = Kernel.from_points({-2: 1.0, 3: 2.0})

    assert K.lo == -2
    assert K.hi == 3
    assert K(3) == 2.0
    assert Kernel.from_points({}) == Kernel.zero()


def test__convolve__when__deltas():
    assert convolve(Kernel.delta(3, 2.0), Kernel.delta(-5, 1.5)) == Kernel.delta(-2, 3.0)
    assert convolve(Kernel.zero(), Kernel.delta(0)).is_zero


def test__convolve__when__fft_and_direct_agree(rng):
    K = Kernel(-40, rng.standard_normal(100))
    L = Kernel(7, rng.standard_normal(80))

    direct = convolve(K, L, method="direct")
    fast = convolve(K, L, method="fft")

    assert direct.lo == K.lo + L.lo
    assert direct.allclose(fast, atol=1e-12)
    assert np.allclose(direct.values, np.convolve(K.values, L.values))


def test__convolve__when__unknown_method():
    with pytest.raises(PreconditionError):
        convolve(Kernel.delta(0), Kernel.delta(0), method="karatsuba")


def test__convolve__when__support_overflows(monkeypatch):
    monkeypatch.setattr(kernel_module, "MAX_SUPPORT_POINTS", 10)

    with pytest.raises(ResourceError):
        convolve(Kernel(0, np.ones(6)), Kernel(0, np.ones(6)))


def test__convolve_at__when__compared_with_full_convolution(rng):
    K = Kernel(-30, rng.standard_normal(61))
    L = Kernel(-5, rng.standard_normal(90))
    full = convolve(K, L)

    for x in range(full.lo - 2, full.hi + 3, 7):
        assert math.isclose(convolve_at(K, L, x), full(x), rel_tol=1e-9, abs_tol=1e-12)


def test__convolve_at__when__supports_do_not_meet():
    K = Kernel(0, [1.0, 2.0])

    assert convolve_at(K, K, 10) == 0.0


def test__apply__when__plain_sequence():
    K = Kernel.delta(1, 2.0)

    assert apply(K, [1.0, 2.0], base=5) == Kernel(6, [2.0, 4.0])


def test__symbol__when__shifted_delta():
    grid = symbol(Kernel.delta(1), 8)

    expected = np.exp(-2j * np.pi * np.arange(8) / 8)
    assert np.allclose(grid.values, expected, atol=1e-15)
    assert math.isclose(grid.at(0.25).imag, -1.0)
    assert grid.max_modulus() == pytest.approx(1.0)


def test__symbol__when__N_invalid():
    K = Kernel(0, np.ones(5))

    with pytest.raises(PreconditionError, match="power of two"):
        symbol(K, 24)
    with pytest.raises(PreconditionError):
        symbol(K, 16)


def test__symbol_at__when__matching_grid(rng):
    K = Kernel(-20, rng.standard_normal(41))
    grid = symbol(K, 256)

    for k in (0, 3, 64, 128, 200):
        assert abs(symbol_at(K, k / 256) - grid.values[k]) < 1e-10


def test__op_norm():
    assert op_norm(Kernel.zero()) == 0.0
    assert op_norm(Kernel.delta(5, -2.5)) == pytest.approx(2.5)
    assert op_norm(Kernel(0, [1.0, 1.0])) == pytest.approx(2.0)
    assert op_norm(Kernel(-1, [-1.0, 0.0, 1.0])) == pytest.approx(2.0)


def test__refine_extremum__when__peak_between_grid_points():
    N = 16
    grid = np.cos(2 * np.pi * (np.arange(N) / N - 0.3))

    xi, value = refine_extremum(lambda t: math.cos(2 * math.pi * (t - 0.3)), grid, N, maximize=True)

    assert abs(xi - 0.3) < 1e-6
    assert value >= grid.max()


def test__inner():
    K = Kernel(0, [1.0, 2.0, 3.0])
    L = Kernel(1, [4.0, 5.0])

    assert inner(K, L) == 2.0 * 4.0 + 3.0 * 5.0
    assert inner(K, Kernel.delta(10)) == 0.0


def test__next_pow2():
    assert next_pow2(1) == 1
    assert next_pow2(5) == 8
    assert next_pow2(64) == 64


def test__save_and_load__when__text_and_binary(tmp_path):
    K = Kernel(-3, [0.5, -1.25, 1e-17, 3.0])
    Z = Kernel(2, [1 + 1j, -2j])

    assert Kernel.load(K.save(tmp_path / "K.txt")) == K
    assert Kernel.load(K.save(tmp_path / "K.bin")) == K
    assert Kernel.load(Z.save(tmp_path / "Z.txt")) == Z
    assert Kernel.load(Z.save(tmp_path / "Z.bin")) == Z
    assert (tmp_path / "K.txt").read_text().startswith("# base=-3 len=4")
