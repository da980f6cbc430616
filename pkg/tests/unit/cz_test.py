import math
from unittest.mock import patch

import numpy as np
import pytest

from rhlab.cz import (
    AVERAGING_CONSTANT,
    MEAN_RTOL,
    PROMOTION_BOUND,
    CZBlock,
    CZKernelProfile,
    averaging_defect,
    check_block,
    commutator,
    convolution_block,
    convolution_constant,
    convolve_split,
    covering_scale,
    cz_norm,
    cz_profile,
    measured_gamma,
    profile_norm,
    promotion_factor,
    random_block,
    raw_kernel,
    rho_k_split,
    shift_energy,
    telescope,
    window_decompose,
)
from rhlab.errors import NotMeanFreeError, PreconditionError
from rhlab.kernel import Kernel, convolve
from rhlab.params import ScaleGrid, bump, validate
from rhlab.transform import assemble, block_kernel

DIPOLE = Kernel(-1, [-1.0, 0.0, 1.0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="module")
def params():
    return validate({"alpha": 1.5, "delta": 0.05, "M": 2**12})


def _sum(blocks):
    total = Kernel.zero()
    for block in blocks:
        total = total + block.kernel
    return total


def test__shift_energy__when__dipole():
    assert shift_energy(DIPOLE, 1) == 4.0
    assert shift_energy(DIPOLE, 2) == 6.0


def test__check_block__when__dipole_at_scale_two():
    report = check_block(DIPOLE, 2)

    assert report.D_iii == 2.0
    assert report.D_iv == pytest.approx(math.sqrt(12))
    assert report.worst_h == 2
    assert report.D_min == pytest.approx(math.sqrt(12))
    assert report.mean == 0
    assert report.passed


def test__check_block__when__support_overhangs():
    report = check_block(Kernel.delta(3), 2)

    assert report.overhang == 1.0
    assert not report.pass_ii
    assert not report.pass_i


def test__check_block__when__budget_given():
    report = check_block(DIPOLE, 2, budget=3.0)

    assert report.pass_iii
    assert not report.pass_iv
    assert report.slack_iii == pytest.approx(1.0)
    assert report.slack_iv < 0
    assert not report.passed


def test__check_block__when__scale_not_dyadic():
    with pytest.raises(PreconditionError):
        check_block(DIPOLE, 3)


def test__cz_block__when__kernel_wider_than_scale():
    with pytest.raises(PreconditionError):
        CZBlock.measure(Kernel.delta(5), 4)


def test__random_block__when__normalized(rng):
    for s in (8, 32, 128):
        block = random_block(rng, s)
        report = check_block(block, s)

        assert report.D_min == pytest.approx(1.0)
        assert report.pass_i
        assert report.pass_ii


def test__promotion_factor__when__block_checked_one_scale_up(rng):
    for s in (8, 32, 128):
        assert promotion_factor(random_block(rng, s), s) <= PROMOTION_BOUND * (1 + 1e-12)
    assert promotion_factor(DIPOLE, 2) <= PROMOTION_BOUND * (1 + 1e-12)


def test__measured_gamma__matches_promotion_factor(rng):
    block = random_block(rng, 32)

    gamma = measured_gamma(block, 32)

    assert gamma == pytest.approx(math.log2(promotion_factor(block, 32)) - 0.5)
    assert gamma <= math.log2(PROMOTION_BOUND) - 0.5 + 1e-12


def test__covering_scale():
    assert covering_scale(Kernel(-10, np.ones(21)), 4) == 16
    assert covering_scale(DIPOLE, 4) == 4


def test__telescope__when__total_mass_is_zero():
    inputs = [(Kernel.delta(0, 1.0), 4), (Kernel.delta(3, -1.0), 16)]

    blocks = telescope(inputs, 4)

    assert all(b.mean_free for b in blocks)
    for block in blocks:
        report = check_block(block.kernel, block.scale)
        assert abs(report.mean) <= MEAN_RTOL * block.kernel.l1()
        assert report.pass_ii
    assert _sum(blocks).max_abs_diff(Kernel.delta(0, 1.0) + Kernel.delta(3, -1.0)) <= 1e-12
    assert cz_norm(blocks) > 0


def test__telescope__when__total_mass_is_not_zero():
    blocks = telescope([(Kernel.delta(0, 1.0), 4)], 4)

    tails = [b for b in blocks if not b.mean_free]
    assert len(tails) == 1
    assert tails[0].kernel.mass() == pytest.approx(1.0)
    assert _sum(blocks).max_abs_diff(Kernel.delta(0, 1.0)) <= 1e-12
    with pytest.raises(NotMeanFreeError):
        cz_norm(blocks)
    assert profile_norm(blocks) > 0


def test__telescope__when__tail_scale_given():
    blocks = telescope([(Kernel.delta(0, 1.0), 4)], 4, tail_at=8)

    assert blocks[-1].scale == 32
    assert not blocks[-1].mean_free
    assert all(b.mean_free for b in blocks[:-1])


def test__telescope__when__bad_scales():
    with pytest.raises(PreconditionError):
        telescope([(Kernel.delta(0), 4)], 6)
    with pytest.raises(PreconditionError):
        telescope([(Kernel.delta(0), 4)], 8)
    with pytest.raises(PreconditionError):
        telescope([(Kernel.delta(0), 16)], 4, tail_at=8)
    assert telescope([], 4) == []


def test__telescope__when__random_inputs(rng):
    for _ in range(20):
        inputs = []
        for s in (4, 8, 16, 32):
            x = np.arange(-2 * s, 2 * s + 1)
            inputs.append((Kernel(-2 * s, rng.standard_normal(x.size) / x.size), s))
        total = Kernel.zero()
        for kernel, _ in inputs:
            total = total + kernel

        blocks = telescope(inputs, 4)

        assert _sum(blocks).max_abs_diff(total) <= 1e-12
        for block in blocks:
            report = check_block(block.kernel, block.scale)
            assert report.pass_ii
            if block.mean_free:
                assert report.pass_i


def test__window_decompose__when__pieces_add_back(params):
    K = assemble(params).Hminus
    grid = ScaleGrid((16, 32, 64))

    pieces = window_decompose(K, grid)

    total = Kernel.zero()
    for kernel, s in pieces:
        assert kernel.radius() <= 2 * s
        total = total + kernel
    assert total.max_abs_diff(K) <= 1e-12 * K.sup()


def test__window_decompose__when__single_scale():
    assert window_decompose(DIPOLE, ScaleGrid((2,))) == [(DIPOLE, 2)]
    assert window_decompose(Kernel.zero(), ScaleGrid((2,))) == []


def test__window_decompose__when__grid_too_small():
    with pytest.raises(PreconditionError):
        window_decompose(Kernel.delta(100), ScaleGrid((4, 8)))
    with pytest.raises(PreconditionError):
        window_decompose(DIPOLE, ScaleGrid())


def test__cz_profile__when__minus_part_of_gap_operator(params):
    K = assemble(params).Hminus

    profile = cz_profile(K, 16)

    assert profile.kernel().max_abs_diff(K) <= 1e-12 * K.l1()
    assert profile.tail_mass == 0
    assert all(b.mean_free for b in profile.blocks)
    assert profile.cz_norm == max(check_block(b.kernel, b.scale).D_min for b in profile.blocks)
    assert len(profile.rows()) == len(profile.blocks)


def test__cz_profile__when__zero_kernel():
    profile = cz_profile(Kernel.zero(), 4)

    assert profile.blocks == ()
    assert profile.cz_norm == 0.0


def test__cz_norm__when__block_reports_stored(rng):
    blocks = [CZBlock.measure(random_block(rng, s), s) for s in (8, 16, 32)]

    with patch("rhlab.cz.check_block", wraps=check_block) as checked:
        norm = cz_norm(blocks)
        rows = CZKernelProfile(tuple(blocks), norm).rows()

    assert checked.call_count == 0
    assert norm == max(b.D for b in blocks)
    assert [r["s"] for r in rows] == [8, 16, 32]


def test__averaging_defect__when__blocks_below_scale(rng):
    blocks = [CZBlock.measure(random_block(rng, s), s) for s in (4, 8)]

    assert averaging_defect(blocks, 8) <= 1e-12


def test__averaging_defect__when__blocks_above_scale(rng):
    blocks = [CZBlock.measure(random_block(rng, s), s) for s in (4, 16, 32, 64)]

    for s in (4, 8):
        assert averaging_defect(blocks, s) <= AVERAGING_CONSTANT


def test__convolution_constant__when__random_kernels(rng):
    for _ in range(5):
        K = random_block(rng, 16) + random_block(rng, 64)
        L = random_block(rng, 32) + random_block(rng, 256)

        assert convolution_constant(K, L, 16) <= 200


def test__raw_kernel__when__small_radius():
    K = raw_kernel(1.5, 10)

    assert K(1) == 1.0
    assert K(2) == pytest.approx(1 / 2)
    assert K(5) == pytest.approx(1 / 3)
    assert K(8) == pytest.approx(1 / 4)
    assert K.is_odd()
    assert K.radius() <= 10


def test__commutator__when__not_gap_mode():
    full = validate({"alpha": 1.5, "delta": 0.05, "M": 2**10, "mode": "full"})

    with pytest.raises(PreconditionError):
        commutator(1024, full)


def test__commutator__when__scale_outside_plus_band(params):
    with pytest.raises(PreconditionError):
        commutator(64, params)


@pytest.mark.parametrize("source", ["block", "raw"])
def test__commutator__when__minus_part_is_point_mass(params, source):
    s = params.plus_scales.top

    C = commutator(s, params, Hminus=Kernel.delta(0, 1.0), source=source)

    assert C.kernel.sup() <= 1e-15
    assert C.norm_sq <= 1e-30


def test__commutator__matches_pointwise_sum(params):
    s = params.plus_scales.top
    Hs = block_kernel(s, params)
    Hm = assemble(params).Hminus
    lo, hi = Hs.lo + Hm.lo, Hs.hi + Hm.hi
    x = np.arange(lo, hi + 1)
    phi = bump("wtilde", s, x)
    expected = np.zeros(x.size)
    for t in Hm.points[Hm.values != 0]:
        expected += Hm(t) * Hs(x - t) * (phi - bump("wtilde", s, x - t))

    C = commutator(s, params)

    assert np.max(np.abs(C.kernel.dense(lo, hi) - expected)) <= 1e-12 * Hs.sup() * Hm.l1()
    assert C.norm_sq == pytest.approx(float(np.sum(expected**2)), rel=1e-9, abs=1e-30)


def test__commutator__when__source_unknown(params):
    with pytest.raises(PreconditionError, match="unknown commutator source"):
        commutator(params.plus_scales.top, params, source="kernel")


def test__convolve_split__when__gap_around_zero(params):
    H1 = block_kernel(512, params)
    H2 = block_kernel(4096, params)

    product = convolve_split(H1, H2)

    assert product.window(-1024, 1024).is_zero
    assert product.allclose(convolve(H1, H2), atol=1e-12)


def test__rho_k_split__when__scales_far_apart(params):
    split = rho_k_split(512, 4096, params)

    assert split.k.is_zero
    assert split.diag == 0.0
    assert split.window == int(8 * 4096 ** (1 - 1 / 1.5 + 0.05))


def test__rho_k_split__when__same_scale(params):
    H = block_kernel(256, params)

    split = rho_k_split(256, 256, params)
    rho, k, diag = split

    assert diag == pytest.approx(-H.l2() ** 2, rel=1e-12)
    assert rho(0) == 0
    assert k(0) == 0
    assert (rho + k + Kernel.delta(0, diag)).allclose(convolve(H, H), atol=1e-12)
    assert set(split.row()) >= {"s1", "s2", "diag", "rho_sup_scaled", "rho_holder"}


def test__rho_k_split__when__first_scale_in_gap_mode(params):
    first = params.first_scale

    split = rho_k_split(first, first, params)

    assert split.diag == pytest.approx(-assemble(params).blocks[first].l2() ** 2, rel=1e-12)
    assert split.diag == pytest.approx(-block_kernel(first, params).l2() ** 2, rel=1e-12)


def test__rho_k_split__when__first_scale_in_full_mode():
    full = validate({"alpha": 1.5, "delta": 0.05, "M": 2**12, "mode": "full"})
    first = full.first_scale

    split = rho_k_split(first, first, full)

    assert split.diag == pytest.approx(-block_kernel(first, full, first_scale=True).l2() ** 2, rel=1e-12)


def test__rho_k_split__diag_slope_over_scales(params):
    scales = [s for s in ScaleGrid.between(params.first_scale, params.M)]

    diags = [rho_k_split(s, s, params).diag for s in scales]

    slope = np.polyfit(np.log2(scales), np.log2(np.abs(diags)), 1)[0]
    assert abs(slope + 1 / params.alpha) <= 0.15


def test__rho_k_split__when__scales_out_of_range(params):
    with pytest.raises(PreconditionError):
        rho_k_split(512, 256, params)
    with pytest.raises(PreconditionError):
        rho_k_split(32, 256, params)
    with pytest.raises(PreconditionError):
        rho_k_split(96, 256, params)


def test__convolution_block__when__checked_at_four_times_scale(params):
    report = convolution_block(1024, params)

    assert report.scale == 4096
    assert report.pass_ii
