import numpy as np
import pytest

from rhlab.cz import check_block, commutator_sweep, cz_profile, rho_k_split, telescope
from rhlab.kernel import Kernel
from rhlab.params import ScaleGrid, bump, psi_mass
from rhlab.weaktype import cz_decompose, mixed_signal


@pytest.mark.integration
def test__commutator_sweep(commutator_params):
    sweep = commutator_sweep(commutator_params)

    assert [c.s for c in sweep] == [8192, 16384]
    for c in sweep:
        assert abs(c.kernel(0)) <= 1e-12
    assert sweep[0].norm_sq > sweep[1].norm_sq
    scaled = [c.scaled for c in sweep]
    assert max(scaled) / min(scaled) <= 10


@pytest.mark.integration
def test__cz_profile__when__large_minus_part(large_assembly):
    K = large_assembly.Hminus

    profile = cz_profile(K, 128)

    assert profile.kernel().max_abs_diff(K) <= 1e-12 * K.l1()
    assert np.isfinite(profile.cz_norm)
    for block in profile.blocks:
        report = check_block(block.kernel, block.scale)
        assert report.pass_ii
        if block.mean_free:
            assert report.pass_i


@pytest.mark.integration
@pytest.mark.parametrize("s1", [128, 256, 1024, 2048])
def test__rho_k_split__when__scales_separated(large_params, s1):
    split = rho_k_split(s1, 2**14, large_params)

    assert split.k.is_zero
    assert split.rho.radius() <= 4 * 2**14


def _psi_tilde(s):
    x = np.arange(-2 * s, 2 * s + 1)
    return Kernel(-2 * s, bump("w", s, x) / psi_mass(s))


def _size_at(kernel, scale):
    return check_block(kernel, scale).D_min


def _telescope_budget(inputs, J, scale):
    """Triangle-inequality bound on D at ``scale`` for any block the chain can produce."""
    top = max(s for _, s in inputs)
    budget = sum(_size_at(kernel, scale) for kernel, _ in inputs)
    for t in ScaleGrid.between(J, top):
        partial = sum(kernel.mass() for kernel, s in inputs if s <= t)
        budget += 2 * abs(partial) * _size_at(_psi_tilde(t), scale)
    return budget


@pytest.mark.integration
def test__telescope__when__many_random_inputs():
    rng = np.random.default_rng(2024)
    cases = 0
    while cases < 500:
        inputs = []
        for s in (4, 8, 16, 32, 64, 128):
            if rng.random() < 0.3:
                continue
            n = 4 * s + 1
            inputs.append((Kernel(-2 * s, rng.standard_normal(n) / n), s))
        if not inputs:
            continue
        cases += 1
        total = Kernel.zero()
        for kernel, _ in inputs:
            total = total + kernel

        blocks = telescope(inputs, 4)

        assert sum((b.kernel for b in blocks), Kernel.zero()).max_abs_diff(total) <= 1e-12
        assert [b.scale for b in blocks] == sorted({b.scale for b in blocks})
        for block in blocks:
            budget = _telescope_budget(inputs, 4, block.scale) * (1 + 1e-9)
            report = check_block(block.kernel, block.scale, budget=budget)
            assert report.pass_ii
            assert report.pass_iii
            assert report.pass_iv
            if block.mean_free:
                assert report.pass_i


@pytest.mark.integration
def test__cz_decompose__when__many_cases(large_params):
    rng = np.random.default_rng(99)
    for case in range(1000):
        f = mixed_signal(rng, 512)
        lam = float(rng.choice([0.25, 1.0, 4.0, 16.0]))

        dec = cz_decompose(f, lam, 256, large_params)

        assert dec.reconstruct().max_abs_diff(f) <= 1e-12 * f.sup()
        assert dec.g.sup() <= lam
        assert dec.parent_mass() <= 2 * f.l1() / lam


@pytest.mark.integration
def test__rho_k_split__diag_slope__when__large_M(large_params):
    scales = list(ScaleGrid.between(large_params.first_scale, large_params.M))

    diags = [rho_k_split(s, s, large_params).diag for s in scales]

    slope = np.polyfit(np.log2(scales), np.log2(np.abs(diags)), 1)[0]
    assert abs(slope + 1 / large_params.alpha) <= 0.15
