import math

import pytest

from rhlab.kernel import Kernel, convolve, inner, op_norm
from rhlab.resolvent import fit_expansion, neumann_kernel, neumann_tail_bound, resolvent_kernel
from rhlab.transform import assemble


def _identity_error(lam, H, R):
    return (convolve(Kernel.delta(0, lam) + H, R) - Kernel.delta(0, 1.0)).sup()


@pytest.mark.integration
@pytest.mark.parametrize("lam", [1.0, 2.0, complex(1.0, 0.5)])
def test__resolvent_kernel__when__large_M(large_params, large_assembly, lam):
    R = resolvent_kernel(lam, large_params)

    assert _identity_error(lam, large_assembly.H, R) <= 1e-8


@pytest.mark.integration
def test__neumann_kernel__when__far_from_spectrum(neumann_params):
    norm = op_norm(assemble(neumann_params).H)
    lam = 4 * norm

    R = resolvent_kernel(lam, neumann_params)
    N = neumann_kernel(lam, neumann_params, order=8)

    assert (R - N).sup() <= neumann_tail_bound(lam, norm, 8) + 1e-9


@pytest.mark.integration
def test__fit_expansion__when__large_M(large_params, large_assembly):
    R = resolvent_kernel(1.0, large_params)

    expansion = fit_expansion(R, large_params)

    H, H2 = large_assembly.H, large_assembly.H2
    assert abs(expansion.residual(0)) <= 1e-9
    assert abs(inner(expansion.residual, H2)) <= 1e-9 * H2.l2() * R.l2()
    assert expansion.point is not None
    assert math.isfinite(expansion.residual_profile.cz_norm)
    assert expansion.fit_gram_cond < 1e12
