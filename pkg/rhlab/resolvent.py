from __future__ import annotations

import dataclasses
import itertools
import logging
import math
from collections.abc import Iterable
from numbers import Number

import numpy as np
import scipy.fft
import scipy.linalg

from rhlab.cz import CZBlock, CZKernelProfile, cz_profile, profile_norm
from rhlab.errors import AliasingError, FitError, MarginError, PreconditionError, RhlabError
from rhlab.kernel import Kernel, convolve, convolve_at, inner, next_pow2, op_norm, refine_extremum, symbol, symbol_at
from rhlab.params import Params
from rhlab.table import SweepTable
from rhlab.transform import Assembly, assemble

logger = logging.getLogger(__name__)

MARGIN_OVERSAMPLING = 8
RESOLVENT_OVERSAMPLING = 16
ALIASING_RTOL = 1e-9
WINDOW_RTOL = 1e-13
DEFAULT_MARGIN_TOL = 1e-3
GRAM_COND_MAX = 1e12
BASIS_NAMES = ("delta0", "H", "H^2")

ASYMPTOTICS_COLUMNS = (
    "M",
    "lambda_prime_re",
    "lambda_prime_im",
    "beta_re",
    "beta_im",
    "gamma_re",
    "gamma_im",
    "cz_norm_residual",
    "margin",
    "comb1",
    "comb2",
    "comb3",
    "h2_at_zero",
    "status",
)


def _operator(params: Params | None, H: Kernel | None) -> Kernel:
    if H is not None:
        return H
    if params is None:
        raise PreconditionError("either params or an explicit H kernel is needed")
    return assemble(params).H


def resolvent_set_margin(
    lam: Number,
    params: Params | None = None,
    N: int | None = None,
    beta: Number = 1.0,
    H: Kernel | None = None,
) -> float:
    """min over the circle of |lam + beta * symbol(H)|, so that the resolvent norm is 1/margin."""
    H = _operator(params, H)
    if H.is_zero:
        return abs(lam)
    if N is None:
        N = next_pow2(MARGIN_OVERSAMPLING * len(H))
    if N < MARGIN_OVERSAMPLING * len(H):
        raise PreconditionError(f"margin needs N >= {MARGIN_OVERSAMPLING}*len(H) = {MARGIN_OVERSAMPLING * len(H)}")
    grid = np.abs(lam + beta * symbol(H, N).values)
    _, margin = refine_extremum(lambda xi: abs(lam + beta * symbol_at(H, xi)), grid, N, maximize=False)
    return margin


@dataclasses.dataclass(frozen=True)
class Resolvent:
    kernel: Kernel
    N: int
    aliasing_error: float
    truncated_mass: float
    margin: float


def _invert(lam: Number, beta: Number, H: Kernel, N: int, real: bool) -> np.ndarray:
    r = scipy.fft.ifft(1.0 / (lam + beta * symbol(H, N).values))
    r = scipy.fft.fftshift(r)
    return r.real if real else r


def resolve(
    lam: Number,
    H: Kernel,
    N: int,
    beta: Number = 1.0,
    nb_retries: int = 3,
    margin: float = math.nan,
) -> Resolvent:
    real = H.is_real and not isinstance(lam, complex) and not isinstance(beta, complex)
    coarse = _invert(lam, beta, H, N, real)
    fine = _invert(lam, beta, H, 2 * N, real)
    # the N-periodic window is [-N/2, N/2); in the 2N array it sits at offset N/2
    error = float(np.max(np.abs(fine[N // 2 : N // 2 + N] - coarse)))
    peak = float(np.max(np.abs(fine)))

    if error > ALIASING_RTOL * peak:
        if nb_retries == 0:
            logger.error("resolvent aliasing check failed at N=%d: diff %.3g vs peak %.3g", N, error, peak)
            raise AliasingError(
                f"resolvent changes by {error:.3g} (peak {peak:.3g}) between N={N} and 2N; try N >= {4 * N}"
            )
        logger.info("aliasing at N=%d (diff %.3g), doubling", N, error)
        return resolve(lam, H, 2 * N, beta=beta, nb_retries=nb_retries - 1, margin=margin)

    keep = np.flatnonzero(np.abs(fine) >= WINDOW_RTOL * peak)
    lo, hi = keep[0], keep[-1]
    truncated = math.fsum(np.abs(fine[:lo])) + math.fsum(np.abs(fine[hi + 1 :]))
    if truncated:
        logger.debug("resolvent window trimmed, truncated l1 mass %.3g", truncated)
    kernel = Kernel(int(lo) - N, fine[lo : hi + 1])
    return Resolvent(kernel, 2 * N, error, truncated, margin)


def resolvent_kernel(
    lam: Number,
    params: Params | None = None,
    N: int | None = None,
    beta: Number = 1.0,
    H: Kernel | None = None,
    tol: float = DEFAULT_MARGIN_TOL,
    nb_retries: int = 3,
    full_output: bool = False,
) -> Kernel | Resolvent:
    """Kernel of (lam I + beta H)^-1 by symbol inversion."""
    H = _operator(params, H)
    if H.is_zero or beta == 0:
        result = Resolvent(Kernel.delta(0, 1 / lam), 1, 0.0, 0.0, abs(lam))
        return result if full_output else result.kernel
    margin = resolvent_set_margin(lam, N=None, beta=beta, H=H)
    if margin < tol:
        logger.error("resolvent margin %.3g below tolerance %.3g", margin, tol)
        raise MarginError(f"lam={lam} is within {margin:.3g} of the spectrum (tolerance {tol})")
    if N is None:
        N = next_pow2(RESOLVENT_OVERSAMPLING * len(H))
    result = resolve(lam, H, N, beta=beta, nb_retries=nb_retries, margin=margin)
    return result if full_output else result.kernel


def neumann_tail_bound(lam: Number, norm: float, order: int) -> float:
    q = norm / abs(lam)
    if q >= 1:
        return math.inf
    return q ** (order + 1) / (1 - q) / abs(lam)


def neumann_series(lam: Number, H: Kernel, order: int, beta: Number = 1.0) -> Kernel:
    total = Kernel.delta(0, 1 / lam)
    power = Kernel.delta(0, 1.0)
    for n in range(1, order + 1):
        power = convolve(power, H)
        total = total + ((-beta) ** n / lam ** (n + 1)) * power
    return total


def neumann_kernel(
    lam: Number,
    params: Params | None = None,
    order: int = 8,
    beta: Number = 1.0,
    H: Kernel | None = None,
) -> Kernel:
    H = _operator(params, H)
    norm = abs(beta) * op_norm(H)
    if norm >= abs(lam):
        logger.warning("Neumann series outside its convergence region: |beta| op_norm(H)=%.4g >= |lam|=%.4g",
                       norm, abs(lam))
    return neumann_series(lam, H, order, beta)


@dataclasses.dataclass(frozen=True)
class PointExtract:
    lambda_prime: Number
    beta: Number
    gamma: Number


@dataclasses.dataclass(frozen=True)
class ResolventExpansion:
    lambda_prime: Number
    beta: Number
    gamma: Number
    residual: Kernel
    fit_gram_cond: float
    residual_profile: CZKernelProfile
    point: PointExtract | None = None

    @property
    def coefficients(self) -> tuple[Number, Number, Number]:
        return self.lambda_prime, self.beta, self.gamma

    def fitted(self, H: Kernel, H2: Kernel) -> Kernel:
        return Kernel.delta(0, self.lambda_prime) + self.beta * H + self.gamma * H2

    def reconstruct(self, H: Kernel, H2: Kernel) -> Kernel:
        return self.fitted(H, H2) + self.residual


def gram_matrix(H: Kernel, H2: Kernel) -> np.ndarray:
    """Gram matrix of (delta0, H, H^2); H is odd and H^2 even, so H is orthogonal to both."""
    h2_0 = convolve_at(H, H, 0)
    return np.array(
        [
            [1.0, 0.0, h2_0],
            [0.0, inner(H, H), 0.0],
            [h2_0, 0.0, inner(H2, H2)],
        ]
    )


def _collinear_pair(G: np.ndarray) -> tuple[str, str]:
    best, pair = -1.0, (BASIS_NAMES[0], BASIS_NAMES[1])
    for i, j in itertools.combinations(range(3), 2):
        denom = math.sqrt(G[i, i] * G[j, j])
        cos = abs(G[i, j]) / denom if denom else 1.0
        if cos > best:
            best, pair = cos, (BASIS_NAMES[i], BASIS_NAMES[j])
    return pair


def point_extract(R: Kernel, assembly: Assembly) -> PointExtract:
    """Coefficients from support disjointness instead of least squares (gap mode)."""
    H, H2, X = assembly.H, assembly.H2, assembly.cross
    hh = inner(H, H)
    beta = inner(R, H) / hh if hh else 0.0
    xx = inner(H2, X)
    gamma = inner(R, X) / xx if xx else 0.0
    lambda_prime = R(0) - gamma * convolve_at(H, H, 0)
    return PointExtract(lambda_prime, beta, gamma)


def fit_expansion(
    R: Kernel,
    params: Params,
    H: Kernel | None = None,
    H2: Kernel | None = None,
    omega: float | None = None,
    with_point: bool | None = None,
) -> ResolventExpansion:
    """Least-squares fit of R against delta0, H and H^2 in l2, plus the canonical CZ profile of what remains."""
    omega = params.omega if omega is None else omega
    assembly = None
    if H is None:
        assembly = assemble(params)
        H, H2 = assembly.H, assembly.H2
    elif H2 is None:
        H2 = convolve(H, H)

    G = gram_matrix(H, H2)
    cond = float(np.linalg.cond(G)) if np.all(np.diag(G) > 0) else math.inf
    if cond > GRAM_COND_MAX:
        a, b = _collinear_pair(G)
        logger.error("Gram matrix condition %.3g exceeds %.0e", cond, GRAM_COND_MAX)
        raise FitError(f"basis elements {a} and {b} are nearly collinear (condition {cond:.3g})")

    rhs = np.array([R(0), inner(R, H), inner(R, H2)])
    coefficients = scipy.linalg.solve(G, rhs, assume_a="sym")
    lambda_prime, beta, gamma = (c.item() if np.iscomplexobj(coefficients) else float(c) for c in coefficients)

    residual = R - (Kernel.delta(0, lambda_prime) + beta * H + gamma * H2)
    profile = cz_profile(residual, params.first_scale, omega)

    if with_point is None:
        with_point = assembly is not None and params.mode == "gap"
    point = point_extract(R, assembly) if with_point and assembly is not None else None
    return ResolventExpansion(lambda_prime, beta, gamma, residual, cond, profile, point)


@dataclasses.dataclass(frozen=True)
class AlgebraElement:
    """One representation lam delta0 + beta H + gamma H^2 + K of an element of the algebra."""

    lam: Number
    beta: Number
    gamma: Number
    K: Kernel
    profile: CZKernelProfile
    a_norm: float
    diagnostics: dict = dataclasses.field(default_factory=dict, compare=False)

    @classmethod
    def build(
        cls,
        lam: Number = 0.0,
        beta: Number = 0.0,
        gamma: Number = 0.0,
        blocks: Iterable[CZBlock] = (),
    ) -> AlgebraElement:
        blocks = tuple(blocks)
        K = Kernel.zero()
        for block in blocks:
            K = K + block.kernel
        profile = CZKernelProfile(blocks, profile_norm(blocks) if blocks else 0.0)
        return cls(lam, beta, gamma, K, profile, abs(lam) + abs(beta) + abs(gamma) + profile.cz_norm)

    @classmethod
    def from_kernel(
        cls,
        lam: Number,
        beta: Number,
        gamma: Number,
        K: Kernel,
        params: Params,
    ) -> AlgebraElement:
        profile = cz_profile(K, params.first_scale, params.omega)
        return cls(lam, beta, gamma, K, profile, abs(lam) + abs(beta) + abs(gamma) + profile.cz_norm)

    @classmethod
    def canonical(
        cls,
        lam: Number,
        beta: Number,
        gamma: Number,
        K: Kernel,
        params: Params,
    ) -> AlgebraElement:
        """The element whose CZ part is orthogonal to delta0, H and H^2."""
        assembly = assemble(params)
        full = Kernel.delta(0, lam) + beta * assembly.H + gamma * assembly.H2 + K
        return cls.from_expansion(fit_expansion(full, params, H=assembly.H, H2=assembly.H2))

    @classmethod
    def from_expansion(cls, expansion: ResolventExpansion) -> AlgebraElement:
        e = expansion
        norm = abs(e.lambda_prime) + abs(e.beta) + abs(e.gamma) + e.residual_profile.cz_norm
        return cls(e.lambda_prime, e.beta, e.gamma, e.residual, e.residual_profile, norm)

    def to_kernel(self, H: Kernel, H2: Kernel) -> Kernel:
        return Kernel.delta(0, self.lam) + self.beta * H + self.gamma * H2 + self.K

    def scale(self, c: Number) -> AlgebraElement:
        blocks = tuple(
            CZBlock(c * b.kernel, b.scale, abs(c) * b.D, b.omega, b.mean_free) for b in self.profile.blocks
        )
        profile = CZKernelProfile(blocks, abs(c) * self.profile.cz_norm, c * self.profile.tail_mass)
        return AlgebraElement(c * self.lam, c * self.beta, c * self.gamma, c * self.K, profile, abs(c) * self.a_norm)

    __mul__ = scale
    __rmul__ = scale


def algebra_norm(el: AlgebraElement) -> float:
    """|lam| + |beta| + |gamma| + cz_norm of the stored representation."""
    blocks = el.profile.blocks
    return abs(el.lam) + abs(el.beta) + abs(el.gamma) + (profile_norm(blocks) if blocks else 0.0)


def algebra_product(a: AlgebraElement, b: AlgebraElement, params: Params) -> AlgebraElement:
    assembly = assemble(params)
    H, H2 = assembly.H, assembly.H2
    product = convolve(a.to_kernel(H, H2), b.to_kernel(H, H2))
    expansion = fit_expansion(product, params, H=H, H2=H2)
    element = AlgebraElement.from_expansion(expansion)
    ratio = algebra_norm(element) / (algebra_norm(a) * algebra_norm(b))
    element.diagnostics.update(ratio=ratio, gram_cond=expansion.fit_gram_cond)
    logger.debug("algebra product ratio %.4g", ratio)
    return element


def _split(z: Number) -> tuple[float, float]:
    z = complex(z)
    return z.real, z.imag


def asymptotics_row(lam: Number, beta0: Number, params: Params) -> dict:
    assembly = assemble(params)
    margin = resolvent_set_margin(lam, beta=beta0, H=assembly.H)
    R = resolvent_kernel(lam, beta=beta0, H=assembly.H)
    e = fit_expansion(R, params, H=assembly.H, H2=assembly.H2)
    lt, bt, gt = e.coefficients
    row = {"M": params.M, "margin": margin, "cz_norm_residual": e.residual_profile.cz_norm, "status": "ok"}
    row["lambda_prime_re"], row["lambda_prime_im"] = _split(lt)
    row["beta_re"], row["beta_im"] = _split(bt)
    row["gamma_re"], row["gamma_im"] = _split(gt)
    row["comb1"] = abs(lam * lt - 1)
    row["comb2"] = abs(beta0 * lt + bt * lam)
    row["comb3"] = abs(lam * gt + beta0 * bt)
    row["h2_at_zero"] = convolve_at(assembly.H, assembly.H, 0)
    return row


def failed_row(M: int, columns: Iterable[str], error: Exception) -> dict:
    row = {c: math.nan for c in columns}
    row.update(M=M, status=f"failed: {type(error).__name__}: {error}")
    return row


def asymptotics_sweep(lam: Number, beta0: Number, M_list: Iterable[int], template: Params) -> SweepTable:
    """Coefficient combinations of (lam + beta0 H_M)^-1 that must vanish for the inverse to stay in the algebra."""
    table = SweepTable(ASYMPTOTICS_COLUMNS, name="asymptotics")
    for M in sorted(M_list):
        try:
            row = asymptotics_row(lam, beta0, template.replace(M=M))
        except RhlabError as error:
            logger.warning("asymptotics row M=%d failed: %s", M, error)
            row = failed_row(M, ASYMPTOTICS_COLUMNS, error)
        table.append(row)
    return table
