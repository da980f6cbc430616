from __future__ import annotations

import dataclasses
import logging
import math
from collections import defaultdict
from collections.abc import Iterable, Sequence

import numpy as np

from rhlab.errors import NotMeanFreeError, PreconditionError
from rhlab.kernel import Kernel, convolve, convolve_at
from rhlab.params import Params, ScaleGrid, bump, first_dyadic_at_least, is_dyadic, psi_mass
from rhlab.transform import assemble, block_kernel, integer_parts

logger = logging.getLogger(__name__)

MEAN_RTOL = 1e-12
AVERAGING_CONSTANT = math.sqrt(8) / (math.sqrt(2) - 1)
PROMOTION_BOUND = math.sqrt(6)
DEFAULT_C_SPLIT = 8.0


@dataclasses.dataclass(frozen=True)
class CZReport:
    scale: int
    omega: float
    mean: float
    overhang: float
    D_iii: float
    D_iv: float
    worst_h: int
    budget: float | None = None
    l1: float = 0.0

    @property
    def D_min(self) -> float:
        return max(self.D_iii, self.D_iv)

    @property
    def pass_i(self) -> bool:
        return abs(self.mean) <= MEAN_RTOL * self.l1 if self.l1 else True

    @property
    def pass_ii(self) -> bool:
        return self.overhang == 0

    @property
    def pass_iii(self) -> bool:
        return self.budget is None or self.D_iii <= self.budget

    @property
    def pass_iv(self) -> bool:
        return self.budget is None or self.D_iv <= self.budget

    @property
    def slack_iii(self) -> float | None:
        return None if self.budget is None else self.budget - self.D_iii

    @property
    def slack_iv(self) -> float | None:
        return None if self.budget is None else self.budget - self.D_iv

    @property
    def passed(self) -> bool:
        return self.pass_i and self.pass_ii and self.pass_iii and self.pass_iv

    def row(self) -> dict:
        return {
            "s": self.scale,
            "D_iii": self.D_iii,
            "D_iv": self.D_iv,
            "worst_h": self.worst_h,
            "mean": self.mean,
        }


def shift_energy(K: Kernel, h: int) -> float:
    """sum over x of |K(x+h) - K(x)|^2."""
    v = K.values
    pad = np.zeros(h, dtype=v.dtype)
    d = np.concatenate([v, pad]) - np.concatenate([pad, v])
    return float(np.sum(np.abs(d) ** 2))


def check_block(K: Kernel, s: int, omega: float = 0.5, budget: float | None = None) -> CZReport:
    if not is_dyadic(s):
        raise PreconditionError(f"block scale must be dyadic, got s={s}")
    mean = K.mass()
    outside = np.abs(K.points) > s if not K.is_zero else np.zeros(0, dtype=bool)
    overhang = float(np.sum(np.abs(K.values[outside])))
    if overhang:
        logger.debug("block at scale %d overhangs [-s, s] by mass %.3g", s, overhang)
    energy = float(np.sum(np.abs(K.values) ** 2))
    D_iii = math.sqrt(s * energy)
    D_iv, worst_h = 0.0, 1
    h = 1
    while h <= s:
        d = math.sqrt(s * (s / h) ** omega * shift_energy(K, h))
        if d > D_iv:
            D_iv, worst_h = d, h
        h *= 2
    return CZReport(
        scale=s,
        omega=omega,
        mean=mean,
        overhang=overhang,
        D_iii=D_iii,
        D_iv=D_iv,
        worst_h=worst_h,
        budget=budget,
        l1=K.l1(),
    )


@dataclasses.dataclass(frozen=True)
class CZBlock:
    kernel: Kernel
    scale: int
    D: float
    omega: float
    mean_free: bool
    report: CZReport | None = dataclasses.field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kernel.radius() > self.scale:
            raise PreconditionError(
                f"block kernel radius {self.kernel.radius()} exceeds its scale {self.scale}"
            )

    @classmethod
    def measure(cls, kernel: Kernel, scale: int, omega: float = 0.5, mean_free: bool | None = None) -> CZBlock:
        report = check_block(kernel, scale, omega)
        # a block whose mean does not vanish to rounding is never flagged mean-free
        mean_free = report.pass_i if mean_free is None else mean_free and report.pass_i
        return cls(kernel, scale, report.D_min, omega, mean_free, report)

    def checked(self) -> CZReport:
        if self.report is None or self.report.omega != self.omega:
            return check_block(self.kernel, self.scale, self.omega)
        return self.report


@dataclasses.dataclass(frozen=True)
class CZKernelProfile:
    blocks: tuple[CZBlock, ...]
    cz_norm: float
    tail_mass: float = 0.0

    @property
    def grid(self) -> ScaleGrid:
        return ScaleGrid(tuple(b.scale for b in self.blocks))

    def kernel(self) -> Kernel:
        total = Kernel.zero()
        for block in self.blocks:
            total = total + block.kernel
        return total

    def rows(self) -> list[dict]:
        return [b.checked().row() | {"mean_free": b.mean_free} for b in self.blocks]


def covering_scale(K: Kernel, s: int) -> int:
    while K.radius() > s:
        s *= 2
    return s


def _psi_tilde(s: int) -> Kernel:
    x = np.arange(-2 * s, 2 * s + 1)
    return Kernel(-2 * s, bump("w", s, x) / psi_mass(s))


def _group(blocks: Iterable[tuple[Kernel, int]]) -> dict[int, Kernel]:
    grouped: dict[int, Kernel] = defaultdict(Kernel.zero)
    for kernel, s in blocks:
        if not is_dyadic(s):
            raise PreconditionError(f"scale {s} is not dyadic")
        grouped[int(s)] = grouped[int(s)] + kernel
    return dict(grouped)


def _merge(out: list[tuple[Kernel, int, bool]], omega: float) -> list[CZBlock]:
    merged: dict[int, list] = {}
    for kernel, s, mean_free in out:
        if kernel.is_zero:
            continue
        if s in merged:
            merged[s][0] = merged[s][0] + kernel
            merged[s][1] = merged[s][1] and mean_free
        else:
            merged[s] = [kernel, mean_free]
    return [CZBlock.measure(k, s, omega, mean_free=mf) for s, (k, mf) in sorted(merged.items())]


def telescope(
    blocks: Iterable[tuple[Kernel, int]],
    J: int,
    tail_at: int | None = None,
    omega: float = 0.5,
) -> list[CZBlock]:
    """Re-block kernels with possibly nonzero means into mean-free blocks.

    Each input (K_s, s) is supported in [-2s, 2s]. Scale s of the chain J..T
    becomes K_s - psi~_s * S_s + psi~_{s/2} * S_{s/2}, S_s being the partial
    mass sum. The chain leaves psi~_T * S_T behind, which is returned as one
    block flagged not mean-free when S_T is not negligible. With ``tail_at``
    that leftover is the tail block at scale 4*tail_at.
    """
    if not is_dyadic(J):
        raise PreconditionError(f"lowest scale J must be dyadic, got J={J}")
    grouped = _group(blocks)
    if not grouped:
        return []
    low = min(grouped)
    if low < J:
        raise PreconditionError(f"input scale {low} is below J={J}")
    T = max(grouped)
    if tail_at is not None:
        if not is_dyadic(tail_at) or tail_at < T:
            raise PreconditionError(f"tail_at must be dyadic and >= the largest input scale {T}, got {tail_at}")
        T = tail_at

    total_l1 = sum(k.l1() for k in grouped.values())
    out: list[tuple[Kernel, int, bool]] = []
    running, previous = 0.0, 0.0
    for s in ScaleGrid.between(J, T):
        K = grouped.get(s, Kernel.zero())
        running = running + K.mass()
        corrected = K - running * _psi_tilde(s)
        if s > J:
            corrected = corrected + previous * _psi_tilde(s // 2)
        out.append((corrected, covering_scale(corrected, s), True))
        previous = running

    if abs(running) > MEAN_RTOL * total_l1:
        leftover = running * _psi_tilde(T)
        if tail_at is not None:
            leftover = leftover.multiply(lambda x: bump("w", 2 * tail_at, x))
            out.append((leftover, 4 * tail_at, False))
        else:
            out.append((leftover, covering_scale(leftover, T), False))
    result = _merge(out, omega)
    logger.debug("telescoped %d inputs on %d..%d into %d blocks", len(grouped), J, T, len(result))
    return result


def averaging_defect(blocks: Sequence[CZBlock | tuple[Kernel, int]], s: int) -> float:
    """max over |x| <= 2s of |1_{4s} * K(x) - sum_{j <= s} mass(K_j)|, 1_{4s} the indicator of |y| < 4s."""
    pairs = [(b.kernel, b.scale) if isinstance(b, CZBlock) else b for b in blocks]
    K = Kernel.zero()
    for kernel, _ in pairs:
        K = K + kernel
    low_mass = math.fsum(kernel.mass() for kernel, j in pairs if j <= s)
    if K.is_zero:
        return abs(low_mass)
    lo, hi = -2 * s - 4 * s, 2 * s + 4 * s
    dense = K.dense(lo, hi)
    prefix = np.concatenate([[0.0], np.cumsum(dense)])
    x = np.arange(-2 * s, 2 * s + 1)
    # window x-4s+1 .. x+4s-1
    start = x - 4 * s + 1 - lo
    stop = x + 4 * s - 1 - lo + 1
    window_sums = prefix[stop] - prefix[start]
    outside = K.l1() - float(np.sum(np.abs(dense)))
    if outside > MEAN_RTOL * K.l1():
        logger.warning("averaging defect at s=%d ignores kernel mass beyond |x| > %d", s, hi)
    return float(np.max(np.abs(window_sums - low_mass)))


def window_decompose(K: Kernel, grid: ScaleGrid) -> list[tuple[Kernel, int]]:
    """Split K into pieces K*phi_s over the grid, phi being w at the bottom scale and wtilde above.

    The top piece takes whatever the lower cutoffs leave, so the pieces add
    back to K. The top scale must be at least half the support radius.
    """
    grid = grid if isinstance(grid, ScaleGrid) else ScaleGrid(tuple(grid))
    if not grid:
        raise PreconditionError("window_decompose needs a non-empty scale grid")
    radius = K.radius()
    if 2 * grid.top < radius:
        raise PreconditionError(
            f"scale grid top {grid.top} does not cover the support radius {radius}; "
            f"top scale must be >= {first_dyadic_at_least(radius / 2)}"
        )
    if len(grid) == 1:
        return [] if K.is_zero else [(K, grid.top)]
    first = grid.bottom
    pieces = [(K.multiply(lambda x: bump("w", first, x)), first)]
    for s in grid[1:-1]:
        pieces.append((K.multiply(lambda x, s=s: bump("wtilde", s, x)), s))
    below = K.multiply(lambda x: bump("w", grid[-2], x))
    pieces.append((K - below, grid.top))
    return [(k, s) for k, s in pieces if not k.is_zero]


def cz_norm(blocks: Iterable[CZBlock]) -> float:
    norm = 0.0
    for block in blocks:
        report = block.checked()
        if not block.mean_free or not report.pass_i:
            raise NotMeanFreeError(
                f"block at scale {block.scale} has mean {report.mean:.3g}; run telescope first"
            )
        norm = max(norm, report.D_min)
    return norm


def profile_norm(blocks: Iterable[CZBlock]) -> float:
    """cz_norm of the mean-free blocks, with the D of any tail block folded into the maximum."""
    blocks = list(blocks)
    tails = [b.checked().D_min for b in blocks if not b.mean_free]
    return max([cz_norm(b for b in blocks if b.mean_free)] + tails)


def profile_grid(K: Kernel, J: int) -> ScaleGrid:
    top = max(J, first_dyadic_at_least(max(K.radius(), 1)))
    return ScaleGrid.between(J, top)


def cz_profile(K: Kernel, J: int, omega: float = 0.5) -> CZKernelProfile:
    """Canonical representation: window_decompose then telescope from J upward."""
    if K.is_zero:
        return CZKernelProfile((), 0.0)
    blocks = telescope(window_decompose(K, profile_grid(K, J)), J, omega=omega)
    tail_mass = sum(b.kernel.mass() for b in blocks if not b.mean_free)
    return CZKernelProfile(tuple(blocks), profile_norm(blocks), tail_mass)


def convolution_constant(K: Kernel, L: Kernel, J: int, omega: float = 0.5) -> float:
    product = cz_profile(convolve(K, L), J, omega).cz_norm
    return product / (cz_profile(K, J, omega).cz_norm * cz_profile(L, J, omega).cz_norm)


def promotion_factor(K: Kernel, s: int, omega: float = 0.5) -> float:
    """D_min(2s) / D_min(s) for a kernel checked at scale s."""
    return check_block(K, 2 * s, omega).D_min / check_block(K, s, omega).D_min


def measured_gamma(K: Kernel, s: int, omega: float = 0.5) -> float:
    return math.log2(promotion_factor(K, s, omega)) - 0.5


def random_block(rng: np.random.Generator, s: int, omega: float = 0.5) -> Kernel:
    """A smooth random mean-free kernel supported in [-s, s] with D_min = 1 at scale s."""
    half = max(s // 2, 1)
    x = np.arange(-half, half + 1)
    smooth = np.convolve(rng.standard_normal(x.size + 8), np.hanning(9), mode="valid")
    raw = Kernel(-half, smooth * bump("w", max(half // 2, 1), x))
    psi = _psi_tilde(half)
    block = raw - raw.mass() * psi
    return (1 / check_block(block, s, omega).D_min) * block


def raw_kernel(alpha: float, radius: int) -> Kernel:
    """The untruncated rough Hilbert kernel restricted to 0 < |x| <= radius."""
    m_max = int((radius + 1) ** (1 / alpha)) + 2
    m = np.arange(1, m_max + 1)
    x = integer_parts(m, alpha)
    keep = x <= radius
    m, x = m[keep], x[keep]
    if x.size == 0:
        return Kernel.zero()
    pos = np.bincount(x, weights=1.0 / m, minlength=radius + 1)
    return Kernel(-radius, np.concatenate([-pos[:0:-1], [0.0], pos[1:]]))


@dataclasses.dataclass(frozen=True)
class Commutator:
    kernel: Kernel
    s: int
    norm_sq: float
    mean: float

    @property
    def scaled(self) -> float:
        return self.norm_sq * self.s**1.5

    def __iter__(self):
        return iter((self.kernel, self.norm_sq))


COMMUTATOR_SOURCES = ("block", "raw")


def commutator(s: int, params: Params, Hminus: Kernel | None = None, source: str = "block") -> Commutator:
    """C_s = (H_s * H^-) phi_s - (H_s phi_s) * H^-, H_s the transform block at scale s.

    ``source="raw"`` puts the untruncated kernel in place of H_s. On the support
    of phi_s it agrees with H^+ * H^-, so both read the same commutator away
    from the edges of P_M^+.
    """
    if params.mode != "gap":
        raise PreconditionError("commutator is defined for gap mode only")
    if s not in params.plus_scales:
        raise PreconditionError(f"s={s} is outside P_M^+ = {list(params.plus_scales)}")
    if source not in COMMUTATOR_SOURCES:
        raise PreconditionError(f"unknown commutator source {source!r}, expected one of {COMMUTATOR_SOURCES}")
    if Hminus is None:
        Hminus = assemble(params).Hminus
    kind = params.cutoff(s)
    if source == "block":
        Hs = block_kernel(s, params, first_scale=kind == "w")
    else:
        Hs = raw_kernel(params.alpha, 2 * s + Hminus.radius() + 1)

    def phi(x):
        return bump(kind, s, x)

    C = convolve(Hs, Hminus).multiply(phi) - convolve(Hs.multiply(phi), Hminus)
    norm_sq = float(np.sum(np.abs(C.values) ** 2))
    logger.debug("commutator s=%d: |C_s|^2=%.6g", s, norm_sq)
    return Commutator(C, s, norm_sq, C.mass())


def commutator_sweep(params: Params, source: str = "block") -> list[Commutator]:
    return [commutator(s, params, source=source) for s in params.plus_scales]


def convolve_split(K: Kernel, L: Kernel) -> Kernel:
    """K*L computed part by part over the sign of x, so gaps around 0 stay exactly zero."""
    total = Kernel.zero()
    for a in (K.window(K.lo, -1), K.window(0, K.hi)):
        for b in (L.window(L.lo, -1), L.window(0, L.hi)):
            total = total + convolve(a, b)
    return total


@dataclasses.dataclass(frozen=True)
class RhoKSplit:
    rho: Kernel
    k: Kernel
    diag: float
    s1: int
    s2: int
    c_split: float
    window: int
    omega: float

    def __iter__(self):
        return iter((self.rho, self.k, self.diag))

    @property
    def rho_sup_scaled(self) -> float:
        return self.rho.sup() * self.s2

    @property
    def k_sup_scaled(self) -> float:
        return self.k.sup() * self.s2

    @property
    def rho_support_ratio(self) -> float:
        return self.rho.radius() / self.s2

    @property
    def rho_holder(self) -> float:
        worst, h = 0.0, 1
        while h <= self.s2 and not self.rho.is_zero:
            shifted = Kernel(self.rho.base - h, self.rho.values)
            sup = (shifted - self.rho).sup()
            worst = max(worst, sup * self.s2 * (self.s2 / h) ** self.omega)
            h *= 2
        return worst

    def row(self) -> dict:
        return {
            "s1": self.s1,
            "s2": self.s2,
            "diag": self.diag,
            "rho_sup_scaled": self.rho_sup_scaled,
            "k_sup_scaled": self.k_sup_scaled,
            "rho_support_ratio": self.rho_support_ratio,
            "rho_holder": self.rho_holder,
        }


def rho_k_split(s1: int, s2: int, params: Params, c_split: float = DEFAULT_C_SPLIT) -> RhoKSplit:
    if not (is_dyadic(s1) and is_dyadic(s2)):
        raise PreconditionError(f"scales must be dyadic, got s1={s1}, s2={s2}")
    if not params.first_scale <= s1 <= s2 <= params.M:
        raise PreconditionError(
            f"need M^theta <= s1 <= s2 <= M, i.e. {params.first_scale} <= {s1} <= {s2} <= {params.M}"
        )
    # same cutoff family as assemble: wtilde throughout in gap mode
    H1 = block_kernel(s1, params, first_scale=params.cutoff(s1) == "w")
    H2 = block_kernel(s2, params, first_scale=params.cutoff(s2) == "w")
    product = convolve_split(H1, H2)
    diag = 0.0
    if s1 == s2:
        diag = convolve_at(H1, H2, 0)
        product = product - Kernel.delta(0, product(0))
    window = int(c_split * s2 ** (1 - 1 / params.alpha + params.delta))
    k = product.window(-window, window)
    rho = product - k
    return RhoKSplit(rho, k, diag, s1, s2, c_split, window, params.omega)


def rho_k_sweep(pairs: Iterable[tuple[int, int]], params: Params, c_split: float = DEFAULT_C_SPLIT) -> list[RhoKSplit]:
    return [rho_k_split(s1, s2, params, c_split) for s1, s2 in pairs]


def convolution_block(s1: int, params: Params, omega: float | None = None) -> CZReport:
    """Check H_{s1} * (sum of blocks with s1^((alpha-1)/alpha+delta) <= s <= s1) at scale 4*s1."""
    omega = params.omega if omega is None else omega
    low = s1 ** ((params.alpha - 1) / params.alpha + params.delta)
    inner = Kernel.zero()
    for s in ScaleGrid.between(first_dyadic_at_least(low), s1) if low <= s1 else ():
        inner = inner + block_kernel(s, params)
    return check_block(convolve(block_kernel(s1, params), inner), 4 * s1, omega)
