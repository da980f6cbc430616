from __future__ import annotations

import dataclasses
import logging
import math
from collections.abc import Iterable
from numbers import Number

import numpy as np

from rhlab.errors import ConsistencyError, PreconditionError, RhlabError
from rhlab.kernel import Kernel, convolve
from rhlab.params import Params, is_dyadic
from rhlab.resolvent import failed_row, fit_expansion, resolvent_kernel
from rhlab.table import SweepTable
from rhlab.transform import assemble, block_kernel

logger = logging.getLogger(__name__)

FAMILIES = {
    "H": "H",
    "h": "H",
    "Hsquared": "Hsquared",
    "hsq": "Hsquared",
    "resolvent_residual": "resolvent_residual",
    "residual": "resolvent_residual",
}
WEAK_COLUMNS = ("M", "family", "weak_l1", "l1", "l2", "support_radius", "status")
RECONSTRUCTION_RTOL = 1e-12
B_MASS_CONSTANT = 4.0
MAX_TREE_EXPONENT = 62


def weak_l1(K: Kernel) -> float:
    """sup over lambda of lambda * #{x : |K(x)| > lambda}.

    The sup is approached as lambda rises to a value of |K|, so it is the
    largest rank times value in the descending order.
    """
    a = np.sort(np.abs(K.values[K.values != 0]))[::-1]
    if a.size == 0:
        return 0.0
    return float(np.max(a * np.arange(1, a.size + 1)))


def weak_l1_bruteforce(K: Kernel) -> float:
    a = np.abs(K.values[K.values != 0])
    return max((float(v) * int(np.count_nonzero(a >= v)) for v in np.unique(a)), default=0.0)


@dataclasses.dataclass(frozen=True, order=True)
class DyadicInterval:
    """[j 2^k, (j+1) 2^k) on the grid anchored at 0."""

    k: int
    j: int

    @property
    def size(self) -> int:
        return 1 << self.k

    @property
    def lo(self) -> int:
        return self.j * self.size

    @property
    def hi(self) -> int:
        return self.lo + self.size

    @property
    def parent(self) -> DyadicInterval:
        return DyadicInterval(self.k + 1, self.j // 2)

    @property
    def children(self) -> tuple[DyadicInterval, DyadicInterval]:
        return DyadicInterval(self.k - 1, 2 * self.j), DyadicInterval(self.k - 1, 2 * self.j + 1)

    def __contains__(self, x: int) -> bool:
        return self.lo <= x < self.hi


def _as_kernel(f: Kernel | Iterable[Number], base: int = 0) -> Kernel:
    return f if isinstance(f, Kernel) else Kernel(base, np.asarray(f, dtype=float))


class _Masses:
    """Interval masses of |f| from a prefix sum."""

    def __init__(self, f: Kernel):
        self.base = f.base
        self.prefix = np.concatenate([[0.0], np.cumsum(np.abs(f.values))])
        self.n = len(f)

    def __call__(self, lo: int, hi: int) -> float:
        a = min(max(lo - self.base, 0), self.n)
        b = min(max(hi - self.base, 0), self.n)
        return float(self.prefix[b] - self.prefix[a])

    def average(self, Q: DyadicInterval) -> float:
        return self(Q.lo, Q.hi) / Q.size


def _top(masses: _Masses, lam: float, negative: bool, reach: int) -> DyadicInterval:
    k = max(reach - 1, 0).bit_length()
    while True:
        if k > MAX_TREE_EXPONENT:
            raise ConsistencyError("no covering dyadic interval has average <= lambda")
        Q = DyadicInterval(k, -1 if negative else 0)
        if masses.average(Q) <= lam:
            return Q
        k += 1


def cz_cubes(f: Kernel | Iterable[Number], lam: float, base: int = 0) -> list[DyadicInterval]:
    """Maximal dyadic intervals on which the average of |f| exceeds lam."""
    f = _as_kernel(f, base)
    if lam <= 0:
        raise PreconditionError(f"lam must be positive, got {lam}")
    if f.is_zero:
        raise PreconditionError("f must have positive l1 norm")
    masses = _Masses(f)
    tops = []
    if f.hi >= 0:
        tops.append(_top(masses, lam, negative=False, reach=f.hi + 1))
    if f.lo < 0:
        tops.append(_top(masses, lam, negative=True, reach=-f.lo))

    cubes: list[DyadicInterval] = []
    stack = [Q for Q in tops if masses(Q.lo, Q.hi) > 0]
    while stack:
        Q = stack.pop()
        if Q.k == 0:
            continue
        for child in Q.children:
            mass = masses(child.lo, child.hi)
            if mass == 0:
                continue
            if mass / child.size > lam:
                cubes.append(child)
            else:
                stack.append(child)
    cubes.sort(key=lambda Q: Q.lo)
    return cubes


@dataclasses.dataclass(frozen=True)
class CZDecomposition:
    lambda_level: float
    s: int
    threshold: float
    cubes: tuple[DyadicInterval, ...]
    f: Kernel
    g: Kernel
    b_parts: dict[int, Kernel]
    B_parts: dict[int, Kernel]
    E_parts: dict[int, Kernel]
    B_mass_ratio: float

    def reconstruct(self) -> Kernel:
        total = self.g
        for parts in (self.b_parts, self.B_parts, self.E_parts):
            for part in parts.values():
                total = total + part
        return total

    def parent_mass(self) -> int:
        return sum(Q.parent.size for Q in self.cubes)

    def dump(self) -> str:
        lines = [
            f"# lambda={self.lambda_level:.17g} s={self.s} threshold={self.threshold:.17g} cubes={len(self.cubes)}",
            "k,j,lo,hi",
        ]
        lines += [f"{Q.k},{Q.j},{Q.lo},{Q.hi}" for Q in self.cubes]
        lines.append("part,k,l1")
        lines.append(f"g,,{self.g.l1():.17g}")
        for name, parts in (("b", self.b_parts), ("B", self.B_parts), ("E", self.E_parts)):
            lines += [f"{name},{k},{part.l1():.17g}" for k, part in sorted(parts.items())]
        return "\n".join(lines) + "\n"


def _verify(dec: CZDecomposition, masses: _Masses):
    lam = dec.lambda_level
    previous = None
    for Q in dec.cubes:
        if previous is not None and previous.hi > Q.lo:
            raise ConsistencyError(f"cubes {previous} and {Q} overlap")
        if not masses.average(Q) > lam or masses.average(Q.parent) > lam:
            raise ConsistencyError(f"cube {Q} is not maximal at level {lam}")
        previous = Q
    error = dec.reconstruct().max_abs_diff(dec.f)
    if error > RECONSTRUCTION_RTOL * dec.f.sup():
        raise ConsistencyError(f"decomposition does not add back to f (max error {error:.3g})")
    if dec.g.sup() > lam:
        raise ConsistencyError(f"|g| reaches {dec.g.sup():.6g} > lambda={lam}")
    if dec.parent_mass() > 2 * dec.f.l1() / lam:
        raise ConsistencyError(f"sum |Q*| = {dec.parent_mass()} exceeds 2 |f|_1 / lambda")
    for Q in dec.cubes:
        B = dec.B_parts.get(Q.k, Kernel.zero()).window(Q.lo, Q.hi - 1)
        if abs(B.mass()) > RECONSTRUCTION_RTOL * max(B.l1(), lam):
            raise ConsistencyError(f"B part on {Q} has mean {B.mass():.3g}")
    if dec.B_mass_ratio > B_MASS_CONSTANT * (1 + RECONSTRUCTION_RTOL):
        raise ConsistencyError(f"B part l1 ratio {dec.B_mass_ratio:.6g} exceeds {B_MASS_CONSTANT}")


def cz_decompose(
    f: Kernel | Iterable[Number],
    lam: float,
    s: int,
    params: Params,
    base: int = 0,
) -> CZDecomposition:
    """Split f into g plus, per cube size 2^k, the parts b_k^(s), B_k^(s) and E_k^(s)."""
    f = _as_kernel(f, base)
    if not is_dyadic(s):
        raise PreconditionError(f"s must be dyadic, got {s}")
    cubes = cz_cubes(f, lam)
    threshold = lam * s ** (1 / params.alpha)

    lo = min([f.lo] + [Q.lo for Q in cubes])
    hi = max([f.hi] + [Q.hi - 1 for Q in cubes])
    values = f.dense(lo, hi)
    small = np.where(np.abs(values) <= threshold, values, 0.0)
    big = values - small

    inside = np.zeros(values.size, dtype=bool)
    b_parts, B_parts, E_parts = {}, {}, {}
    b_acc: dict[int, np.ndarray] = {}
    B_acc: dict[int, np.ndarray] = {}
    E_acc: dict[int, np.ndarray] = {}
    worst = 0.0
    for Q in cubes:
        a, b = Q.lo - lo, Q.hi - lo
        inside[a:b] = True
        for acc in (b_acc, B_acc, E_acc):
            acc.setdefault(Q.k, np.zeros(values.size))
        average = math.fsum(small[a:b]) / Q.size
        b_acc[Q.k][a:b] = big[a:b]
        E_acc[Q.k][a:b] = average
        B_acc[Q.k][a:b] = small[a:b] - average
        worst = max(worst, math.fsum(np.abs(B_acc[Q.k][a:b])) / (lam * Q.size))

    for k in b_acc:
        b_parts[k] = Kernel(lo, b_acc[k])
        B_parts[k] = Kernel(lo, B_acc[k])
        E_parts[k] = Kernel(lo, E_acc[k])
    g = Kernel(lo, np.where(inside, 0.0, values))

    dec = CZDecomposition(lam, s, threshold, tuple(cubes), f, g, b_parts, B_parts, E_parts, worst)
    _verify(dec, _Masses(f))
    logger.debug("cz decomposition at lambda=%g: %d cubes, B ratio %.4g", lam, len(cubes), worst)
    return dec


def mixed_signal(rng: np.random.Generator, length: int = 256, spikes: int = 6, plateaus: int = 3) -> Kernel:
    """Random f made of signed spikes and flat plateaus, the usual stress input for the cube search."""
    values = np.zeros(length)
    for _ in range(plateaus):
        a = int(rng.integers(0, length - 1))
        b = int(rng.integers(a + 1, min(length, a + length // 4) + 1))
        values[a:b] += rng.uniform(-2.0, 2.0)
    idx = rng.integers(0, length, size=spikes)
    values[idx] += rng.choice([-1.0, 1.0], size=spikes) * rng.uniform(5.0, 50.0, size=spikes)
    values += 0.1 * rng.standard_normal(length) * (rng.random(length) < 0.3)
    return Kernel(int(rng.integers(-length, length)), values)


def maximal_truncation_norm(
    params: Params,
    h: Kernel | Iterable[Number],
    scales: Iterable[int] | None = None,
    base: int = 0,
) -> float:
    """||sup_s |S_s * h| ||_2 / ||h||_2 with S_s the partial sum of transform blocks up to min(M, s)."""
    h = _as_kernel(h, base)
    norm = h.l2()
    if norm == 0:
        raise PreconditionError("h must be nonzero")
    scales = sorted(params.scales if scales is None else scales)
    partial = Kernel.zero()
    outputs = []
    for s in scales:
        if s > params.M:
            break
        partial = partial + block_kernel(s, params, first_scale=params.cutoff(s) == "w")
        outputs.append(convolve(partial, h))
    outputs = [out for out in outputs if not out.is_zero]
    if not outputs:
        return 0.0
    lo = min(out.lo for out in outputs)
    hi = max(out.hi for out in outputs)
    envelope = np.max(np.abs(np.stack([out.dense(lo, hi) for out in outputs])), axis=0)
    return math.sqrt(math.fsum(envelope**2)) / norm


def family_kernel(family: str, params: Params, lam: Number = 1.0) -> Kernel:
    family = FAMILIES.get(family)
    assembly = assemble(params)
    if family == "H":
        return assembly.H
    if family == "Hsquared":
        return assembly.H2
    if family == "resolvent_residual":
        R = resolvent_kernel(lam, H=assembly.H)
        return fit_expansion(R, params, H=assembly.H, H2=assembly.H2).residual
    raise PreconditionError(f"unknown family {family!r}, expected one of {sorted(set(FAMILIES))}")


def weak_row(family: str, params: Params, lam: Number = 1.0) -> dict:
    K = family_kernel(family, params, lam)
    return {
        "M": params.M,
        "family": FAMILIES[family],
        "weak_l1": weak_l1(K),
        "l1": K.l1(),
        "l2": K.l2(),
        "support_radius": K.radius(),
        "status": "ok",
    }


def weak_sweep(family: str, lam: Number, template: Params, M_list: Iterable[int]) -> SweepTable:
    if family not in FAMILIES:
        raise PreconditionError(f"unknown family {family!r}, expected one of {sorted(set(FAMILIES))}")
    table = SweepTable(WEAK_COLUMNS, name=f"weak_{FAMILIES[family]}")
    for M in sorted(M_list):
        try:
            row = weak_row(family, template.replace(M=M), lam)
        except RhlabError as error:
            logger.warning("weak sweep row M=%d failed: %s", M, error)
            row = failed_row(M, WEAK_COLUMNS, error) | {"family": FAMILIES[family]}
        table.append(row)
    return table


def growth_rate(table: SweepTable, column: str = "weak_l1") -> float:
    """Least-squares slope of log2(column) against log2(M) over the successful rows."""
    rows = [r for r in table.ok_rows() if r[column] and r[column] > 0]
    if len(rows) < 2:
        return math.nan
    x = np.log2([r["M"] for r in rows])
    y = np.log2([r[column] for r in rows])
    return float(np.polyfit(x, y, 1)[0])
