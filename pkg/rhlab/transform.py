from __future__ import annotations

import dataclasses
import hashlib
import logging
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np

from rhlab.errors import PreconditionError
from rhlab.kernel import Kernel, convolve, op_norm
from rhlab.params import Params, ScaleGrid, bump, is_dyadic, w, wtilde

logger = logging.getLogger(__name__)

# relative slack under which m^alpha is taken to be an exact integer
INTEGER_PART_RTOL = 1e-12


def integer_parts(m: np.ndarray, alpha: float) -> np.ndarray:
    p = m.astype(float) ** alpha
    r = np.rint(p)
    exact = np.abs(p - r) <= INTEGER_PART_RTOL * r
    return np.where(exact, r, np.floor(p)).astype(np.int64)


@lru_cache(maxsize=512)
def _block(s: int, alpha: float, kind: str) -> Kernel:
    m_max = int((2 * s) ** (1 / alpha)) + 2
    m = np.arange(1, m_max + 1)
    t = m.astype(float) ** alpha / s
    phi = w(t) if kind == "w" else wtilde(t)
    keep = phi != 0
    if not keep.any():
        return Kernel.zero()
    m, phi = m[keep], phi[keep]
    x = integer_parts(m, alpha)
    R = int(x.max())
    # colliding integer parts accumulate
    pos = np.bincount(x, weights=phi / m, minlength=R + 1)
    values = np.concatenate([-pos[:0:-1], [0.0], pos[1:]])
    return Kernel(-R, values)


def block_kernel(s: int, params: Params, first_scale: bool = False) -> Kernel:
    if not is_dyadic(s):
        raise PreconditionError(f"block scale must be dyadic and >= 2, got s={s}")
    return _block(int(s), float(params.alpha), "w" if first_scale else "wtilde")


def inner_radius(K: Kernel) -> int | None:
    nonzero = np.flatnonzero(K.values)
    if nonzero.size == 0:
        return None
    return int(np.min(np.abs(K.base + nonzero)))


def supports_disjoint(inner: Kernel, outer: Kernel) -> bool:
    """True when max |x| over supp inner is below min |x| over supp outer."""
    r = inner_radius(outer)
    return inner.is_zero or r is None or inner.radius() < r


@dataclasses.dataclass(frozen=True)
class Assembly:
    params: Params
    H: Kernel
    Hminus: Kernel
    Hplus: Kernel
    blocks: dict[int, Kernel]
    minus_radius: int
    plus_inner_radius: int | None

    @cached_property
    def H2(self) -> Kernel:
        return convolve(self.H, self.H)

    @cached_property
    def cross(self) -> Kernel:
        return convolve(self.Hplus, self.Hminus)

    @property
    def grid(self) -> ScaleGrid:
        return ScaleGrid(tuple(sorted(self.blocks)))

    def __iter__(self):
        return iter((self.H, self.Hminus, self.Hplus))


def _sum(kernels) -> Kernel:
    total = Kernel.zero()
    for k in kernels:
        total = total + k
    return total


def _build(params: Params) -> Assembly:
    blocks = {s: block_kernel(s, params, first_scale=params.cutoff(s) == "w") for s in params.scales}
    Hminus = _sum(blocks[s] for s in params.minus_scales if s in blocks)
    Hplus = _sum(blocks[s] for s in params.plus_scales if s in blocks)
    H = Hminus + Hplus if params.mode == "gap" else _sum(blocks.values())
    logger.info(
        "assembled %s mode M=%d: %d scales, support radius %d",
        params.mode, params.M, len(blocks), H.radius(),
    )
    return Assembly(
        params=params,
        H=H,
        Hminus=Hminus,
        Hplus=Hplus,
        blocks=blocks,
        minus_radius=Hminus.radius(),
        plus_inner_radius=inner_radius(Hplus),
    )


@lru_cache(maxsize=16)
def assemble(params: Params) -> Assembly:
    return _build(params)


def cache_name(params: Params) -> str:
    return hashlib.sha256(repr(params.cache_key).encode()).hexdigest()[:20]


def cached_assemble(params: Params, cache_dir: str | Path | None = None) -> Assembly:
    """assemble with an on-disk kernel cache keyed by the parameters and cutoff version."""
    if cache_dir is None:
        return assemble(params)
    folder = Path(cache_dir) / cache_name(params)
    names = ("H", "Hminus", "Hplus")
    if all((folder / f"{n}.bin").exists() for n in names):
        logger.debug("kernel cache hit %s", folder)
        H, Hminus, Hplus = (Kernel.load(folder / f"{n}.bin") for n in names)
        blocks = {s: block_kernel(s, params, params.cutoff(s) == "w") for s in params.scales}
        return Assembly(params, H, Hminus, Hplus, blocks, Hminus.radius(), inner_radius(Hplus))
    assembly = assemble(params)
    folder.mkdir(parents=True, exist_ok=True)
    for name, kernel in zip(names, assembly):
        kernel.save(folder / f"{name}.bin")
    return assembly


def truncate(K: Kernel, s: int, params: Params, cumulative: bool = False) -> Kernel:
    """Smooth truncation of K at scale s with the full cutoff family.

    The family starts at the first dyadic scale above M^theta with w and
    continues with wtilde, so the cumulative sum up to s is K*w(x/s).
    """
    if not is_dyadic(s) or s < params.first_scale:
        raise PreconditionError(f"truncation scale must be dyadic and >= {params.first_scale}, got s={s}")
    if cumulative:
        return K.multiply(lambda x: bump("w", s, x))
    kind = "w" if s == params.first_scale else "wtilde"
    return K.multiply(lambda x: bump(kind, s, x))


def truncation_constant(K: Kernel, params: Params) -> float:
    """Worst ratio op_norm(truncate(K, s)) / op_norm(K) over the family scales."""
    base = op_norm(K)
    if base == 0:
        return 0.0
    top = max(params.first_scale, 2 * max(K.radius(), 1))
    ratios = [
        op_norm(truncate(K, s, params, cumulative=c)) / base
        for s in ScaleGrid.between(params.first_scale, top)
        for c in (False, True)
    ]
    return max(ratios)
