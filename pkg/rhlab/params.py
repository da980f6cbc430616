from __future__ import annotations

import dataclasses
import logging
import math
from collections.abc import Mapping
from functools import lru_cache
from typing import Any

import numpy as np

from rhlab.errors import ParamsError, ResourceError

logger = logging.getLogger(__name__)

MODES = ("full", "gap")
BUMP_KINDS = ("w", "wtilde", "psi_normalized")

# bumped whenever the w ramp changes; part of every kernel cache key
CUTOFF_VERSION = "w-exp-ramp-1"

MAX_SUPPORT_POINTS = 2**31
BAND_RTOL = 1e-12
MAX_EXPONENT = 60


@dataclasses.dataclass(frozen=True)
class ScaleGrid:
    scales: tuple[int, ...] = ()

    def __post_init__(self):
        scales = tuple(int(s) for s in self.scales)
        for s in scales:
            if s < 2 or s & (s - 1):
                raise ParamsError(f"scale {s} is not a dyadic integer 2^j with j >= 1")
        if any(a >= b for a, b in zip(scales, scales[1:])):
            raise ParamsError(f"scales must be strictly increasing, got {list(scales)}")
        object.__setattr__(self, "scales", scales)

    @classmethod
    def between(cls, low: int, top: int) -> ScaleGrid:
        return dyadic_range(low, top)

    @property
    def bottom(self) -> int:
        return self.scales[0]

    @property
    def top(self) -> int:
        return self.scales[-1]

    def __iter__(self):
        return iter(self.scales)

    def __len__(self):
        return len(self.scales)

    def __getitem__(self, item):
        return self.scales[item]

    def __contains__(self, s):
        return s in self.scales

    def __bool__(self):
        return bool(self.scales)


def dyadic_range(lo: float, hi: float) -> ScaleGrid:
    if not 0 < lo <= hi:
        raise ParamsError(f"dyadic_range needs 0 < lo <= hi, got lo={lo}, hi={hi}")
    return ScaleGrid(tuple(2**j for j in range(1, MAX_EXPONENT + 1) if lo <= 2**j <= hi))


def is_dyadic(s: Any) -> bool:
    return isinstance(s, (int, np.integer)) and s >= 2 and not s & (s - 1)


def first_dyadic_at_least(x: float) -> int:
    s = 2
    while s < x * (1 - BAND_RTOL):
        s *= 2
    return s


def _band_scales(lo: float, hi: float) -> ScaleGrid:
    return dyadic_range(lo * (1 - BAND_RTOL), hi * (1 + BAND_RTOL))


@dataclasses.dataclass(frozen=True)
class Params:
    alpha: float
    delta: float
    M: int
    mode: str = "gap"
    omega: float = 0.5
    gamma_resc: float | None = None

    def __post_init__(self):
        if self.gamma_resc is None:
            object.__setattr__(self, "gamma_resc", self.omega / 2)

    @property
    def theta(self) -> float:
        return self.alpha - 1 - self.delta

    @property
    def smallness_lhs(self) -> float:
        return (self.alpha - 1) / self.alpha + self.delta

    @property
    def minus_band(self) -> tuple[float, float]:
        return self.M ** (self.alpha - 1 - self.delta), self.M ** (self.alpha - 1)

    @property
    def plus_band(self) -> tuple[float, float]:
        return self.M ** (1 - self.delta), float(self.M)

    @property
    def minus_scales(self) -> ScaleGrid:
        return _band_scales(*self.minus_band)

    @property
    def plus_scales(self) -> ScaleGrid:
        return _band_scales(*self.plus_band)

    @property
    def first_scale(self) -> int:
        return first_dyadic_at_least(self.M**self.theta)

    @property
    def scales(self) -> ScaleGrid:
        if self.mode == "gap":
            return ScaleGrid(tuple(self.minus_scales) + tuple(self.plus_scales))
        if self.first_scale > self.M:
            return ScaleGrid()
        return ScaleGrid.between(self.first_scale, self.M)

    @property
    def support_radius(self) -> int:
        return 2 * self.M

    def cutoff(self, s: int) -> str:
        if self.mode == "full" and s == self.first_scale:
            return "w"
        return "wtilde"

    def replace(self, **changes) -> Params:
        if "omega" in changes and "gamma_resc" not in changes:
            changes["gamma_resc"] = None
        return validate(dataclasses.replace(self, **changes))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self) | {"theta": self.theta}

    @property
    def cache_key(self) -> tuple:
        return self.alpha, self.delta, self.M, self.mode, CUTOFF_VERSION


def validate(raw: Mapping[str, Any] | Params) -> Params:
    if isinstance(raw, Params):
        params = raw
    else:
        known = {f.name for f in dataclasses.fields(Params)}
        unknown = set(raw) - known
        if unknown:
            raise ParamsError(f"unknown parameters: {', '.join(sorted(unknown))}")
        params = Params(**raw)

    alpha, delta, M = params.alpha, params.delta, params.M
    if not alpha > 1:
        raise ParamsError(f"alpha must satisfy alpha > 1, got alpha={alpha}")
    if not delta > 0:
        raise ParamsError(f"delta must satisfy delta > 0, got delta={delta}")
    if int(M) != M or M < 2:
        raise ParamsError(f"M must be an integer >= 2, got M={M}")
    if params.mode not in MODES:
        raise ParamsError(f"mode must be one of {MODES}, got {params.mode!r}")
    if not 0 < params.omega <= 1:
        raise ParamsError(f"omega must lie in (0, 1], got omega={params.omega}")
    if type(M) is not int:
        params = dataclasses.replace(params, M=int(M))

    if params.mode == "gap":
        for name, band, scales in (
            ("P_M^-", params.minus_band, params.minus_scales),
            ("P_M^+", params.plus_band, params.plus_scales),
        ):
            if not scales:
                lo, hi = band
                raise ParamsError(
                    f"scale band {name} = [{lo:.6g}, {hi:.6g}] contains no dyadic scale >= 2 (M={M})"
                )

    if not params.smallness_lhs < params.theta:
        raise ParamsError(
            f"smallness condition (alpha-1)/alpha + delta < alpha-1-delta violated: "
            f"{params.smallness_lhs:.6g} >= {params.theta:.6g}"
        )
    if not 0 < params.theta < 1:
        raise ParamsError(f"theta = alpha-1-delta must lie in (0, 1), got {params.theta:.6g}")

    if params.mode == "gap":
        top_minus, bottom_plus = params.minus_scales.top, params.plus_scales.bottom
        if not 4 * top_minus <= bottom_plus:
            raise ParamsError(
                f"gap bands overlap in support: 2*{top_minus} >= {bottom_plus}/2 "
                f"(need 2M^(alpha-1) < M^(1-delta)/2)"
            )

    if 2 * params.support_radius + 1 > MAX_SUPPORT_POINTS:
        raise ResourceError(
            f"M={M} needs {2 * params.support_radius + 1} kernel points, more than {MAX_SUPPORT_POINTS}"
        )

    logger.debug("validated %s", params)
    return params


def _ramp_g(u: np.ndarray) -> np.ndarray:
    return np.exp(-1.0 / u)


def w(t) -> np.ndarray:
    a = np.abs(np.asarray(t, dtype=float))
    out = np.zeros_like(a)
    out[a <= 1] = 1.0
    mid = (a > 1) & (a < 2)
    gu = _ramp_g(2 - a[mid])
    gv = _ramp_g(a[mid] - 1)
    out[mid] = gu / (gu + gv)
    return out


def wtilde(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return w(t) - w(2 * t)


@lru_cache(maxsize=256)
def psi_mass(s: int) -> float:
    y = np.arange(-2 * s, 2 * s + 1)
    return float(math.fsum(w(y / s)))


def bump(kind: str, s: float, x):
    """Evaluate the cutoff family at integer or real points x.

    w and wtilde are dilated by s. psi_normalized is w(x/s) divided by its
    mass over the integers, so it sums to one.
    Scalars in give a float back, arrays give an array.
    """
    if s < 1:
        raise ParamsError(f"bump needs s >= 1, got s={s}")
    t = np.asarray(x, dtype=float) / s
    if kind == "w":
        out = w(t)
    elif kind == "wtilde":
        out = wtilde(t)
    elif kind == "psi_normalized":
        out = w(t) / psi_mass(int(s))
    else:
        raise ParamsError(f"unknown bump kind {kind!r}, expected one of {BUMP_KINDS}")
    return float(out) if out.ndim == 0 else out
