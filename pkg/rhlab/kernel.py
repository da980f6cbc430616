from __future__ import annotations

import dataclasses
import logging
import math
from collections.abc import Callable, Iterable
from numbers import Number
from pathlib import Path

import numpy as np
import scipy.fft
from scipy.optimize import minimize_scalar

from rhlab.errors import PreconditionError, ResourceError
from rhlab.params import MAX_SUPPORT_POINTS

logger = logging.getLogger(__name__)

DIRECT_THRESHOLD = 64
OP_NORM_OVERSAMPLING = 8
SYMBOL_OVERSAMPLING = 4


def _as_values(values) -> np.ndarray:
    values = np.array(values)
    if values.ndim != 1:
        values = values.reshape(-1)
    if np.iscomplexobj(values):
        return values.astype(complex)
    return values.astype(float)


def next_pow2(n: int) -> int:
    return 1 << max(int(n) - 1, 0).bit_length()


class Kernel:
    """A finitely supported sequence on the integers.

    ``values[i]`` is the value at ``base + i``. Zero ends are trimmed so the
    stored window is the true support. Instances are immutable.
    """

    __slots__ = ("base", "values")

    def __init__(self, base: int = 0, values: Iterable[Number] = (), trim: bool = True):
        values = _as_values(list(values) if not isinstance(values, np.ndarray) else values)
        base = int(base)
        if trim and values.size:
            nonzero = np.flatnonzero(values)
            if nonzero.size == 0:
                values, base = values[:0], 0
            else:
                lo, hi = nonzero[0], nonzero[-1]
                values, base = values[lo : hi + 1], base + int(lo)
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "values", values)

    def __setattr__(self, key, value):
        raise AttributeError("Kernel is immutable")

    @classmethod
    def zero(cls) -> Kernel:
        return cls(0, np.zeros(0))

    @classmethod
    def delta(cls, a: int = 0, c: Number = 1.0) -> Kernel:
        return cls(a, [c])

    @classmethod
    def from_points(cls, points: dict[int, Number]) -> Kernel:
        if not points:
            return cls.zero()
        lo, hi = min(points), max(points)
        dtype = complex if any(isinstance(v, complex) for v in points.values()) else float
        values = np.zeros(hi - lo + 1, dtype=dtype)
        for x, v in points.items():
            values[x - lo] += v
        return cls(lo, values)

    def __len__(self):
        return self.values.size

    def __repr__(self):
        return f"Kernel(base={self.base}, len={len(self)}, l1={self.l1():.6g})"

    @property
    def lo(self) -> int:
        return self.base

    @property
    def hi(self) -> int:
        return self.base + len(self) - 1

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)

    @property
    def is_zero(self) -> bool:
        return len(self) == 0

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values)

    def radius(self) -> int:
        if self.is_zero:
            return 0
        return max(abs(self.lo), abs(self.hi))

    def __call__(self, x):
        x = np.asarray(x, dtype=np.int64)
        idx = x - self.base
        inside = (idx >= 0) & (idx < len(self))
        out = np.zeros(x.shape, dtype=self.values.dtype)
        out[inside] = self.values[idx[inside]]
        return out.item() if out.ndim == 0 else out

    def dense(self, lo: int, hi: int) -> np.ndarray:
        return self(np.arange(lo, hi + 1))

    def _aligned(self, other: Kernel) -> tuple[int, np.ndarray, np.ndarray]:
        if self.is_zero and other.is_zero:
            return 0, self.values, other.values
        if self.is_zero:
            return other.lo, np.zeros(len(other)), other.values
        if other.is_zero:
            return self.lo, self.values, np.zeros(len(self))
        lo, hi = min(self.lo, other.lo), max(self.hi, other.hi)
        return lo, self.dense(lo, hi), other.dense(lo, hi)

    def add(self, other: Kernel) -> Kernel:
        lo, a, b = self._aligned(other)
        return Kernel(lo, a + b)

    def sub(self, other: Kernel) -> Kernel:
        lo, a, b = self._aligned(other)
        return Kernel(lo, a - b)

    def neg(self) -> Kernel:
        return Kernel(self.base, -self.values)

    def scale(self, c: Number) -> Kernel:
        return Kernel(self.base, c * self.values)

    def convolve(self, other: Kernel) -> Kernel:
        return convolve(self, other)

    __add__ = add
    __sub__ = sub
    __neg__ = neg
    __mul__ = scale
    __rmul__ = scale
    __matmul__ = convolve

    def equals(self, other) -> bool:
        if not isinstance(other, Kernel):
            return NotImplemented
        return self.base == other.base and np.array_equal(self.values, other.values)

    __eq__ = equals

    def allclose(self, other: Kernel, atol: float = 0.0, rtol: float = 0.0) -> bool:
        _, a, b = self._aligned(other)
        scale = max(np.max(np.abs(a), initial=0.0), np.max(np.abs(b), initial=0.0))
        return bool(np.all(np.abs(a - b) <= atol + rtol * scale))

    def max_abs_diff(self, other: Kernel) -> float:
        _, a, b = self._aligned(other)
        return float(np.max(np.abs(a - b), initial=0.0))

    def reflect(self) -> Kernel:
        if self.is_zero:
            return self
        return Kernel(-self.hi, self.values[::-1])

    def is_odd(self) -> bool:
        return self.equals(self.reflect().neg()) or (self.is_zero)

    def mass(self) -> Number:
        if np.iscomplexobj(self.values):
            return complex(np.sum(self.values))
        return float(np.sum(self.values))

    def l1(self) -> float:
        return float(np.sum(np.abs(self.values)))

    def l2(self) -> float:
        return math.sqrt(np.vdot(self.values, self.values).real)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values), initial=0.0))

    def real(self) -> Kernel:
        return Kernel(self.base, self.values.real)

    def multiply(self, cutoff: Callable[[np.ndarray], np.ndarray]) -> Kernel:
        if self.is_zero:
            return self
        return Kernel(self.base, self.values * cutoff(self.points))

    def window(self, lo: int, hi: int) -> Kernel:
        lo, hi = max(lo, self.lo), min(hi, self.hi)
        if self.is_zero or lo > hi:
            return Kernel.zero()
        return Kernel(lo, self.values[lo - self.base : hi - self.base + 1])

    def save(self, path: str | Path, binary: bool | None = None) -> Path:
        path = Path(path)
        if binary is None:
            binary = path.suffix != ".txt"
        if binary:
            with path.open("wb") as f:
                np.array([self.base, len(self)], dtype=np.int64).tofile(f)
                self.values.tofile(f)
            return path
        lines = [f"# base={self.base} len={len(self)}"]
        for v in self.values:
            if self.is_real:
                lines.append(format(v, ".17g"))
            else:
                lines.append(f"{v.real:.17g} {v.imag:.17g}")
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: str | Path, binary: bool | None = None) -> Kernel:
        path = Path(path)
        if binary is None:
            binary = path.suffix != ".txt"
        if binary:
            raw = path.read_bytes()
            base, length = np.frombuffer(raw[:16], dtype=np.int64)
            width = (len(raw) - 16) // length if length else 8
            dtype = np.complex128 if width == 16 else np.float64
            return cls(int(base), np.frombuffer(raw[16:], dtype=dtype).copy(), trim=False)
        lines = path.read_text(encoding="utf-8").splitlines()
        header = dict(item.split("=") for item in lines[0].lstrip("# ").split())
        rows = [line.split() for line in lines[1:] if line.strip()]
        if rows and len(rows[0]) == 2:
            values = np.array([complex(float(a), float(b)) for a, b in rows])
        else:
            values = np.array([float(r[0]) for r in rows])
        if len(values) != int(header["len"]):
            raise PreconditionError(f"{path}: header says len={header['len']}, found {len(values)} values")
        return cls(int(header["base"]), values, trim=False)


def _check_length(n: int):
    if n > MAX_SUPPORT_POINTS:
        raise ResourceError(f"convolution support of {n} points exceeds {MAX_SUPPORT_POINTS}")


def _fast_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n_out = a.size + b.size - 1
    n = scipy.fft.next_fast_len(n_out)
    if np.iscomplexobj(a) or np.iscomplexobj(b):
        return scipy.fft.ifft(scipy.fft.fft(a, n) * scipy.fft.fft(b, n))[:n_out]
    return scipy.fft.irfft(scipy.fft.rfft(a, n) * scipy.fft.rfft(b, n), n)[:n_out]


def convolve(K: Kernel, L: Kernel, method: str = "auto") -> Kernel:
    if K.is_zero or L.is_zero:
        return Kernel.zero()
    _check_length(len(K) + len(L) - 1)
    if method == "auto":
        method = "direct" if min(len(K), len(L)) <= DIRECT_THRESHOLD else "fft"
    if method == "direct":
        values = np.convolve(K.values, L.values)
    elif method == "fft":
        values = _fast_convolve(K.values, L.values)
    else:
        raise PreconditionError(f"unknown convolution method {method!r}")
    return Kernel(K.base + L.base, values)


def convolve_at(K: Kernel, L: Kernel, x: int) -> Number:
    if K.is_zero or L.is_zero:
        return 0.0
    lo = max(K.lo, x - L.hi)
    hi = min(K.hi, x - L.lo)
    if lo > hi:
        return 0.0
    k = K.values[lo - K.base : hi - K.base + 1]
    l_ = L.values[x - hi - L.base : x - lo - L.base + 1][::-1]
    return np.dot(k, l_).item()


def apply(K: Kernel, f: Kernel | Iterable[Number], base: int = 0) -> Kernel:
    if not isinstance(f, Kernel):
        f = Kernel(base, np.asarray(f), trim=False)
    return convolve(K, f)


@dataclasses.dataclass(frozen=True)
class SymbolGrid:
    N: int
    values: np.ndarray

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(self.N) / self.N

    def at(self, xi: float) -> complex:
        k = round(xi * self.N)
        if not math.isclose(k, xi * self.N, abs_tol=1e-9):
            raise PreconditionError(f"frequency {xi} is not on the grid of N={self.N}")
        return complex(self.values[k % self.N])

    def max_modulus(self) -> float:
        return float(np.max(np.abs(self.values)))


def symbol(K: Kernel, N: int) -> SymbolGrid:
    if N < 1 or N & (N - 1):
        raise PreconditionError(f"symbol needs N a power of two, got N={N}")
    if N < SYMBOL_OVERSAMPLING * len(K):
        raise PreconditionError(
            f"symbol needs N >= {SYMBOL_OVERSAMPLING}*len(K) = {SYMBOL_OVERSAMPLING * len(K)}, got N={N}"
        )
    folded = np.zeros(N, dtype=complex)
    if not K.is_zero:
        folded[K.points % N] = K.values
    return SymbolGrid(N, scipy.fft.fft(folded))


def symbol_at(K: Kernel, xi: float) -> complex:
    if K.is_zero:
        return 0j
    # reduce the phase before scaling so large supports keep full precision
    phase = np.mod(K.points * xi, 1.0)
    return complex(np.dot(K.values, np.exp(-2j * np.pi * phase)))


def refine_extremum(
    f: Callable[[float], float],
    grid_values: np.ndarray,
    N: int,
    maximize: bool = True,
) -> tuple[float, float]:
    # golden-section pass around the grid extremum; keeps the grid value if it cannot improve
    k = int(np.argmax(grid_values) if maximize else np.argmin(grid_values))
    best_xi, best = k / N, float(grid_values[k])
    sign = -1.0 if maximize else 1.0
    try:
        res = minimize_scalar(
            lambda xi: sign * f(xi),
            bracket=((k - 1) / N, k / N, (k + 1) / N),
            method="golden",
            options={"xtol": 1e-12},
        )
    except ValueError:
        # flat neighbourhood: the grid sample is already extremal
        return best_xi, best
    value = sign * float(res.fun)
    if (maximize and value > best) or (not maximize and value < best):
        return float(res.x) % 1.0, value
    return best_xi, best


def op_norm(K: Kernel) -> float:
    if K.is_zero:
        return 0.0
    N = next_pow2(max(OP_NORM_OVERSAMPLING * len(K), 8))
    grid = np.abs(symbol(K, N).values)
    _, value = refine_extremum(lambda xi: abs(symbol_at(K, xi)), grid, N, maximize=True)
    return value


def inner(K: Kernel, L: Kernel) -> Number:
    """sum over x of K(x) L(x), taken over the overlap of the two windows."""
    lo, hi = max(K.lo, L.lo), min(K.hi, L.hi)
    if K.is_zero or L.is_zero or lo > hi:
        return 0.0
    return np.dot(K.values[lo - K.base : hi - K.base + 1], L.values[lo - L.base : hi - L.base + 1]).item()
