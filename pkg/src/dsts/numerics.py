"""Dense float64 tensors, deterministic RNG, and a finite-difference oracle.

Tensors are plain ``numpy.ndarray`` values in C (row-major) order with dtype
float64; every function in the package produces and consumes that layout.
No implicit broadcasting beyond scalar-tensor arithmetic is relied upon so
that every backward pass stays auditable by hand.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, DegenerateInputError, ShapeError

Tensor = np.ndarray

_U64 = 0xFFFFFFFFFFFFFFFF


def tensor_create(shape: Sequence[int], fill: float = 0.0) -> Tensor:
    """Return a row-major float64 tensor of `shape` with every element = fill."""
    shape = tuple(int(s) for s in shape)
    if any(s < 0 for s in shape):
        raise ShapeError(f"axis lengths must be >= 0, got {list(shape)}")
    return np.full(shape, float(fill), dtype=np.float64)


def as_tensor(values) -> Tensor:
    """Coerce nested sequences / arrays to a contiguous float64 tensor."""
    return np.ascontiguousarray(np.asarray(values, dtype=np.float64))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product with 64-bit accumulation; inner axes must agree."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects rank-2 operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner axes differ: {a.shape} vs {b.shape}")
    return a @ b


def reduce(x: Tensor, axis: int, kind: str) -> Tensor:
    """Reduce `x` along `axis` with 'sum', 'mean', or 'max'; the axis is removed."""
    x = np.asarray(x, dtype=np.float64)
    if not 0 <= axis < x.ndim:
        raise ShapeError(f"axis {axis} out of range for rank {x.ndim}")
    if kind == "sum":
        return np.sum(x, axis=axis)
    if x.shape[axis] == 0:
        raise DegenerateInputError(f"cannot take {kind} over empty axis {axis}")
    if kind == "mean":
        return np.mean(x, axis=axis)
    if kind == "max":
        return np.max(x, axis=axis)
    raise ConfigError(f"unknown reduction kind {kind!r}")


def finite_diff_grad(f: Callable[[Tensor], float], x: Tensor, h: float = 1e-5) -> Tensor:
    """Central-difference gradient of a scalar function at `x`.

    g_j = (f(x + h*e_j) - f(x - h*e_j)) / (2h), evaluated independently per
    element. Serves as the independent oracle for every hand-derived backward
    pass in the package and therefore never shares code with them.
    """
    if not h > 0:
        raise ConfigError(f"finite-difference step must be > 0, got {h}")
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for j in range(flat.size):
        orig = flat[j]
        flat[j] = orig + h
        f_plus = float(f(x))
        flat[j] = orig - h
        f_minus = float(f(x))
        flat[j] = orig
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise DegenerateInputError(
                f"objective not finite near perturbed element {j}: {f_plus}, {f_minus}"
            )
        gflat[j] = (f_plus - f_minus) / (2.0 * h)
    return grad


def mix64(x: int) -> int:
    """SplitMix64 finalizer; scrambles an index into a well-spread 64-bit word."""
    x = (x + 0x9E3779B97F4A7C15) & _U64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _U64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _U64
    return x ^ (x >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Stateless per-index seed: seed XOR mix64(index).

    Lets parallel units (samples, epochs) draw from independent streams that
    depend only on (seed, index), never on generation order.
    """
    return (int(seed) & _U64) ^ mix64(int(index))


class Rng:
    """Deterministic counter-based generator (Philox 4x64).

    Identical seeds yield identical draw sequences across runs and platforms;
    substreams are derived with :func:`derive_seed` rather than by sharing
    state.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _U64
        self._gen = np.random.Generator(np.random.Philox(key=self.seed))

    def uniform(self, low: float, high: float, size=None) -> Tensor:
        return self._gen.uniform(low, high, size=size)

    def normal(self, loc: float = 0.0, scale: float = 1.0, size=None) -> Tensor:
        return self._gen.normal(loc, scale, size=size)

    def integers(self, low: int, high: int, size=None):
        """Draw integers uniformly from [low, high)."""
        return self._gen.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def spawn(self, index: int) -> "Rng":
        """Independent substream for the given index (see derive_seed)."""
        return Rng(derive_seed(self.seed, index))
