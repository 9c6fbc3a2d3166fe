"""Distributions, channels and f-divergences on finite alphabets.

Conventions used throughout:

- a distribution is a length-k probability vector over the alphabet {0,...,k-1};
- a channel is a column-stochastic D x k matrix T; the output law is T @ p;
- I_f(p, q) = sum_i q_i * f(p_i / q_i) with 0 * f(0/0) = 0 and
  0 * f(a/0) = a * lim_{u->inf} f(u)/u.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError, ValidationError

# Input vectors are renormalized if they are within NORMALIZE_TOL of summing
# to one, rejected otherwise; after construction sums hold to STRICT_TOL.
NORMALIZE_TOL = 1e-9
STRICT_TOL = 1e-12


def _as_float_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValidationError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class Distribution:
    """A probability vector over a finite alphabet."""

    probs: np.ndarray

    def __init__(self, probs):
        arr = _as_float_array(probs, "probs")
        if np.any(arr < 0):
            raise ValidationError("probabilities must be non-negative")
        total = arr.sum()
        if abs(total - 1.0) > NORMALIZE_TOL:
            raise ValidationError(f"probabilities sum to {total!r}, not 1")
        arr = arr / total
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    @property
    def k(self) -> int:
        return self.probs.size

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.probs > 0)

    def to_json(self) -> dict:
        return {"probs": self.probs.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "Distribution":
        if not isinstance(obj, dict) or "probs" not in obj:
            raise ValidationError("distribution JSON must be an object with a 'probs' key")
        return cls(obj["probs"])

    def __eq__(self, other):
        return isinstance(other, Distribution) and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())


@dataclass(frozen=True)
class Channel:
    """A column-stochastic matrix mapping alphabet [k] to outputs [D]."""

    matrix: np.ndarray

    def __init__(self, matrix):
        arr = np.asarray(matrix, dtype=float)
        if arr.ndim != 2:
            raise ValidationError(f"channel matrix must be 2-d, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("channel matrix contains non-finite entries")
        if np.any(arr < 0):
            raise ValidationError("channel entries must be non-negative")
        sums = arr.sum(axis=0)
        if np.any(np.abs(sums - 1.0) > NORMALIZE_TOL):
            raise ValidationError("channel columns must each sum to 1")
        arr = arr / sums
        arr.setflags(write=False)
        object.__setattr__(self, "matrix", arr)

    @property
    def out_size(self) -> int:
        return self.matrix.shape[0]

    @property
    def in_size(self) -> int:
        return self.matrix.shape[1]

    def is_deterministic(self, tol: float = STRICT_TOL) -> bool:
        return bool(np.all(np.abs(self.matrix.max(axis=0) - 1.0) <= tol))

    def compose(self, inner: "Channel") -> "Channel":
        """Channel applying `inner` first, then this channel."""
        if self.in_size != inner.out_size:
            raise DimensionError(
                f"cannot compose: inner output size {inner.out_size} != input size {self.in_size}"
            )
        return Channel(self.matrix @ inner.matrix)

    def to_json(self) -> dict:
        return {
            "rows": self.out_size,
            "cols": self.in_size,
            "data": [float(x) for x in self.matrix.reshape(-1)],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Channel":
        try:
            rows, cols, data = obj["rows"], obj["cols"], obj["data"]
        except (TypeError, KeyError) as exc:
            raise ValidationError("channel JSON must have 'rows', 'cols', 'data'") from exc
        arr = np.asarray(data, dtype=float)
        if arr.size != rows * cols:
            raise ValidationError("channel data length does not match rows*cols")
        return cls(arr.reshape(rows, cols))

    @classmethod
    def identity(cls, k: int, out_size: int | None = None) -> "Channel":
        """Identity embedding of [k]; extra output symbols (if any) stay unused."""
        d = k if out_size is None else out_size
        if d < k:
            raise ValidationError("identity channel needs out_size >= k")
        m = np.zeros((d, k))
        m[:k, :k] = np.eye(k)
        return cls(m)


def apply_channel(channel: Channel, dist: Distribution) -> Distribution:
    if channel.in_size != dist.k:
        raise DimensionError(
            f"channel expects alphabet size {channel.in_size}, distribution has {dist.k}"
        )
    out = channel.matrix @ dist.probs
    out = np.clip(out, 0.0, None)
    return Distribution(out / out.sum())


@dataclass(frozen=True)
class ThresholdSet:
    """Sorted positive thresholds 0 < g_1 <= ... <= g_{D-1} < inf on the
    likelihood ratio axis; repeated values produce empty (unused) cells."""

    values: np.ndarray

    def __init__(self, values):
        arr = _as_float_array(values, "thresholds")
        if np.any(arr <= 0):
            raise ValidationError("thresholds must be strictly positive")
        if np.any(np.diff(arr) < 0):
            raise ValidationError("thresholds must be sorted non-decreasing")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def out_size(self) -> int:
        return self.values.size + 1

    def to_json(self) -> dict:
        return {"thresholds": self.values.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "ThresholdSet":
        if not isinstance(obj, dict) or "thresholds" not in obj:
            raise ValidationError("threshold JSON must be an object with a 'thresholds' key")
        return cls(obj["thresholds"])


def geometric_threshold_set(x: float, out_size: int) -> ThresholdSet:
    """Thresholds x, 2x, 4x, ..., 2^(D-2) x for a D-output channel."""
    if out_size < 2:
        raise ValidationError("out_size must be at least 2")
    if not (x > 0 and math.isfinite(x)):
        raise ValidationError("x must be a positive finite number")
    return ThresholdSet(x * 2.0 ** np.arange(out_size - 1))


def likelihood_ratios(p: Distribution, q: Distribution) -> np.ndarray:
    """Pointwise p_i/q_i with 0/0 -> 0 and a/0 -> inf."""
    _check_same_alphabet(p, q)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = p.probs / q.probs
    r = np.where((q.probs == 0) & (p.probs == 0), 0.0, r)
    r = np.where((q.probs == 0) & (p.probs > 0), np.inf, r)
    return r


def threshold_channel(p: Distribution, q: Distribution, gamma: ThresholdSet) -> Channel:
    """Deterministic channel labelling x by which ratio cell p(x)/q(x) lands in.

    Cell j collects ratios in [g_j, g_{j+1}) with g_0 = 0, g_D = inf; points
    with q(x) = 0 < p(x) go to the top cell.
    """
    ratios = likelihood_ratios(p, q)
    d = gamma.out_size
    labels = np.searchsorted(gamma.values, ratios, side="right")
    labels[np.isinf(ratios)] = d - 1
    m = np.zeros((d, p.k))
    m[labels, np.arange(p.k)] = 1.0
    return Channel(m)


def _check_same_alphabet(p: Distribution, q: Distribution) -> None:
    if p.k != q.k:
        raise DimensionError(f"alphabet mismatch: {p.k} vs {q.k}")


# --------------------------------------------------------------------------
# f-divergences


@dataclass(frozen=True)
class FDivergenceSpec:
    """A generator f plus the constants certifying it is well behaved:

    f convex, f(1) = 0, the symmetry x*f(y/x) = y*f(x/y), and the sandwich
    c1 * x**alpha <= f(1 + x) <= c2 * x**alpha for x in [0, kappa].

    `at_zero` is f(0) and `slope_at_inf` is lim_{u->inf} f(u)/u; either may
    be inf.
    """

    name: str
    f: Callable[[float], float] = field(compare=False)
    kappa: float
    c1: float
    c2: float
    alpha: float
    at_zero: float
    slope_at_inf: float

    def evaluate(self, x: float) -> float:
        if x < 0:
            raise ValidationError("f is only defined on [0, inf)")
        if x == 0:
            return self.at_zero
        return float(self.f(x))


def _sym_kl_generator(x: float) -> float:
    return (x - 1.0) * math.log(x)


_BUILTINS: dict[str, FDivergenceSpec] = {
    "hellinger": FDivergenceSpec(
        name="hellinger",
        f=lambda x: (math.sqrt(x) - 1.0) ** 2,
        kappa=1.0,
        c1=2.0 ** -3.5,
        c2=1.0,
        alpha=2.0,
        at_zero=1.0,
        slope_at_inf=1.0,
    ),
    "tv": FDivergenceSpec(
        name="tv",
        f=lambda x: 0.5 * abs(x - 1.0),
        kappa=1.0,
        c1=0.5,
        c2=0.5,
        alpha=1.0,
        at_zero=0.5,
        slope_at_inf=0.5,
    ),
    "sym_kl": FDivergenceSpec(
        name="sym_kl",
        f=_sym_kl_generator,
        kappa=1.0,
        c1=0.5,
        c2=1.0,
        alpha=2.0,
        at_zero=math.inf,
        slope_at_inf=math.inf,
    ),
    "triangular": FDivergenceSpec(
        name="triangular",
        f=lambda x: (x - 1.0) ** 2 / (1.0 + x),
        kappa=1.0,
        c1=1.0 / 3.0,
        c2=0.5,
        alpha=2.0,
        at_zero=1.0,
        slope_at_inf=1.0,
    ),
}


def sym_chi_spec(s: float) -> FDivergenceSpec:
    """Symmetrized chi^s generator |x-1|^s + x^{1-s} |x-1|^s, s in [1, 2]."""
    if not (1.0 <= s <= 2.0):
        raise ValidationError("sym_chi order s must lie in [1, 2]")
    return FDivergenceSpec(
        name=f"sym_chi_{s:g}",
        f=lambda x: abs(x - 1.0) ** s * (1.0 + x ** (1.0 - s)),
        kappa=1.0,
        c1=1.0,
        c2=3.0,
        alpha=s,
        at_zero=2.0 if s == 1.0 else math.inf,
        slope_at_inf=2.0 if s == 1.0 else math.inf,
    )


def builtin_fdiv(name: str) -> FDivergenceSpec:
    """Look up a built-in generator; sym_chi takes its order as a suffix,
    e.g. "sym_chi_1.5"."""
    if name in _BUILTINS:
        return _BUILTINS[name]
    if name.startswith("sym_chi_"):
        try:
            s = float(name[len("sym_chi_"):])
        except ValueError as exc:
            raise ValidationError(f"bad sym_chi order in {name!r}") from exc
        return sym_chi_spec(s)
    raise ValidationError(
        f"unknown f-divergence {name!r}; available: "
        f"{sorted(_BUILTINS)} or sym_chi_<s>"
    )


def f_divergence(spec: FDivergenceSpec, p: Distribution, q: Distribution) -> float:
    _check_same_alphabet(p, q)
    total = 0.0
    for pi, qi in zip(p.probs, q.probs):
        if qi > 0:
            total += qi * spec.evaluate(pi / qi)
        elif pi > 0:
            if spec.slope_at_inf == 0:
                continue
            total += pi * spec.slope_at_inf
        # pi == qi == 0 contributes nothing
    return float(total)


def hellinger_affinity(p: Distribution, q: Distribution) -> float:
    _check_same_alphabet(p, q)
    return float(np.sqrt(p.probs * q.probs).sum())


def hellinger_sq(p: Distribution, q: Distribution) -> float:
    """Squared Hellinger distance sum (sqrt(p_i) - sqrt(q_i))^2 = 2(1 - affinity)."""
    _check_same_alphabet(p, q)
    return float(((np.sqrt(p.probs) - np.sqrt(q.probs)) ** 2).sum())


def total_variation(p: Distribution, q: Distribution) -> float:
    _check_same_alphabet(p, q)
    return float(0.5 * np.abs(p.probs - q.probs).sum())
