"""Reverse Markov inequality: lower-bounding E[Y] by a coarse threshold sum.

For a bounded discrete Y in [0, beta) and a budget of D threshold levels
0 <= nu_1 <= ... <= nu_D = beta, the objective is

    F(nu) = sum_{j=1}^{D-1} nu_j * P(Y in [nu_j, nu_{j+1})).

A grid can always be chosen with F(nu) >= (1/13) * E[Y] * min(1, D / R)
where R = min(support size, 1 + log2(beta / E[Y])).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import (
    CombinatorialBlowupError,
    DegenerateInputError,
    ValidationError,
)
from .core import NORMALIZE_TOL, _as_float_array

GUARANTEE_FACTOR = 1.0 / 13.0
_MAX_BRUTE_FORCE = 1_000_000


@dataclass(frozen=True)
class DiscreteRV:
    """A discrete random variable on finitely many points of [0, beta)."""

    values: np.ndarray
    masses: np.ndarray
    beta: float

    def __init__(self, values, masses, beta):
        values = _as_float_array(values, "values")
        masses = _as_float_array(masses, "masses")
        beta = float(beta)
        if values.size != masses.size:
            raise ValidationError("values and masses must have equal length")
        if not (beta > 0 and math.isfinite(beta)):
            raise ValidationError("beta must be positive and finite")
        if np.any(values < 0) or np.any(values >= beta):
            raise ValidationError("values must lie in [0, beta)")
        if np.any(np.diff(values) <= 0):
            raise ValidationError("values must be strictly increasing")
        if np.any(masses < 0):
            raise ValidationError("masses must be non-negative")
        total = masses.sum()
        if abs(total - 1.0) > NORMALIZE_TOL:
            raise ValidationError(f"masses sum to {total!r}, not 1")
        masses = masses / total
        values.setflags(write=False)
        masses.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "beta", beta)

    def mean(self) -> float:
        return float(self.values @ self.masses)

    def support_size(self) -> int:
        return int(np.count_nonzero(self.masses > 0))

    def to_json(self) -> dict:
        return {
            "beta": self.beta,
            "atoms": [[float(v), float(m)] for v, m in zip(self.values, self.masses)],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DiscreteRV":
        try:
            beta = obj["beta"]
            atoms = obj["atoms"]
        except (TypeError, KeyError) as exc:
            raise ValidationError("rv JSON must have 'beta' and 'atoms'") from exc
        atoms = sorted((float(v), float(m)) for v, m in atoms)
        values = [v for v, _ in atoms]
        masses = [m for _, m in atoms]
        return cls(values, masses, beta)


@dataclass(frozen=True)
class ThresholdGrid:
    """A feasible grid nu_1 <= ... <= nu_D = beta plus its objective value."""

    nus: tuple[float, ...]
    achieved: float


def _check_grid(rv: DiscreteRV, nus: np.ndarray) -> None:
    if nus.size < 2:
        raise ValidationError("a grid needs at least two levels (D >= 2)")
    if np.any(nus < 0) or np.any(np.diff(nus) < -1e-15):
        raise ValidationError("grid levels must be non-negative and sorted")
    if abs(nus[-1] - rv.beta) > 1e-12:
        raise ValidationError("last grid level must equal beta")


def revmarkov_objective(rv: DiscreteRV, nus) -> float:
    """Evaluate F(nu) = sum_j nu_j P(Y in [nu_j, nu_{j+1})) over j < D."""
    nus = _as_float_array(nus, "nus")
    _check_grid(rv, nus)
    # cumulative mass strictly below each level
    below = np.searchsorted(rv.values, nus, side="left")
    cum = np.concatenate(([0.0], np.cumsum(rv.masses)))
    interval_mass = cum[below[1:]] - cum[below[:-1]]
    return float(np.dot(nus[:-1], interval_mass))


def _pad_grid(levels: list[float], out_size: int, beta: float) -> tuple[float, ...]:
    """Sorted levels -> full grid of out_size entries ending at beta."""
    levels = sorted(levels)
    if len(levels) < out_size - 1:
        # repeat the top level; empty cells contribute nothing
        top = levels[-1] if levels else 0.0
        levels = levels + [top] * (out_size - 1 - len(levels))
    return tuple(levels[: out_size - 1]) + (beta,)


def _require_positive_mean(rv: DiscreteRV) -> float:
    mean = rv.mean()
    if mean <= 0:
        raise DegenerateInputError("E[Y] = 0: no grid has positive objective")
    return mean


def reverse_markov_top(rv: DiscreteRV, out_size: int) -> ThresholdGrid:
    """Grid through the D-1 atoms with the largest value*mass products."""
    _require_positive_mean(rv)
    if out_size < 2:
        raise ValidationError("out_size must be at least 2")
    scores = rv.values * rv.masses
    # ties broken toward larger values for determinism
    order = np.lexsort((rv.values, scores))[::-1]
    chosen = [float(rv.values[i]) for i in order[: out_size - 1] if scores[i] > 0]
    if not chosen:
        chosen = [float(rv.values[-1])]
    nus = _pad_grid(chosen, out_size, rv.beta)
    return ThresholdGrid(nus=nus, achieved=revmarkov_objective(rv, nus))


def reverse_markov_geometric(rv: DiscreteRV, out_size: int) -> ThresholdGrid:
    """Best doubling grid nu_j = min(beta, x * 2^(j-1)) over candidate x."""
    _require_positive_mean(rv)
    if out_size < 2:
        raise ValidationError("out_size must be at least 2")
    positive = rv.values[(rv.values > 0) & (rv.masses > 0)]
    if positive.size == 0:
        positive = rv.values[rv.values > 0]
    candidates = sorted({float(v) / 2.0 ** t for v in positive for t in range(out_size)})
    best: ThresholdGrid | None = None
    for x in candidates:
        levels = [min(rv.beta, x * 2.0 ** j) for j in range(out_size - 1)]
        nus = _pad_grid(levels, out_size, rv.beta)
        val = revmarkov_objective(rv, nus)
        if best is None or val > best.achieved:
            best = ThresholdGrid(nus=nus, achieved=val)
    assert best is not None
    return best


def guarantee(rv: DiscreteRV, out_size: int) -> float:
    """The certified floor (1/13) E[Y] min(1, D/R), R = min(k, k')."""
    mean = _require_positive_mean(rv)
    k = rv.support_size()
    kprime = max(1.0, 1.0 + math.log2(rv.beta / mean))
    r = min(float(k), kprime)
    return GUARANTEE_FACTOR * mean * min(1.0, out_size / r)


def reverse_markov_best(rv: DiscreteRV, out_size: int) -> ThresholdGrid:
    """Better of the top-atom grid and the best doubling grid.

    Always achieves at least `guarantee(rv, out_size)`.
    """
    top = reverse_markov_top(rv, out_size)
    geo = reverse_markov_geometric(rv, out_size)
    return top if top.achieved >= geo.achieved else geo


def brute_force_revmarkov(rv: DiscreteRV, out_size: int) -> ThresholdGrid:
    """Exact optimum by enumerating grids through atom values.

    Any optimal grid may be pushed up so each level sits on an atom, and
    adding levels never decreases the objective, so enumerating all
    (D-1)-subsets of positive atom values is exhaustive.
    """
    _require_positive_mean(rv)
    if out_size < 2:
        raise ValidationError("out_size must be at least 2")
    candidates = [float(v) for v, m in zip(rv.values, rv.masses) if v > 0]
    t = min(out_size - 1, len(candidates))
    n_comb = math.comb(len(candidates), t)
    if n_comb > _MAX_BRUTE_FORCE:
        raise CombinatorialBlowupError(
            f"{n_comb} grids to enumerate exceeds the {_MAX_BRUTE_FORCE} cap"
        )
    best: ThresholdGrid | None = None
    for combo in combinations(candidates, t):
        nus = _pad_grid(list(combo), out_size, rv.beta)
        val = revmarkov_objective(rv, nus)
        if best is None or val > best.achieved:
            best = ThresholdGrid(nus=nus, achieved=val)
    assert best is not None
    return best


def tightness_instance(rho: float) -> DiscreteRV:
    """Geometric-mass instance with E[Y] = Theta(rho) on which no grid does
    much better than the guarantee.

    Y takes value 2^-i with mass r * 2^i for i in [k], r = 1/(2(2^k - 1)),
    with k scanned over [ln(1/rho), 2 ln(1/rho)] until E[Y] lands in
    [0.5 rho, 10 rho].
    """
    if not (0 < rho < 0.25):
        raise ValidationError("rho must be in (0, 0.25)")
    lo = math.ceil(math.log(1.0 / rho))
    hi = math.floor(2.0 * math.log(1.0 / rho))
    for k in range(lo, hi + 1):
        r = 1.0 / (2.0 * (2.0 ** k - 1.0))
        mean = r * k
        if 0.5 * rho <= mean <= 10.0 * rho:
            i = np.arange(k, 0, -1)  # values ascending: 2^-k ... 2^-1
            values = 2.0 ** (-i.astype(float))
            masses = r * 2.0 ** i.astype(float)
            return DiscreteRV(values=values, masses=masses, beta=1.0)
    raise DegenerateInputError(
        f"no k in [{lo}, {hi}] gives E[Y] within [0.5, 10] * rho for rho={rho}"
    )
