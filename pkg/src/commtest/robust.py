"""Robust binary testing under total-variation contamination.

The least favorable pair for TV balls of radius eps around (p, q) clips the
likelihood ratio: p_lfd / q_lfd = clamp(p/q, clip_low, clip_high). Each clip
constant solves a scalar balance equation that makes exactly eps TV mass
move, and the moved mass is redistributed inside the clipped region (the
resulting Hellinger affinity does not depend on the per-element split, so a
proportional split is used).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    Channel,
    Distribution,
    apply_channel,
    hellinger_sq,
    likelihood_ratios,
    total_variation,
)
from .errors import (
    DegenerateInputError,
    InfeasibleContaminationError,
    NonConvergenceError,
    ValidationError,
)
from .quantizer import QuantizeResult, design_hellinger_channel
from .testing import TestRule, lrt_decide

_BISECT_ITERS = 200

# Default slack constant in the moderate-contamination radius 0.01 * d_h^2 / C.
DEFAULT_RADIUS_SLACK = 10.0


@dataclass(frozen=True)
class ContaminationSetup:
    """Hypotheses p vs q with TV-contamination radius eps around each."""

    p: Distribution
    q: Distribution
    epsilon: float

    def __init__(self, p: Distribution, q: Distribution, epsilon: float):
        epsilon = float(epsilon)
        if epsilon < 0:
            raise ValidationError("epsilon must be non-negative")
        tv = total_variation(p, q)
        if epsilon >= tv / 2.0:
            raise InfeasibleContaminationError(
                f"epsilon={epsilon} >= d_TV(p,q)/2 = {tv / 2.0}: balls meet"
            )
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "epsilon", epsilon)


@dataclass(frozen=True)
class LfdPair:
    """Least favorable pair plus the ratio clip constants that define it."""

    p_lfd: Distribution
    q_lfd: Distribution
    clip_low: float
    clip_high: float

    def to_json(self) -> dict:
        return {
            "p_lfd": self.p_lfd.to_json(),
            "q_lfd": self.q_lfd.to_json(),
            "clip_low": self.clip_low,
            "clip_high": self.clip_high,
        }


def _bisect(fun, lo: float, hi: float) -> float:
    flo = fun(lo)
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        fmid = fun(mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def _solve_clip_high(p: np.ndarray, q: np.ndarray, r: np.ndarray, eps: float) -> float:
    # G(c) = sum_{r_i > c} (p_i - c q_i) - eps (1 + c): continuous, strictly
    # decreasing, G(1) = d_TV - 2 eps > 0, so the root is unique and > 1.
    def g(c: float) -> float:
        mask = r > c
        return float(p[mask].sum() - c * q[mask].sum()) - eps * (1.0 + c)

    hi = 2.0
    while g(hi) > 0:
        hi *= 2.0
        if hi > 1e18:
            raise NonConvergenceError("clip_high bracket exceeded 1e18")
    return _bisect(g, 1.0, hi)


def _solve_clip_low(p: np.ndarray, q: np.ndarray, r: np.ndarray, eps: float) -> float:
    # H(c) = sum_{r_i < c} (c q_i - p_i) - eps (1 + c): H(0) = -eps,
    # H(1) = d_TV - 2 eps > 0, first decreasing then increasing, unique root.
    def h(c: float) -> float:
        mask = r < c
        return float(c * q[mask].sum() - p[mask].sum()) - eps * (1.0 + c)

    return _bisect(h, 0.0, 1.0)


def huber_lfd(setup: ContaminationSetup) -> LfdPair:
    """Least favorable pair for the TV balls: exact eps of mass moves in each
    distribution and the LFD likelihood ratio is the clipped original ratio."""
    p = setup.p.probs.astype(float)
    q = setup.q.probs.astype(float)
    eps = setup.epsilon
    r = likelihood_ratios(setup.p, setup.q)

    if eps == 0.0:
        both = (p > 0) & (q > 0)
        return LfdPair(
            p_lfd=setup.p,
            q_lfd=setup.q,
            clip_low=float(r[both].min()),
            clip_high=float(r[both].max()),
        )

    c_hi = _solve_clip_high(p, q, r, eps)
    c_lo = _solve_clip_low(p, q, r, eps)

    p_new = p.copy()
    q_new = q.copy()

    # High region: p loses eps, q gains eps; per-element budget
    # e_i = p_i - c_hi q_i > 0 splits proportionally, E = sum e_i = eps(1+c_hi).
    high = r > c_hi
    e = p[high] - c_hi * q[high]
    e_total = e.sum()
    q_new[high] = q[high] + e * (1.0 - eps / e_total) / c_hi
    p_new[high] = c_hi * q_new[high]

    # Low region (mirror): q loses eps, p gains eps; l_i = c_lo q_i - p_i.
    low = r < c_lo
    l = c_lo * q[low] - p[low]
    l_total = l.sum()
    q_new[low] = q[low] - l * eps / l_total
    p_new[low] = c_lo * q_new[low]

    return LfdPair(
        p_lfd=Distribution(p_new),
        q_lfd=Distribution(q_new),
        clip_low=c_lo,
        clip_high=c_hi,
    )


def design_robust_channel(
    setup: ContaminationSetup, out_size: int
) -> tuple[LfdPair, QuantizeResult]:
    """LFD pair plus a Hellinger-preserving channel designed for it."""
    lfd = huber_lfd(setup)
    design = design_hellinger_channel(lfd.p_lfd, lfd.q_lfd, out_size)
    return lfd, design


def robust_decide(
    channel: Channel, lfd: LfdPair, messages: Sequence[int]
) -> str:
    """LRT between the channel images of the LFD pair; ties go to P."""
    rule = TestRule([channel])
    return lrt_decide(lfd.p_lfd, lfd.q_lfd, rule, messages)


def moderate_robustness_radius(
    p: Distribution,
    q: Distribution,
    channel: Channel,
    slack: float = DEFAULT_RADIUS_SLACK,
) -> float:
    """Contamination radius 0.01 * d_h^2(Tp, Tq) / slack below which the
    channel designed for the clean pair keeps working."""
    if slack <= 0:
        raise ValidationError("slack must be positive")
    h2 = hellinger_sq(apply_channel(channel, p), apply_channel(channel, q))
    if h2 <= 0:
        raise DegenerateInputError("channel collapses p and q; no safe radius")
    return 0.01 * h2 / slack


def example_nonrobust_instance(
    eps: float, alpha: float
) -> tuple[Distribution, Distribution, Distribution, Channel]:
    """Three-point pair where the optimal clean channel (the indicator of the
    third symbol) is blinded by an eps^(1+alpha)-small contamination of p.

    Returns (p, q, p_contaminated, blinding_channel).
    """
    if not (0 < alpha < 1):
        raise ValidationError("alpha must be in (0, 1)")
    if not (0 < eps <= 0.1):
        raise ValidationError("eps must be in (0, 0.1]")
    spike = eps ** (1.0 + alpha)
    p = Distribution([0.5 - 3 * eps - spike, 0.5 + 3 * eps, spike])
    q = Distribution([0.5, 0.5, 0.0])
    p_tilde = Distribution([0.5 - 3 * eps, 0.5 + 3 * eps, 0.0])
    channel = Channel([[0.0, 0.0, 1.0], [1.0, 1.0, 0.0]])
    return p, q, p_tilde, channel


def example_phase_transition_instance(
    eps: float, alpha: float, beta: float, delta: float
) -> tuple[Distribution, Distribution]:
    """Four-point pair whose testing difficulty jumps as the contamination
    radius crosses eps^(1+delta): d_h^2(p, q) = Theta(eps^(1+delta)) while
    the binary Scheffe reduction only sees Theta(eps^2)."""
    if not (0 < alpha < beta < delta < 1):
        raise ValidationError("need 0 < alpha < beta < delta < 1")
    if not (delta < 2 * beta - alpha):
        raise ValidationError("need delta < 2*beta - alpha")
    if not (0 < eps <= 0.01):
        raise ValidationError("eps must be in (0, 0.01]")
    ea = eps ** (1.0 + alpha)
    eb = eps ** (1.0 + beta)
    ed = eps ** (1.0 + delta)
    p = Distribution([0.5 - 2 * eps - ea + eb - ed, 0.5 + 2 * eps, ea - eb, ed])
    q = Distribution([0.5, 0.5 - ea, ea, 0.0])
    return p, q
