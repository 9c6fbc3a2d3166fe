"""Seeded verification suites for the package's structural guarantees.

Each suite returns a list of CheckResult records (name, pass/fail, measured
value, slack detail) and is deterministic given its seed. The CLI `verify`
command and the acceptance tests drive these.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import mary, quantizer, revmarkov, robust, testing
from .core import (
    Channel,
    Distribution,
    apply_channel,
    builtin_fdiv,
    f_divergence,
    hellinger_affinity,
    hellinger_sq,
    likelihood_ratios,
    total_variation,
)
from .errors import DegenerateInputError, InfeasibleContaminationError, ValidationError

SUITE_NAMES = ("facts", "reverse-markov", "quantizer", "robust", "mary", "tightness")


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        def plain(v):
            if isinstance(v, (bool, np.bool_)):
                return bool(v)
            if isinstance(v, (int, np.integer)):
                return int(v)
            if isinstance(v, (float, np.floating)):
                return float(v)
            if isinstance(v, (list, tuple, np.ndarray)):
                return [plain(x) for x in v]
            return v

        return {
            "name": self.name,
            "passed": bool(self.passed),
            "value": float(self.value),
            "detail": {k: plain(v) for k, v in sorted(self.detail.items())},
        }


def _random_dist(rng: np.random.Generator, k: int, zero_prob: float = 0.0) -> Distribution:
    a = rng.dirichlet(np.ones(k) * rng.uniform(0.2, 2.0))
    if zero_prob and rng.random() < zero_prob:
        a[rng.integers(0, k)] = 0.0
        a = a / a.sum()
    return Distribution(a)


def _random_channel(rng: np.random.Generator, k: int, d: int) -> Channel:
    m = rng.random((d, k)) + 1e-3
    return Channel(m / m.sum(axis=0))


# --------------------------------------------------------------------------


def facts_suite(seed: int = 0, pairs: int = 1000, k_max: int = 32,
                grid_points: int = 1000) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    results: list[CheckResult] = []
    specs = [builtin_fdiv(n) for n in
             ("hellinger", "tv", "sym_kl", "triangular", "sym_chi_1.5")]

    # Fact family on random pairs: TV/Hellinger sandwich, subadditivity,
    # tensorization, data processing.
    worst = {"sandwich": 0.0, "subadd": 0.0, "tensor": 0.0, "dpi": 0.0}
    for _ in range(pairs):
        k = int(rng.integers(2, k_max + 1))
        p = _random_dist(rng, k, zero_prob=0.2)
        q = _random_dist(rng, k, zero_prob=0.2)
        tv, h2 = total_variation(p, q), hellinger_sq(p, q)
        worst["sandwich"] = max(worst["sandwich"], tv * tv - h2, h2 - 2.0 * tv)

        n_fac = int(rng.integers(2, 4))
        factors = [(p, q)] + [
            (_random_dist(rng, k, 0.2), _random_dist(rng, k, 0.2))
            for _ in range(n_fac - 1)
        ]
        prod_p = factors[0][0].probs
        prod_q = factors[0][1].probs
        for a, b in factors[1:]:
            prod_p = np.kron(prod_p, a.probs)
            prod_q = np.kron(prod_q, b.probs)
        pp, qq = Distribution(prod_p), Distribution(prod_q)
        worst["subadd"] = max(
            worst["subadd"],
            total_variation(pp, qq) - sum(total_variation(a, b) for a, b in factors),
        )
        affin = math.prod(hellinger_affinity(a, b) for a, b in factors)
        worst["tensor"] = max(worst["tensor"], abs(hellinger_affinity(pp, qq) - affin))

        t = _random_channel(rng, k, int(rng.integers(2, k + 1)))
        for spec in specs:
            num = f_divergence(spec, p, q)
            den = f_divergence(spec, apply_channel(t, p), apply_channel(t, q))
            if math.isinf(num):
                continue
            worst["dpi"] = max(worst["dpi"], den - num)
    for name in ("sandwich", "subadd", "tensor", "dpi"):
        results.append(CheckResult(f"fact_{name}", worst[name] <= 1e-10, worst[name]))

    # Bernoulli Hellinger sandwich.
    worst_b = 0.0
    for _ in range(pairs):
        a, b = np.sort(rng.uniform(0.0, 0.5, 2))
        dh = math.sqrt(hellinger_sq(Distribution([a, 1 - a]), Distribution([b, 1 - b])))
        gap = math.sqrt(b) - math.sqrt(a)
        worst_b = max(worst_b, gap - dh, dh - math.sqrt(2.0) * gap)
    results.append(CheckResult("bernoulli_sandwich", worst_b <= 1e-10, worst_b))

    # Generator constants on a dense grid, plus symmetry and f(1) = 0.
    for spec in specs + [builtin_fdiv("sym_chi_1"), builtin_fdiv("sym_chi_2")]:
        xs = np.linspace(0.0, spec.kappa, grid_points)
        worst_g = abs(spec.evaluate(1.0))
        for x in xs:
            fx = spec.evaluate(1.0 + x)
            mono = x ** spec.alpha
            worst_g = max(worst_g, spec.c1 * mono - fx, fx - spec.c2 * mono)
        for _ in range(200):
            x, y = rng.uniform(0.01, 5.0, 2)
            lhs, rhs = x * spec.evaluate(y / x), y * spec.evaluate(x / y)
            worst_g = max(worst_g, abs(lhs - rhs) / max(1.0, abs(lhs)))
        results.append(
            CheckResult(f"generator_constants_{spec.name}", worst_g <= 1e-10, worst_g)
        )
    return results


# --------------------------------------------------------------------------


def _random_rv(rng: np.random.Generator, k_max: int = 12) -> revmarkov.DiscreteRV:
    k = int(rng.integers(1, k_max + 1))
    vals = np.unique(rng.uniform(0.0, 1.0, k))
    masses = rng.dirichlet(np.ones(vals.size))
    return revmarkov.DiscreteRV(vals, masses, 1.0)


def reverse_markov_suite(seed: int = 0, n_rvs: int = 500) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    worst_guar = math.inf   # min of achieved - guarantee
    worst_dom = math.inf    # min of brute - best
    worst_eq = 0.0          # max |best - brute| when D-1 >= k
    worst_fwd = 0.0         # forward Markov violation
    for _ in range(n_rvs):
        rv = _random_rv(rng)
        if rv.mean() <= 0:
            continue
        for d in (2, 4, 8):
            best = revmarkov.reverse_markov_best(rv, d)
            floor = revmarkov.guarantee(rv, d)
            brute = revmarkov.brute_force_revmarkov(rv, d)
            worst_guar = min(worst_guar, best.achieved - floor)
            worst_dom = min(worst_dom, brute.achieved - best.achieved)
            if d - 1 >= rv.support_size():
                worst_eq = max(worst_eq, abs(best.achieved - brute.achieved))
            delta = float(rng.uniform(0.0, 1.0))
            tail = rv.masses[rv.values >= delta].sum()
            worst_fwd = max(worst_fwd, delta * tail - rv.mean())
    return [
        CheckResult("guarantee_floor", worst_guar >= -1e-15, worst_guar),
        CheckResult("oracle_dominance", worst_dom >= -1e-12, worst_dom),
        CheckResult("exact_when_budget_large", worst_eq <= 1e-12, worst_eq),
        CheckResult("forward_markov", worst_fwd <= 1e-12, worst_fwd),
    ]


def tightness_suite(seed: int = 0,
                    rhos: tuple[float, ...] = (1e-3, 1e-4, 1e-5)) -> list[CheckResult]:
    results: list[CheckResult] = []
    oracle_ratios: dict[float, float] = {}
    spec_h = builtin_fdiv("hellinger")
    for rho in rhos:
        rv = revmarkov.tightness_instance(rho)
        k, mean = rv.support_size(), rv.mean()
        r = 1.0 / (2.0 * (2.0 ** k - 1.0))
        ident = max(abs(rv.masses.sum() - 1.0), abs(mean - r * k))
        results.append(CheckResult(f"identities_rho_{rho:g}", ident <= 1e-12, ident))

        kprime = 1.0 + math.log2(1.0 / mean)
        r_big = max(float(k), kprime)
        worst2 = -math.inf  # part 2: brute / (4 E D / R) - 1, want <= 0
        worst1 = -math.inf  # part 1 functional vs 200 E[X^2] D / R
        x_vals = np.sqrt(rv.values)
        ex2 = float((rv.values * rv.masses).sum())
        per_delta = []
        for dv in x_vals:
            mask = x_vals >= dv - 1e-15
            tail = rv.masses[mask].sum()
            cond = float((x_vals[mask] * rv.masses[mask]).sum()) / tail
            per_delta.append(tail * cond * cond)
        per_delta = np.sort(np.asarray(per_delta))[::-1]
        for d in range(2, max(2, int(0.1 * k)) + 1):
            brute = revmarkov.brute_force_revmarkov(rv, d)
            worst2 = max(worst2, brute.achieved / (4.0 * mean * d / r_big) - 1.0)
            part1 = float(per_delta[: d - 1].sum())
            worst1 = max(worst1, part1 / (200.0 * ex2 * d / r_big) - 1.0)
        results.append(CheckResult(f"threshold_sum_ceiling_rho_{rho:g}", worst2 <= 0.0, worst2))
        results.append(CheckResult(f"conditional_mean_ceiling_rho_{rho:g}", worst1 <= 0.0, worst1))

        # Preservation-loss trend: oracle ratio on the Hellinger-tight
        # pair at D=2; the per-rho constant ratio/(R/D) is recorded.
        p, q = quantizer.hell_tight_instance(rho)
        h2 = hellinger_sq(p, q)
        e_bound = float((rv.values / 2.0 * rv.masses).sum())
        sandwich_ok = 0.02 * e_bound - 1e-12 <= h2 <= e_bound + 1e-12
        results.append(CheckResult(f"hell_sandwich_rho_{rho:g}", sandwich_ok, h2,
                                   {"lower": 0.02 * e_bound, "upper": e_bound}))
        oracle = quantizer.brute_force_threshold_channel(spec_h, p, q, 2)
        kq = 2 * k
        kq_prime = max(1.0, math.log2(4.0 / h2))
        r_over_d = min(float(kq), kq_prime) / 2.0
        oracle_ratios[rho] = oracle.ratio_achieved
        results.append(CheckResult(
            f"tight_ratio_rho_{rho:g}", True, oracle.ratio_achieved,
            {"measured_constant": oracle.ratio_achieved / r_over_d, "r_over_d": r_over_d},
        ))
    if len(rhos) >= 2:
        ordered = [oracle_ratios[r] for r in sorted(rhos, reverse=True)]
        monotone = all(a < b for a, b in zip(ordered, ordered[1:]))
        growth = ordered[-1] / ordered[0]
        results.append(CheckResult("tight_ratio_monotone", monotone and growth >= 1.2,
                                   growth))
    return results


# --------------------------------------------------------------------------


def quantizer_suite(seed: int = 0, pairs: int = 1000,
                    oracle_pairs: int = 500) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    results: list[CheckResult] = []
    spec_h = builtin_fdiv("hellinger")

    worst_frac = 0.0   # ratio_achieved / bound, want <= 1
    worst_lb = math.inf
    done = 0
    while done < pairs:
        k = int(rng.integers(2, 25))
        p = _random_dist(rng, k, zero_prob=0.3)
        q = _random_dist(rng, k, zero_prob=0.3)
        if hellinger_sq(p, q) < 1e-12:
            continue
        d = int(rng.choice([2, 3, 4, 8]))
        res = quantizer.design_hellinger_channel(p, q, d)
        worst_frac = max(worst_frac, res.ratio_achieved / res.bound)
        worst_lb = min(worst_lb, res.ratio_achieved)
        done += 1
    results.append(CheckResult("hellinger_ceiling", worst_frac <= 1.0, worst_frac))
    results.append(CheckResult("ratio_at_least_one", worst_lb >= 1.0 - 1e-10, worst_lb))

    worst_dom = math.inf
    done = 0
    while done < oracle_pairs:
        k = int(rng.integers(2, 11))
        p = _random_dist(rng, k)
        q = _random_dist(rng, k)
        if hellinger_sq(p, q) < 1e-12:
            continue
        d = int(rng.choice([2, 3]))
        res = quantizer.design_hellinger_channel(p, q, d)
        orc = quantizer.brute_force_threshold_channel(spec_h, p, q, d)
        worst_dom = min(worst_dom, res.ratio_achieved - orc.ratio_achieved,
                        res.bound - orc.ratio_achieved)
        done += 1
    results.append(CheckResult("oracle_dominance", worst_dom >= -1e-9, worst_dom))

    # General-generator ceiling for sym_kl / triangular on full-support
    # instances (nu > 0 keeps f(nu) finite).
    for name in ("sym_kl", "triangular"):
        spec = builtin_fdiv(name)
        worst = 0.0
        done = 0
        while done < 200:
            k = int(rng.integers(2, 17))
            a = rng.dirichlet(np.ones(k)) + 0.01
            b = rng.dirichlet(np.ones(k)) + 0.01
            p, q = Distribution(a / a.sum()), Distribution(b / b.sum())
            d = int(rng.choice([2, 3, 4]))
            try:
                res = quantizer.design_fdiv_channel(spec, p, q, d)
            except DegenerateInputError:
                continue
            worst = max(worst, res.ratio_achieved / res.bound)
            done += 1
        results.append(CheckResult(f"general_ceiling_{name}", worst <= 1.0, worst))
    return results


# --------------------------------------------------------------------------


def robust_suite(seed: int = 0, setups: int = 200) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    results: list[CheckResult] = []
    worst_feas = 0.0
    worst_struct = 0.0
    worst_affin = 0.0
    done = 0
    while done < setups:
        k = int(rng.integers(2, 9))
        p = _random_dist(rng, k, zero_prob=0.2)
        q = _random_dist(rng, k, zero_prob=0.2)
        eps = float(rng.uniform(0.0, 0.45)) * total_variation(p, q)
        try:
            setup = robust.ContaminationSetup(p, q, eps)
        except InfeasibleContaminationError:
            continue
        lfd = robust.huber_lfd(setup)
        worst_feas = max(
            worst_feas,
            total_variation(p, lfd.p_lfd) - eps,
            total_variation(q, lfd.q_lfd) - eps,
        )
        ratios = likelihood_ratios(p, q)
        lfd_ratios = likelihood_ratios(lfd.p_lfd, lfd.q_lfd)
        both = (lfd.p_lfd.probs > 0) & (lfd.q_lfd.probs > 0)
        clamped = np.clip(ratios, lfd.clip_low, lfd.clip_high)
        rel = np.abs(lfd_ratios[both] - clamped[both]) / np.maximum(1.0, clamped[both])
        worst_struct = max(worst_struct, float(rel.max(initial=0.0)))
        worst_affin = max(
            worst_affin,
            hellinger_affinity(p, q) - hellinger_affinity(lfd.p_lfd, lfd.q_lfd),
        )
        done += 1
    results.append(CheckResult("lfd_feasibility", worst_feas <= 1e-9, worst_feas))
    results.append(CheckResult("lfd_clip_structure", worst_struct <= 1e-7, worst_struct))
    results.append(CheckResult("lfd_affinity_monotone", worst_affin <= 1e-12, worst_affin))

    # Blinding instance: the clean-optimal channel cannot tell the
    # contaminated p from q.
    p, q, p_tilde, t_star = robust.example_nonrobust_instance(0.01, 0.5)
    gap = float(np.max(np.abs(
        apply_channel(t_star, p_tilde).probs - apply_channel(t_star, q).probs)))
    results.append(CheckResult("blinding_identity", gap <= 1e-12, gap))

    # Phase-transition pair: Hellinger scale eps^(1+delta), Scheffe eps^2.
    for eps in (1e-2, 1e-3):
        pp, qq = robust.example_phase_transition_instance(eps, 0.2, 0.5, 0.7)
        h2 = hellinger_sq(pp, qq)
        band = h2 / eps ** 1.7
        sch = testing.scheffe_channel(pp, qq)
        h2s = hellinger_sq(apply_channel(sch, pp), apply_channel(sch, qq))
        band_s = h2s / eps ** 2
        results.append(CheckResult(f"phase_hellinger_band_eps_{eps:g}",
                                   0.1 <= band <= 10.0, band))
        results.append(CheckResult(f"phase_scheffe_band_eps_{eps:g}",
                                   0.1 <= band_s <= 10.0, band_s))
    return results


# --------------------------------------------------------------------------


def mary_suite(seed: int = 0, tournament_trials: int = 200,
               channel_checks: int = 500, jl_seeds: int = 100) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    results: list[CheckResult] = []

    # Pairwise-indicator reduction guarantee.
    worst = math.inf
    done = 0
    while done < 200:
        m = int(rng.integers(2, 7))
        k = int(rng.integers(2, 41))
        try:
            fam = mary.HypothesisFamily(
                [_random_dist(rng, k) for _ in range(m)])
        except DegenerateInputError:
            continue
        t = mary.pairwise_indicator_reduction(fam)
        for i in range(m):
            for j in range(i + 1, m):
                lhs = total_variation(
                    apply_channel(t, fam.dists[i]), apply_channel(t, fam.dists[j]))
                rhs = total_variation(fam.dists[i], fam.dists[j]) / m ** 2
                worst = min(worst, lhs - rhs)
        done += 1
    results.append(CheckResult("reduction_guarantee", worst >= -1e-12, worst))

    # Hadamard instance structure.
    fam4 = mary.hadamard_instance(4, 0.4)
    worst_o = 0.0
    for i in range(fam4.m):
        for j in range(fam4.m):
            chi = mary.chi_square_inner(fam4.base, fam4.dists[i], fam4.dists[j])
            target = 0.4 ** 2 if i == j else 0.0
            worst_o = max(worst_o, abs(chi - target))
        worst_o = max(worst_o, abs(total_variation(fam4.base, fam4.dists[i]) - 0.2))
    results.append(CheckResult("hadamard_orthogonality", worst_o <= 1e-10, worst_o))
    worst_tv = min(total_variation(a, b)
                   for idx, a in enumerate(fam4.dists) for b in fam4.dists[idx + 1:])
    results.append(CheckResult("hadamard_min_tv", worst_tv >= 0.01 * 0.4, worst_tv))

    # JL sketch: single-draw success rate and membership constants on success.
    succ = 0
    worst_member = 0.0
    d = 3
    d_prime = d - 1
    q2 = mary.JL_NOISE_SCALE * math.sqrt(math.log(fam4.k * d_prime))
    q1 = mary.JL_COLUMN_SCALE * d_prime
    member_floor = d_prime + 10.0 * math.sqrt(d_prime * math.log(fam4.k)) / q2
    for s in range(jl_seeds):
        try:
            ch = mary.jl_sketch_channel(fam4, d, seed=s, max_retries=1)
        except mary.StochasticFailureError:
            continue
        succ += 1
        h = ch.matrix[:-1]
        worst_member = max(
            worst_member,
            float(-h.min(initial=0.0)),
            float(h.sum(axis=0).max() - 1.0),
        )
        assert q2 >= 10.0 * math.sqrt(math.log(fam4.k * d_prime)) - 1e-12
        assert q1 >= member_floor - 1e-12
    results.append(CheckResult("jl_success_rate", succ >= 0.6 * jl_seeds, float(succ),
                               {"seeds": jl_seeds}))
    results.append(CheckResult("jl_membership", worst_member <= 0.0, worst_member))

    # Average-TV embedding bound over random channels.
    fam8 = mary.hadamard_instance(8, 0.4)
    worst_slack = math.inf
    for _ in range(channel_checks):
        d_out = int(rng.integers(2, 6))
        ch = _random_channel(rng, fam8.k, d_out)
        ok, slack = mary.l1_embedding_bound_check(fam8, ch)
        worst_slack = min(worst_slack, slack)
        if not ok:
            break
    results.append(CheckResult("l1_embedding_bound", worst_slack >= -1e-12, worst_slack))

    # Binary-channel squeeze (exhaustive deterministic channels).
    rep = mary.verify_identical_d2_bound(fam8, channel_samples=200, seed=seed)
    limit = 3.0 * math.sqrt(2.0)
    results.append(CheckResult("binary_squeeze_constant", rep.constant <= limit,
                               rep.constant, {"witness": list(rep.witness_pair)}))

    # Tournaments: truth recovery rate on Hadamard families.
    for m, flavor in ((4, "nonadaptive"), (8, "adaptive")):
        fam = mary.hadamard_instance(m, 0.4)
        wins = 0
        for t in range(tournament_trials):
            truth = t % m
            sampler = mary.counts_sampler(fam.dists[truth])
            if flavor == "nonadaptive":
                tr = mary.tournament_nonadaptive(fam, 2, sampler, seed=seed + 1000 + t)
                ok = tr.winner == truth and not tr.ambiguous
            else:
                tr = mary.tournament_adaptive(fam, 2, sampler, seed=seed + 1000 + t)
                ok = tr.winner == truth
            wins += ok
        rate = wins / tournament_trials
        results.append(CheckResult(f"tournament_{flavor}_m{m}", rate >= 0.85, rate))
    return results


SUITES = {
    "facts": facts_suite,
    "reverse-markov": reverse_markov_suite,
    "quantizer": quantizer_suite,
    "robust": robust_suite,
    "mary": mary_suite,
    "tightness": tightness_suite,
}


def run_suite(name: str, seed: int = 0, **kwargs) -> list[CheckResult]:
    if name not in SUITES:
        raise ValidationError(f"unknown suite {name!r}; choose from {SUITE_NAMES}")
    return SUITES[name](seed=seed, **kwargs)
