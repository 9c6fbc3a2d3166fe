import math

import numpy as np
import pytest

from commtest import (
    Channel,
    CombinatorialBlowupError,
    DegenerateInputError,
    Distribution,
    HypothesisFamily,
    StochasticFailureError,
    ValidationError,
    apply_channel,
    chi_square_inner,
    counts_sampler,
    game_sample_size,
    hadamard_instance,
    identical_channel_design,
    jl_sketch_channel,
    l1_embedding_bound_check,
    min_pairwise_tv_after,
    pairwise_indicator_reduction,
    total_variation,
    tournament_adaptive,
    tournament_nonadaptive,
    verify_identical_d2_bound,
)


def random_family(rng, m, k):
    return HypothesisFamily([Distribution(rng.dirichlet(np.ones(k))) for _ in range(m)])


class TestHypothesisFamily:
    def test_validation(self):
        d = Distribution([0.5, 0.5])
        with pytest.raises(ValidationError):
            HypothesisFamily([d])
        with pytest.raises(DegenerateInputError):
            HypothesisFamily([d, d])
        with pytest.raises(ValidationError):
            HypothesisFamily([d, Distribution([0.5, 0.3, 0.2])])

    def test_cached_statistics(self):
        fam = HypothesisFamily(
            [Distribution([0.9, 0.1]), Distribution([0.1, 0.9]),
             Distribution([0.5, 0.5])]
        )
        assert fam.m == 3 and fam.k == 2
        assert fam.min_pairwise_tv == pytest.approx(0.4)
        assert fam.min_pairwise_hellinger <= fam.max_pairwise_hellinger

    def test_json_round_trip(self):
        fam = hadamard_instance(4, 0.4)
        fam2 = HypothesisFamily.from_json(fam.to_json())
        assert fam2.m == fam.m
        assert fam2.hadamard_eps == 0.4
        assert fam2.base == fam.base


class TestHadamardInstance:
    def test_structure(self):
        fam = hadamard_instance(4, 0.4)
        assert fam.k == 8  # smallest power of two >= m + 1
        for i in range(fam.m):
            assert total_variation(fam.base, fam.dists[i]) == pytest.approx(0.2)
            for j in range(fam.m):
                expected = 0.4**2 if i == j else 0.0
                assert chi_square_inner(
                    fam.base, fam.dists[i], fam.dists[j]
                ) == pytest.approx(expected, abs=1e-12)

    def test_validation(self):
        with pytest.raises(ValidationError):
            hadamard_instance(1, 0.4)
        with pytest.raises(ValidationError):
            hadamard_instance(4, 1.0)

    def test_chi_square_needs_full_support_base(self):
        base = Distribution([1.0, 0.0])
        d = Distribution([0.5, 0.5])
        with pytest.raises(ValidationError):
            chi_square_inner(base, d, d)


class TestReduction:
    def test_pairwise_guarantee(self):
        rng = np.random.default_rng(41)
        for _ in range(20):
            fam = random_family(rng, int(rng.integers(2, 6)), int(rng.integers(2, 20)))
            chan = pairwise_indicator_reduction(fam)
            assert chan.out_size == fam.m * (fam.m - 1) // 2 + 1
            for i in range(fam.m):
                for j in range(i + 1, fam.m):
                    lhs = total_variation(
                        apply_channel(chan, fam.dists[i]),
                        apply_channel(chan, fam.dists[j]),
                    )
                    rhs = total_variation(fam.dists[i], fam.dists[j]) / fam.m**2
                    assert lhs >= rhs - 1e-12


class TestJlSketch:
    def test_membership_on_success(self):
        fam = hadamard_instance(4, 0.4)
        chan = jl_sketch_channel(fam, 3, seed=0)
        h = chan.matrix[:-1]
        assert np.all(h >= 0.0)
        assert np.all(h.sum(axis=0) <= 1.0 + 1e-12)
        assert chan.out_size == 3

    def test_failure_carries_best_attempt(self):
        fam = hadamard_instance(4, 0.4)
        with pytest.raises(StochasticFailureError) as exc_info:
            jl_sketch_channel(fam, 3, seed=0, max_retries=5, accept=1e6)
        err = exc_info.value
        assert err.best is not None
        assert err.best_score == pytest.approx(
            min_pairwise_tv_after(err.best, fam)
        )

    def test_out_size_validation(self):
        fam = hadamard_instance(4, 0.4)
        with pytest.raises(ValidationError):
            jl_sketch_channel(fam, 1)

    def test_deterministic_given_seed(self):
        fam = hadamard_instance(4, 0.4)
        c1 = jl_sketch_channel(fam, 3, seed=5)
        c2 = jl_sketch_channel(fam, 3, seed=5)
        assert np.array_equal(c1.matrix, c2.matrix)


class TestIdenticalDesign:
    def test_identity_wins_when_alphabet_fits(self):
        fam = HypothesisFamily(
            [Distribution([0.9, 0.1]), Distribution([0.1, 0.9])]
        )
        chan, score = identical_channel_design(fam, 3, seed=0)
        # the identity embedding preserves everything, so nothing beats it
        assert score == pytest.approx(fam.min_pairwise_tv)

    def test_composed_route_beats_direct_for_large_alphabets(self):
        # k >> M^2: reducing to pairwise indicators first preserves far more
        wins = 0
        for s in range(10):
            rng = np.random.default_rng(2000 + s)
            fam = random_family(rng, 3, 200)

            def sketch_score(f, pre, seed):
                try:
                    ch = jl_sketch_channel(f, 4, seed=seed, max_retries=20)
                except StochasticFailureError as err:
                    ch = err.best
                full = ch if pre is None else ch.compose(pre)
                return min_pairwise_tv_after(full, fam)

            direct = sketch_score(fam, None, s)
            red = pairwise_indicator_reduction(fam)
            reduced = HypothesisFamily([apply_channel(red, d) for d in fam.dists])
            wins += sketch_score(reduced, red, s + 1) > direct
        assert wins >= 5


class TestTournaments:
    def test_game_sample_size_formula(self):
        fam = hadamard_instance(4, 0.4)
        rho_sq = fam.min_pairwise_hellinger**2
        r = 1.0 + min(float(fam.k), max(1.0, math.log2(1.0 / rho_sq))) / 2.0
        expected = math.ceil(4.0 * math.log(16 / 0.1) * r / rho_sq)
        assert game_sample_size(fam, 2) == expected

    def test_nonadaptive_structure_and_recovery(self):
        fam = hadamard_instance(4, 0.4)
        tr = tournament_nonadaptive(fam, 2, counts_sampler(fam.dists[2]), seed=9)
        m_games = fam.m * (fam.m - 1) // 2
        assert len(tr.games) == m_games
        assert tr.total_samples == m_games * game_sample_size(fam, 2)
        assert tr.winner == 2
        assert not tr.ambiguous

    def test_adaptive_structure_and_recovery(self):
        fam = hadamard_instance(8, 0.4)
        tr = tournament_adaptive(fam, 2, counts_sampler(fam.dists[5]), seed=9)
        assert len(tr.games) == fam.m - 1
        assert tr.total_samples == (fam.m - 1) * game_sample_size(fam, 2)
        assert tr.winner == 5

    def test_deterministic_transcripts(self):
        fam = hadamard_instance(4, 0.3)
        t1 = tournament_nonadaptive(fam, 2, counts_sampler(fam.dists[0]), seed=3)
        t2 = tournament_nonadaptive(fam, 2, counts_sampler(fam.dists[0]), seed=3)
        assert t1.to_json() == t2.to_json()


class TestVerifiers:
    def test_binary_squeeze_small_family(self):
        fam = hadamard_instance(4, 0.4)  # k = 8
        rep = verify_identical_d2_bound(fam)
        assert rep.exhaustive
        assert rep.constant <= 3.0 * math.sqrt(2.0)
        assert 0 <= rep.witness_pair[0] < rep.witness_pair[1] < fam.m

    def test_binary_squeeze_alphabet_cap(self):
        rng = np.random.default_rng(44)
        fam = random_family(rng, 3, 17)
        with pytest.raises(CombinatorialBlowupError):
            verify_identical_d2_bound(fam)

    def test_l1_embedding_bound(self):
        fam = hadamard_instance(8, 0.4)
        rng = np.random.default_rng(45)
        for _ in range(20):
            m = rng.random((3, fam.k)) + 1e-3
            chan = Channel(m / m.sum(axis=0))
            holds, slack = l1_embedding_bound_check(fam, chan)
            assert holds and slack >= -1e-12

    def test_l1_embedding_needs_base(self):
        fam = HypothesisFamily(
            [Distribution([0.9, 0.1]), Distribution([0.1, 0.9])]
        )
        with pytest.raises(ValidationError):
            l1_embedding_bound_check(fam, Channel.identity(2))
