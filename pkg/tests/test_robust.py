import numpy as np
import pytest

from commtest import (
    Channel,
    ContaminationSetup,
    DegenerateInputError,
    Distribution,
    InfeasibleContaminationError,
    ValidationError,
    apply_channel,
    design_robust_channel,
    example_nonrobust_instance,
    example_phase_transition_instance,
    hellinger_affinity,
    hellinger_sq,
    huber_lfd,
    likelihood_ratios,
    moderate_robustness_radius,
    robust_decide,
    scheffe_channel,
    total_variation,
)


class TestContaminationSetup:
    def test_infeasible_radius(self):
        p = Distribution([0.75, 0.25])
        q = Distribution([0.25, 0.75])
        # d_TV = 0.5, so eps >= 0.25 makes the balls meet
        with pytest.raises(InfeasibleContaminationError):
            ContaminationSetup(p, q, 0.25)
        ContaminationSetup(p, q, 0.24)

    def test_negative_radius(self):
        p = Distribution([0.8, 0.2])
        q = Distribution([0.2, 0.8])
        with pytest.raises(ValidationError):
            ContaminationSetup(p, q, -0.1)


class TestHuberLfd:
    def test_bernoulli_textbook_example(self):
        setup = ContaminationSetup(
            Distribution([0.8, 0.2]), Distribution([0.2, 0.8]), 0.1
        )
        lfd = huber_lfd(setup)
        assert lfd.p_lfd.probs == pytest.approx([0.7, 0.3], abs=1e-9)
        assert lfd.q_lfd.probs == pytest.approx([0.3, 0.7], abs=1e-9)

    def test_zero_radius_passthrough(self):
        p = Distribution([0.8, 0.2])
        q = Distribution([0.2, 0.8])
        lfd = huber_lfd(ContaminationSetup(p, q, 0.0))
        assert lfd.p_lfd == p and lfd.q_lfd == q
        assert lfd.clip_low == pytest.approx(0.25)
        assert lfd.clip_high == pytest.approx(4.0)

    def test_feasibility_and_clip_structure(self):
        rng = np.random.default_rng(31)
        done = 0
        while done < 50:
            k = int(rng.integers(2, 8))
            p = Distribution(rng.dirichlet(np.ones(k)))
            q = Distribution(rng.dirichlet(np.ones(k)))
            eps = float(rng.uniform(0.0, 0.45)) * total_variation(p, q)
            try:
                setup = ContaminationSetup(p, q, eps)
            except InfeasibleContaminationError:
                continue
            lfd = huber_lfd(setup)
            assert total_variation(p, lfd.p_lfd) <= eps + 1e-9
            assert total_variation(q, lfd.q_lfd) <= eps + 1e-9
            clamped = np.clip(likelihood_ratios(p, q), lfd.clip_low, lfd.clip_high)
            got = likelihood_ratios(lfd.p_lfd, lfd.q_lfd)
            both = (lfd.p_lfd.probs > 0) & (lfd.q_lfd.probs > 0)
            assert got[both] == pytest.approx(clamped[both], rel=1e-7)
            # LFDs are the hardest pair: affinity can only increase
            assert hellinger_affinity(lfd.p_lfd, lfd.q_lfd) >= hellinger_affinity(
                p, q
            ) - 1e-12
            done += 1

    def test_json(self):
        setup = ContaminationSetup(
            Distribution([0.8, 0.2]), Distribution([0.2, 0.8]), 0.05
        )
        obj = huber_lfd(setup).to_json()
        assert set(obj) == {"p_lfd", "q_lfd", "clip_low", "clip_high"}


class TestRobustDesign:
    def test_design_and_decide(self):
        setup = ContaminationSetup(
            Distribution([0.8, 0.2]), Distribution([0.2, 0.8]), 0.1
        )
        lfd, design = design_robust_channel(setup, 2)
        assert design.ratio_achieved <= design.bound
        # a run of clearly P-ish messages should decide P
        tp = apply_channel(design.channel, lfd.p_lfd).probs
        heavy = int(np.argmax(tp))
        assert robust_decide(design.channel, lfd, [heavy] * 10) == "P"

    def test_regime_change_selects_different_channels(self):
        # contamination radius eps^(1+gamma); crossing gamma over delta
        # changes the shape of the LFDs and with it the preserved Hellinger
        eps, alpha, beta, delta = 1e-3, 0.2, 0.45, 0.5
        p, q = example_phase_transition_instance(eps, alpha, beta, delta)
        h2 = {}
        for gamma in (0.9 * delta + 0.1 * beta, 2 * delta):
            lfd, design = design_robust_channel(
                ContaminationSetup(p, q, eps ** (1.0 + gamma)), 2
            )
            h2[gamma] = hellinger_sq(
                apply_channel(design.channel, lfd.p_lfd),
                apply_channel(design.channel, lfd.q_lfd),
            )
        ratio = max(h2.values()) / min(h2.values())
        assert ratio >= 2.0


class TestModerateRadius:
    def test_positive_and_scales_with_slack(self):
        p = Distribution([0.8, 0.2])
        q = Distribution([0.2, 0.8])
        chan = Channel.identity(2)
        r10 = moderate_robustness_radius(p, q, chan, slack=10.0)
        r20 = moderate_robustness_radius(p, q, chan, slack=20.0)
        assert r10 > 0
        assert r10 == pytest.approx(2 * r20)
        assert r10 == pytest.approx(0.001 * hellinger_sq(p, q))

    def test_collapsing_channel_raises(self):
        p = Distribution([0.8, 0.2])
        q = Distribution([0.2, 0.8])
        collapse = Channel(np.full((2, 2), 0.5))
        with pytest.raises(DegenerateInputError):
            moderate_robustness_radius(p, q, collapse)

    def test_bad_slack(self):
        p = Distribution([0.8, 0.2])
        q = Distribution([0.2, 0.8])
        with pytest.raises(ValidationError):
            moderate_robustness_radius(p, q, Channel.identity(2), slack=0.0)

    def test_lfd_design_survives_moderate_contamination(self):
        # below the moderate radius, the channel designed for the clean pair
        # still separates the contaminated pair
        p = Distribution([0.8, 0.2])
        q = Distribution([0.2, 0.8])
        from commtest import design_hellinger_channel

        chan = design_hellinger_channel(p, q, 2).channel
        radius = moderate_robustness_radius(p, q, chan)
        lfd = huber_lfd(ContaminationSetup(p, q, radius))
        h2_cont = hellinger_sq(
            apply_channel(chan, lfd.p_lfd), apply_channel(chan, lfd.q_lfd)
        )
        h2_clean = hellinger_sq(apply_channel(chan, p), apply_channel(chan, q))
        assert h2_cont >= 0.5 * h2_clean


class TestExamples:
    def test_nonrobust_blinding_identity(self):
        p, q, p_tilde, chan = example_nonrobust_instance(0.01, 0.5)
        # the clean-optimal channel is blinded: T p~ == T q
        assert apply_channel(chan, p_tilde).probs == pytest.approx(
            apply_channel(chan, q).probs, abs=1e-12
        )
        # yet it separates the clean pair
        assert hellinger_sq(apply_channel(chan, p), apply_channel(chan, q)) > 0
        assert total_variation(p, p_tilde) <= 0.01 ** 1.5 + 1e-12

    def test_nonrobust_validation(self):
        with pytest.raises(ValidationError):
            example_nonrobust_instance(0.2, 0.5)  # eps too large
        with pytest.raises(ValidationError):
            example_nonrobust_instance(0.01, 1.5)  # alpha out of range

    def test_phase_transition_validation(self):
        # the strict constraint delta < 2*beta - alpha must hold
        with pytest.raises(ValidationError):
            example_phase_transition_instance(0.01, 0.2, 0.4, 0.7)
        with pytest.raises(ValidationError):
            example_phase_transition_instance(0.01, 0.5, 0.4, 0.6)
        with pytest.raises(ValidationError):
            example_phase_transition_instance(0.02, 0.2, 0.5, 0.7)

    def test_phase_transition_bands(self):
        alpha, beta, delta = 0.2, 0.5, 0.7
        for eps in (1e-2, 1e-3):
            p, q = example_phase_transition_instance(eps, alpha, beta, delta)
            band = hellinger_sq(p, q) / eps ** (1.0 + delta)
            assert 0.1 <= band <= 10.0
            sch = scheffe_channel(p, q)
            band_s = (
                hellinger_sq(apply_channel(sch, p), apply_channel(sch, q)) / eps**2
            )
            assert 0.1 <= band_s <= 10.0
