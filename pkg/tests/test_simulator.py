import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chain_oracle import chain_e2e
from hehcnoma.analytic import e2e_aber
from hehcnoma.channel import SCENARIOS, sample_power_gain
from hehcnoma.protocol import EhProtocol, PowerAllocation
from hehcnoma.simulator import (
    BerEstimate,
    SimConfig,
    StoppingRule,
    TrialCounts,
    batch_rng,
    derive_batch_seed,
    detect_s1,
    run_point,
    sic_detect_s2,
)

PA = PowerAllocation.from_alpha2(0.1)
SC1 = SCENARIOS["I"]
QUICK = StoppingRule(min_errors=400, max_bits=4 * 10**6, batch_bits=1 << 17)


def z_score(est: BerEstimate, p: float) -> float:
    return (est.ber - p) / math.sqrt(p * (1 - p) / est.n_bits)


class TestDetectors:
    def test_noiseless_strong_symbol(self):
        y = math.sqrt(10.0 * 1.6 * 2.0)
        assert detect_s1(y, 2.0, 10.0, PA) == 1
        assert detect_s1(-y, 2.0, 10.0, PA) == -1

    def test_tie_goes_positive(self):
        assert detect_s1(0.0, 1.0, 1.0, PA) == 1

    @pytest.mark.parametrize("s1, s2", [(1, 1), (1, -1), (-1, 1), (-1, -1)])
    def test_exact_cancellation(self, s1, s2):
        p, g = 7.0, 0.4
        y = math.sqrt(p * g) * (math.sqrt(PA.alpha1) * s1 + math.sqrt(PA.alpha2) * s2)
        assert sic_detect_s2(y, g, p, s1, PA) == s2

    def test_wrong_first_decision_propagates(self):
        p, g = 7.0, 0.4
        y = math.sqrt(p * g) * (math.sqrt(0.9) + math.sqrt(0.1))
        residual = y - math.sqrt(p * 0.9 * g) * -1
        assert residual > 2 * math.sqrt(p * 0.9 * g) * 0.99
        assert sic_detect_s2(y, g, p, -1, PA) == np.sign(residual)

    def test_vectorised(self):
        y = np.array([-1.0, 0.0, 2.0])
        assert detect_s1(y, 1.0, 1.0, PA).tolist() == [-1, 1, 1]


class TestSeeding:
    def test_no_collisions(self):
        seeds = {derive_batch_seed(12345, i) for i in range(10_001)}
        assert len(seeds) == 10_001

    def test_masters_differ(self):
        assert derive_batch_seed(0, 0) != derive_batch_seed(1, 0)

    def test_negative_index(self):
        with pytest.raises(ValueError):
            derive_batch_seed(0, -1)

    def test_batches_uncorrelated(self):
        link = SC1.relay_link
        a = sample_power_gain(link, batch_rng(7, 0), 10**6)
        b = sample_power_gain(link, batch_rng(7, 1), 10**6)
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.01
        # lag-1 within a batch
        assert abs(np.corrcoef(a[:-1], a[1:])[0, 1]) < 0.01


counts = st.builds(
    TrialCounts,
    bits=st.integers(0, 10**6),
    relay_err_s1=st.integers(0, 1000),
    relay_err_s2=st.integers(0, 1000),
    phase2_err_u1=st.integers(0, 1000),
    phase2_err_u2=st.integers(0, 1000),
    e2e_err_u1=st.integers(0, 1000),
    e2e_err_u2=st.integers(0, 1000),
    budget_exhausted=st.booleans(),
)


class TestCounts:
    @given(counts, counts, counts)
    def test_merge_associative_commutative(self, a, b, c):
        assert (a + b) + c == a + (b + c)
        assert a + b == b + a

    def test_estimate(self):
        est = BerEstimate.from_counts(25, 10_000)
        assert est.ber == 0.0025
        assert est.ci95_halfwidth == pytest.approx(1.96 * math.sqrt(0.0025 * 0.9975 / 10_000))
        assert math.isnan(BerEstimate.from_counts(0, 0).ber)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            StoppingRule(min_errors=50)
        with pytest.raises(ValueError):
            StoppingRule(max_bits=0)
        with pytest.raises(ValueError):
            SimConfig(SC1, EhProtocol.no_eh(), PA, math.inf)
        with pytest.raises(ValueError):
            SimConfig(SC1, EhProtocol.no_eh(), PA, 10.0, master_seed=-1)


class TestRunPoint:
    def test_pure_noise_limit(self):
        cfg = SimConfig(SC1, EhProtocol.hybrid(0.1, 0.1), PA, -200.0, 3, QUICK)
        res = run_point(cfg)
        for stage in ("relay", "phase2"):
            for user in (1, 2):
                est = res.estimate(stage, user)
                assert abs(est.ber - 0.5) < 4 * math.sqrt(0.25 / est.n_bits)

    def test_budget_flag(self):
        cfg = SimConfig(SC1, EhProtocol.no_eh(), PA, 40.0, 1, StoppingRule(400, 1 << 16, 1 << 14))
        res = run_point(cfg)
        assert res.bits == 1 << 16 and res.budget_exhausted

    def test_counts_bounded_and_union(self):
        cfg = SimConfig(SCENARIOS["IV"], EhProtocol.ts(0.2), PA, 5.0, 11, QUICK)
        res = run_point(cfg)
        for user in (1, 2):
            assert res.errors("e2e", user) <= res.errors("relay", user) + res.errors("phase2", user)
            assert all(res.errors(s, user) <= res.bits for s in ("relay", "phase2", "e2e"))
        assert res.min_errors() >= 400 and not res.budget_exhausted

    def test_reproducible_across_workers(self):
        cfg = SimConfig(SC1, EhProtocol.hybrid(0.1, 0.1), PA, 10.0, 99, StoppingRule(200, 1 << 20, 1 << 15))
        serial = run_point(cfg, workers=1)
        assert run_point(cfg, workers=1) == serial
        assert run_point(cfg, workers=8) == serial
        assert run_point(cfg, workers=3) == serial

    def test_own_supply_matches_analytic(self):
        cfg = SimConfig(SC1, EhProtocol.no_eh(), PA, 20.0, 5, StoppingRule(400, 2 * 10**7))
        res = run_point(cfg)
        ref = e2e_aber(SC1, EhProtocol.no_eh(), PA, 20.0)
        for stage in ("relay", "phase2", "e2e"):
            for user in (1, 2):
                assert abs(z_score(res.estimate(stage, user), ref.get(stage, user))) < 4, (stage, user)

    @pytest.mark.parametrize("protocol", [EhProtocol.ps(0.1), EhProtocol.hybrid(0.1, 0.1)], ids=lambda p: p.label)
    def test_harvesting_stages_match_analytic(self, protocol):
        cfg = SimConfig(SC1, protocol, PA, 10.0, 8, QUICK)
        res = run_point(cfg)
        ref = e2e_aber(SC1, protocol, PA, 10.0)
        for stage in ("relay", "phase2"):
            for user in (1, 2):
                assert abs(z_score(res.estimate(stage, user), ref.get(stage, user))) < 4, (stage, user)

    @pytest.mark.parametrize("name", ["I", "IV"])
    @pytest.mark.parametrize("protocol", [EhProtocol.ts(0.1), EhProtocol.hybrid(0.1, 0.1)], ids=lambda p: p.label)
    def test_end_to_end_matches_joint_chain(self, name, protocol):
        # with harvested relay power both hops depend on the same relay gain;
        # averaging the chain jointly over that gain reproduces the simulation
        sc = SCENARIOS[name]
        res = run_point(SimConfig(sc, protocol, PA, 10.0, 21, QUICK))
        e1, e2 = chain_e2e(sc, protocol, PA, 10.0)
        assert abs(z_score(res.estimate("e2e", 1), e1)) < 4
        assert abs(z_score(res.estimate("e2e", 2), e2)) < 4
