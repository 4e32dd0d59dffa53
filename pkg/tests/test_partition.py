import math

import numpy as np
import pytest
from scipy import stats

from app.errors import PartitionDomainError
from app.models import AdjacencyStructure, ConditionalMode, Partition, SgdpParams
from app.partition import (
    AssignmentPrior,
    a_factor,
    ewens_log_prob,
    expected_cluster_count,
    full_conditional_assignment_prior,
    gdp_alloc_probs,
    joint_log_prob,
    new_cluster_prob,
    omega,
    omega_star,
    sample_prior_partition,
    set_partitions,
    sgdp_alloc_probs,
)
from tests.conftest import random_adjacency


def _random_params(rng) -> SgdpParams:
    return SgdpParams(alpha=1.0 + rng.gamma(2.0, 2.0), beta=rng.uniform(0.05, 0.95), tau=rng.uniform(0.05, 0.95))


class TestAFactor:
    def test_empty_tail(self):
        # (alpha - alpha beta) / (alpha - 1)
        assert a_factor(0, 5, 0.8) == pytest.approx(0.25)
        assert a_factor(0, 2.0, 0.5) == pytest.approx(1.0)

    def test_hand_value(self):
        assert a_factor(2, 5, 0.8) == pytest.approx(0.5)

    def test_dirichlet_case_is_one(self):
        assert a_factor(7, 4, 0.25) == pytest.approx(1.0)

    def test_undefined_denominator(self):
        with pytest.raises(PartitionDomainError):
            a_factor(0, 0.5, 0.5)


class TestParams:
    def test_alpha_must_exceed_one(self):
        with pytest.raises(PartitionDomainError):
            SgdpParams(alpha=1.0, beta=0.5)

    def test_beta_and_tau_ranges(self):
        with pytest.raises(PartitionDomainError):
            SgdpParams(alpha=2.0, beta=1.0)
        with pytest.raises(PartitionDomainError):
            SgdpParams(alpha=2.0, beta=0.5, tau=0.0)

    def test_dirichlet_constructor(self):
        p = SgdpParams.dirichlet(4.0, tau=0.3)
        assert p.beta == pytest.approx(0.25)
        assert p.is_dirichlet


class TestAllocation:
    def test_second_item(self):
        probs = gdp_alloc_probs(Partition([0]), 3.0, 0.4)
        np.testing.assert_allclose(probs, [0.4, 0.6])

    def test_first_item_has_no_rule(self):
        with pytest.raises(PartitionDomainError):
            gdp_alloc_probs(Partition([]), 2.0, 0.5)

    def test_new_cluster_single_item(self):
        assert new_cluster_prob(Partition([0]), 2.0, 0.5) == pytest.approx(0.5)

    def test_omega_star_hand_example(self):
        adj = AdjacencyStructure.from_edges(3, [(2, 0)])
        params = SgdpParams(alpha=2.0, beta=0.5, tau=0.5)
        np.testing.assert_allclose(omega_star(Partition([0, 1]), adj, params), [2 / 3, 1 / 3])

    def test_omega_hand_example(self):
        adj = AdjacencyStructure.from_edges(3, [(2, 0)])
        params = SgdpParams(alpha=2.0, beta=0.5, tau=0.5)
        np.testing.assert_allclose(omega(Partition([0, 1]), adj, params), [4 / 3, 2 / 3])

    def test_sgdp_hand_example(self):
        adj = AdjacencyStructure.from_edges(3, [(2, 0)])
        params = SgdpParams(alpha=2.0, beta=0.5, tau=0.5)
        probs = sgdp_alloc_probs(Partition([0, 1]), adj, params)
        np.testing.assert_allclose(probs, [4 / 9, 2 / 9, 1 / 3])
        np.testing.assert_allclose(gdp_alloc_probs(Partition([0, 1]), 2.0, 0.5), [1 / 3, 1 / 3, 1 / 3])

    def test_constant_similarity_weights_by_size(self):
        # every unit adjacent: omega* is the size share, so existing mass tilts toward big clusters
        params = SgdpParams(alpha=2.0, beta=0.5, tau=0.5)
        adj = AdjacencyStructure.complete(4)
        np.testing.assert_allclose(omega_star(Partition([0, 0, 1]), adj, params), [2 / 3, 1 / 3])
        np.testing.assert_allclose(sgdp_alloc_probs(Partition([0, 0, 1]), adj, params), [0.6, 0.15, 0.25])

    def test_without_similarity_is_gdp(self):
        prefix = Partition([0, 1, 0, 2])
        params = SgdpParams.gdp(3.0, 0.6)
        np.testing.assert_array_equal(
            sgdp_alloc_probs(prefix, AdjacencyStructure.complete(5), params),
            gdp_alloc_probs(prefix, 3.0, 0.6),
        )

    def test_random_configurations(self, rng):
        for _ in range(1000):
            n = int(rng.integers(2, 21))
            params = _random_params(rng)
            adj = random_adjacency(n, rng)
            prefix = sample_prior_partition(n - 1, adj, params, rng)
            probs = sgdp_alloc_probs(prefix, adj, params)
            gdp = gdp_alloc_probs(prefix, params.alpha, params.beta)
            assert probs.sum() == pytest.approx(1.0, abs=1e-12)
            assert np.all(probs > 0)
            assert probs[-1] == gdp[-1]
            assert probs[:-1].sum() == pytest.approx(gdp[:-1].sum(), abs=1e-12)
            w = omega(prefix, adj, params)
            ratio = w / omega_star(prefix, adj, params)
            np.testing.assert_allclose(ratio, ratio[0], rtol=1e-12)

    def test_adding_an_edge_raises_cluster_probability(self, rng):
        checked = 0
        while checked < 200:
            n = int(rng.integers(4, 13))
            params = _random_params(rng)
            adj = random_adjacency(n, rng, p=0.3)
            prefix = sample_prior_partition(n - 1, adj, params, rng)
            if prefix.k < 2:
                continue
            item = prefix.n
            j = int(rng.integers(prefix.k))
            members = np.flatnonzero(prefix.assignments == j)
            free = [m for m in members if not adj.adjacency[item, m]]
            if not free:
                continue
            before = sgdp_alloc_probs(prefix, adj, params)[j]
            after = sgdp_alloc_probs(prefix, adj.with_edge(item, int(free[0])), params)[j]
            assert after > before
            checked += 1


class TestJoint:
    def test_bell_numbers(self):
        assert sum(1 for _ in set_partitions(6)) == 203
        assert sum(1 for _ in set_partitions(8)) == 4140

    def test_single_item(self):
        params = SgdpParams(alpha=3.0, beta=0.5, tau=0.5)
        assert joint_log_prob(Partition([0]), AdjacencyStructure.empty(1), params) == 0.0

    @pytest.mark.parametrize("n", [3, 6, 8])
    def test_sums_to_one(self, n, rng):
        adj = random_adjacency(n, rng)
        params = SgdpParams(alpha=5.0, beta=0.9, tau=0.3)
        total = math.fsum(math.exp(joint_log_prob(Partition(z), adj, params)) for z in set_partitions(n))
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_gdp_dirichlet_case_matches_ewens(self, rng):
        adj = random_adjacency(8, rng)
        params = SgdpParams.gdp(2.0, 0.5)
        for z in set_partitions(8):
            p = Partition(z)
            expected = ewens_log_prob(p, 1.0)
            assert joint_log_prob(p, None, params) == pytest.approx(expected, abs=1e-10)
            assert joint_log_prob(p, adj, params) == pytest.approx(expected, abs=1e-10)

    def test_gdp_dirichlet_case_is_exchangeable(self):
        params = SgdpParams.gdp(3.0, 1.0 / 3.0)
        a = joint_log_prob(Partition([0, 0, 1, 2, 1]), None, params)
        b = joint_log_prob(Partition.from_labels([2, 1, 0, 0, 1]), None, params)
        assert a == pytest.approx(b, abs=1e-12)


class TestSampling:
    def test_single_item(self, rng):
        assert sample_prior_partition(1, None, SgdpParams.gdp(2.0, 0.5), rng) == Partition([0])

    def test_deterministic_for_seed(self):
        params = SgdpParams(alpha=3.0, beta=0.6, tau=0.4)
        adj = AdjacencyStructure.block_diagonal([3, 3])
        a = sample_prior_partition(6, adj, params, np.random.default_rng(5))
        b = sample_prior_partition(6, adj, params, np.random.default_rng(5))
        assert a == b

    def test_frequencies_match_joint(self):
        rng = np.random.default_rng(11)
        adj = AdjacencyStructure.from_edges(5, [(0, 1), (1, 2), (3, 4)])
        params = SgdpParams(alpha=3.0, beta=0.6, tau=0.3)
        parts = [Partition(z) for z in set_partitions(5)]
        probs = np.array([math.exp(joint_log_prob(p, adj, params)) for p in parts])
        index = {p: i for i, p in enumerate(parts)}
        draws = 20000
        counts = np.zeros(len(parts))
        for _ in range(draws):
            counts[index[sample_prior_partition(5, adj, params, rng)]] += 1
        result = stats.chisquare(counts, probs * draws)
        assert result.pvalue > 1e-3


def _enumerated_conditional(item, others, adj, params):
    k = int(others.max()) + 1
    logs = []
    for c in range(k + 1):
        full = Partition.from_labels(np.insert(others, item, c))
        logs.append(joint_log_prob(full, adj, params))
    logs = np.array(logs)
    return np.exp(logs - logs.max()) / np.exp(logs - logs.max()).sum()


class TestConditional:
    def test_exact_matches_enumeration(self, rng):
        adj = AdjacencyStructure.from_edges(5, [(0, 2), (1, 2), (2, 3), (3, 4)])
        params = SgdpParams(alpha=4.0, beta=0.7, tau=0.35)
        for z in set_partitions(5):
            for item in range(5):
                others = Partition.from_labels(np.delete(z, item)).assignments
                log_w = full_conditional_assignment_prior(item, others, adj, params)
                got = np.exp(log_w - log_w.max())
                got /= got.sum()
                expected = _enumerated_conditional(item, others, adj, params)
                np.testing.assert_allclose(got, expected, atol=1e-12)

    def test_treat_as_last_equals_exact_for_last_item(self):
        adj = AdjacencyStructure.from_edges(4, [(0, 3), (1, 2)])
        params = SgdpParams(alpha=2.5, beta=0.6, tau=0.4)
        others = np.array([0, 1, 0])
        exact = full_conditional_assignment_prior(3, others, adj, params)
        approx = full_conditional_assignment_prior(3, others, adj, params, ConditionalMode.TREAT_AS_LAST)
        exact, approx = np.exp(exact - exact.max()), np.exp(approx)
        np.testing.assert_allclose(exact / exact.sum(), approx / approx.sum(), atol=1e-12)

    def test_two_items_modes_agree(self):
        params = SgdpParams(alpha=2.5, beta=0.6, tau=0.4)
        adj = AdjacencyStructure.from_edges(2, [(0, 1)])
        for item in (0, 1):
            exact = full_conditional_assignment_prior(item, np.array([0]), adj, params)
            approx = full_conditional_assignment_prior(
                item, np.array([0]), adj, params, ConditionalMode.TREAT_AS_LAST
            )
            exact, approx = np.exp(exact - exact.max()), np.exp(approx)
            np.testing.assert_allclose(exact / exact.sum(), approx / approx.sum(), atol=1e-12)

    def test_dirichlet_gdp_is_crp(self):
        params = SgdpParams.gdp(3.0, 1.0 / 3.0)
        others = np.array([0, 0, 1, 0, 2])
        log_w = full_conditional_assignment_prior(2, others, None, params)
        w = np.exp(log_w - log_w.max())
        expected = np.array([3.0, 1.0, 1.0, 2.0])
        np.testing.assert_allclose(w / w.sum(), expected / expected.sum(), atol=1e-12)

    def test_single_item_only_new_cluster(self):
        prior = AssignmentPrior(SgdpParams(alpha=2.0, beta=0.5, tau=0.5), AdjacencyStructure.empty(1))
        np.testing.assert_array_equal(prior.log_weights(0, np.zeros(0, dtype=np.int64)), [0.0])

    @pytest.mark.parametrize("tau", [0.3, None])
    def test_scan_caches_follow_moves(self, rng, monkeypatch, tau):
        from app.partition import conditional

        builds = []
        original = conditional.prefix_statistics
        monkeypatch.setattr(
            conditional, "prefix_statistics", lambda *a: builds.append(1) or original(*a)
        )
        n = 12
        adj = random_adjacency(n, rng)
        params = SgdpParams(alpha=3.0, beta=0.6, tau=tau)
        prior = AssignmentPrior(params, adj)
        labels = Partition.from_labels(rng.integers(0, 4, size=n)).assignments
        for _ in range(60):
            i = int(rng.integers(n))
            others = Partition.from_labels(np.delete(labels, i)).assignments
            got = prior.log_weights_at(i, labels)
            joint = np.array(
                [
                    joint_log_prob(Partition.from_labels(np.insert(others, i, c)), adj, params)
                    for c in range(got.size)
                ]
            )
            np.testing.assert_allclose(got - got[0], joint - joint[0], atol=1e-10)
            c = int(rng.integers(got.size))
            labels = Partition.from_labels(np.insert(others, i, c)).assignments
            prior.move(i, labels)
        assert len(builds) == 1

    def test_weights_cached_until_tau_changes(self):
        adj = AdjacencyStructure.from_edges(3, [(0, 1)])
        prior = AssignmentPrior(SgdpParams(alpha=2.0, beta=0.5, tau=0.5), adj)
        before = prior.weights
        prior.params = prior.params.with_(alpha=3.0)
        assert prior.weights is before
        prior.params = prior.params.with_(tau=0.2)
        assert prior.weights[0, 2] == pytest.approx(0.2)


@pytest.mark.slow
class TestClusterGrowth:
    def test_plateau_when_new_clusters_are_rare(self):
        rng = np.random.default_rng(3)
        params = SgdpParams.gdp(5.05, 5.0 / 5.05)
        k400 = expected_cluster_count(400, params, 500, rng)
        k1600 = expected_cluster_count(1600, params, 500, rng)
        assert k1600 < 1.15 * k400

    def test_dirichlet_case_grows_like_crp(self):
        rng = np.random.default_rng(4)
        params = SgdpParams.gdp(2.0, 0.5)

        def crp_mean(n):
            return sum(1.0 / (1.0 + i) for i in range(n))

        k400 = expected_cluster_count(400, params, 500, rng)
        k1600 = expected_cluster_count(1600, params, 500, rng)
        assert k1600 / k400 == pytest.approx(crp_mean(1600) / crp_mean(400), rel=0.2)
