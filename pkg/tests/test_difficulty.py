import itertools

import numpy as np
import pytest

from collrat.core import ChoiceVector
from collrat.errors import ArgumentError
from _grid_oracle import loop_rationalizable_oracle

from collrat.difficulty import (
    LoopChoice,
    RankingFunction,
    collective_wu_common_ranking_n3,
    dominance_witness,
    identify_max_difficulty_pair_n3,
    ranking_dominates,
    ranking_function,
    scan_loops,
    wu_loop_with_ranking,
)

cv = ChoiceVector.from_values


class TestRankingFunction:
    def test_examples(self):
        assert ranking_function((0.4, 0.1, 0.3)).ranks == (1, 3, 2)
        assert ranking_function((0.2, 0.2, 0.1)).ranks == (1, 1, 3)
        mu = (0.5, 0.4, 0.3, 0.2, 0.1)
        assert ranking_function(mu).ranks == (1, 2, 3, 4, 5)

    def test_empty_rejected(self):
        with pytest.raises(ArgumentError):
            ranking_function(())


class TestRankingDominance:
    SIGMA5 = RankingFunction((1, 2, 3, 4, 5))

    def test_worked_example_neither(self):
        pi = RankingFunction((1, 4, 2, 5, 3))
        assert not ranking_dominates({1, 4, 5}, {2, 3}, self.SIGMA5, pi)
        assert not ranking_dominates({2, 3}, {1, 4, 5}, self.SIGMA5, pi)

    def test_worked_example_plus_dominates(self):
        pi = RankingFunction((1, 3, 2, 5, 4))
        assert ranking_dominates({1, 3, 4}, {2, 5}, self.SIGMA5, pi)
        assert not ranking_dominates({2, 5}, {1, 3, 4}, self.SIGMA5, pi)
        assert dominance_witness({1, 3, 4}, {2, 5}, self.SIGMA5, pi) is not None

    def test_identical_sets_never_dominate(self):
        pi = RankingFunction((2, 1, 3))
        sigma = RankingFunction((1, 2, 3))
        assert not ranking_dominates({1, 2}, {1, 2}, sigma, pi)

    def test_antisymmetry_exhaustive_m4(self):
        rng = np.random.default_rng(0)
        for _ in range(12):
            sigma = ranking_function(rng.random(4))
            pi = ranking_function(rng.random(4))
            subsets = [frozenset(s) for r in range(5) for s in itertools.combinations(range(1, 5), r)]
            for A, B in itertools.product(subsets, repeat=2):
                both = ranking_dominates(A, B, sigma, pi) and ranking_dominates(B, A, sigma, pi)
                assert not both

    def test_antisymmetry_sampled_m6(self):
        rng = np.random.default_rng(1)
        for _ in range(300):
            sigma = ranking_function(rng.random(6))
            pi = ranking_function(rng.random(6))
            items = list(range(1, 7))
            A = {j for j in items if rng.random() < 0.5}
            B = {j for j in items if rng.random() < 0.5}
            assert not (
                ranking_dominates(A, B, sigma, pi) and ranking_dominates(B, A, sigma, pi)
            )


class TestLoopRationalizability:
    def test_paper_style_examples(self):
        # five-pair loop, magnitudes strictly decreasing
        rates_a = (0.95, 0.15, 0.25, 0.7, 0.55)  # J+ = {1,4,5}, J- = {2,3}
        pi_a = RankingFunction((1, 4, 2, 5, 3))
        assert wu_loop_with_ranking(LoopChoice(rates_a), pi_a).rationalizable
        rates_b = (0.95, 0.15, 0.75, 0.7, 0.45)  # J+ = {1,3,4}, J- = {2,5}
        pi_b = RankingFunction((1, 3, 2, 5, 4))
        verdict = wu_loop_with_ranking(LoopChoice(rates_b), pi_b)
        assert not verdict.rationalizable
        assert verdict.dominating == "J+"
        assert verdict.witness_box is not None

    def test_n3_closed_form(self):
        # ranking c(x1,x2) > c(x1,x3) > c(x2,x3) with preference x1 > x2 > x3:
        # rationalizable iff the long-pair magnitude beats the hardest pair's
        pi = RankingFunction((1, 3, 2))
        assert wu_loop_with_ranking(LoopChoice((0.6, 0.55, 0.35)), pi).rationalizable
        assert not wu_loop_with_ranking(LoopChoice((0.65, 0.55, 0.4)), pi).rationalizable

    def test_half_rate_flags_sufficiency_only(self):
        v = wu_loop_with_ranking(LoopChoice((0.5, 0.6, 0.4)), RankingFunction((1, 2, 3)))
        assert v.necessity_assumption_violated
        assert 1 in v.j_zero

    def test_cyclic_relabeling_invariance(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            rates = tuple(rng.random(4))
            pi = ranking_function(rng.random(4))
            base = wu_loop_with_ranking(LoopChoice(rates), pi).rationalizable
            for shift in (1, 2, 3):
                rr = rates[shift:] + rates[:shift]
                pr = pi.ranks[shift:] + pi.ranks[:shift]
                assert wu_loop_with_ranking(LoopChoice(rr), RankingFunction(pr)).rationalizable == base

    def test_grid_oracle_agreement(self):
        rng = np.random.default_rng(3)
        perms = list(itertools.permutations((1, 2, 3)))
        for _ in range(300):
            rates = tuple(rng.uniform(0.02, 0.98, size=3))
            if any(abs(r - 0.5) < 1e-3 for r in rates):
                continue
            pi = RankingFunction(perms[rng.integers(len(perms))])
            ours = wu_loop_with_ranking(LoopChoice(rates), pi).rationalizable
            assert ours == loop_rationalizable_oracle(rates, pi.ranks)


class TestCollectiveCommonRanking:
    def test_worked_examples(self):
        assert collective_wu_common_ranking_n3(cv([0.5, 0.5, 0.5]), (1, 2))
        det = cv([1.0, 0.0, 1.0])  # directed rates (1, 1, 1): weighted sum 4
        assert not collective_wu_common_ranking_n3(det, (1, 2))
        # directed (1, .5, 1) gives weighted sum 3.5: outside
        assert not collective_wu_common_ranking_n3(cv([1.0, 0.0, 0.5]), (1, 2))
        # weighted sum exactly 3 accepted (closure): directed (1, .5, .5)
        assert collective_wu_common_ranking_n3(cv([1.0, 0.5, 0.5]), (1, 2))

    def test_region_depends_only_on_hardest(self):
        rng = np.random.default_rng(4)
        for row in rng.random((50, 3)):
            rho = cv(row)
            for hardest in ((1, 2), (2, 3), (1, 3)):
                # re-deriving via the directed sum must match the routine
                d = np.array([rho.prob(1, 2), rho.prob(2, 3), rho.prob(3, 1)])
                slot = {(1, 2): 0, (2, 3): 1, (1, 3): 2}[hardest]
                expect = 1 - 1e-9 <= d.sum() + d[slot] <= 3 + 1e-9
                assert collective_wu_common_ranking_n3(rho, hardest) == expect

    def test_union_inside_cwu(self):
        rng = np.random.default_rng(5)
        from collrat.collective import facet_check_n3

        hits = 0
        for row in rng.random((4000, 3)):
            rho = cv(row)
            in_union = any(
                collective_wu_common_ranking_n3(rho, h) for h in ((1, 2), (2, 3), (1, 3))
            )
            if in_union:
                hits += 1
                assert facet_check_n3(rho, "cwu")
        assert hits > 0

    def test_identify_hardest_pair(self):
        assert identify_max_difficulty_pair_n3(cv([0.5, 0.1, 0.9])) == (1, 2)
        assert identify_max_difficulty_pair_n3(cv([0.5, 0.5, 0.5])) is None
        # mirrored instance picks a different pair via system (B)
        mirrored = cv([0.5, 0.9, 0.1])
        assert identify_max_difficulty_pair_n3(mirrored) == (1, 2)

    def test_identify_consistent_with_regions(self):
        rng = np.random.default_rng(6)
        for row in rng.random((400, 3)):
            rho = cv(row)
            p = identify_max_difficulty_pair_n3(rho)
            if p is not None:
                # exclusivity: member of p's region, outside or on the edge of others
                assert collective_wu_common_ranking_n3(rho, p)

    def test_wrong_n_rejected(self):
        with pytest.raises(ArgumentError):
            collective_wu_common_ranking_n3(cv([0.5] * 6), (1, 2))


class TestScanLoops:
    def test_reports_only_failures(self):
        # deterministic transitive data: all magnitudes tie at 1/2, so the
        # loop balance needs the long pair to carry the largest difficulty
        rho = cv([1.0, 1.0, 1.0])
        hardest_long = {(1, 2): 1.0, (1, 3): 3.0, (2, 3): 2.0}
        assert scan_loops(rho, lambda i, j: hardest_long[(i, j)], max_len=3) == []
        hardest_short = {(1, 2): 3.0, (1, 3): 1.0, (2, 3): 2.0}
        failures = scan_loops(rho, lambda i, j: hardest_short[(i, j)], max_len=3)
        assert len(failures) == 1 and failures[0]["loop"] == [1, 2, 3]

    def test_flags_failing_triple(self):
        # x1 > x2 > x3 with long-pair magnitude below the hardest short pair
        rho = cv([0.65, 0.6, 0.55])  # mu12 = .15 > mu13 = .1, hardest = (1,2)
        rank = {(1, 2): 3.0, (1, 3): 2.0, (2, 3): 1.0}
        failures = scan_loops(rho, lambda i, j: rank[(i, j)], max_len=3)
        assert len(failures) == 1
        assert failures[0]["loop"] == [1, 2, 3]

    def test_four_option_loops(self):
        rng = np.random.default_rng(7)
        rho = cv(rng.random(6))
        failures = scan_loops(rho, lambda i, j: i + j, max_len=4)
        for f in failures:
            assert 3 <= len(f["loop"]) <= 4
