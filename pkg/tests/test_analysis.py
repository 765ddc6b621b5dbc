import numpy as np
import pytest

from imidyn.analysis import (
    ConditionReport,
    check_advantage,
    check_imitation_condition,
    check_monotone,
    check_positive_correlation,
    is_population_equilibrium,
    lyapunov_distance,
    oscillation_period,
    tail_stats,
    twin_ratio_series,
)
from imidyn.core import Trajectory
from imidyn.dynamics import mother_field, replicator_field
from imidyn.games import GameError, HypnodiskParams, MatrixGame, constant_game
from imidyn.protocols import AdoptionRule, RevisionProtocol, SelectionRule
from imidyn.cli import interior_sample
from conftest import interior_states

RPS = MatrixGame([[0, -2, 1], [1, 0, -2], [-2, 1, 0]])
# two exact twins between a stronger and a weaker constant-payoff strategy
C4 = constant_game([1.0, 0.8, 0.8, 0.6])

LIST3_PW = RevisionProtocol(SelectionRule("list_sample", m=3), AdoptionRule("pairwise"))
MAJ3_PW = RevisionProtocol(SelectionRule("majority", m=3), AdoptionRule("pairwise"))
RETRY4_SUCC = RevisionProtocol(SelectionRule("retry_other", m=4), AdoptionRule("success"))


class TestConditionReport:
    def test_verdict_validation(self):
        with pytest.raises(ValueError):
            ConditionReport("x", "maybe", 1)
        with pytest.raises(ValueError):
            ConditionReport("x", "fails", 1)  # no witness
        rep = ConditionReport("x", "holds", 3)
        assert rep.holds and rep.to_json()["samples"] == 3


def test_population_equilibrium():
    assert is_population_equilibrium(RPS, np.full(3, 1 / 3))
    assert not is_population_equilibrium(RPS, np.array([0.5, 0.3, 0.2]))
    # unsupported strategies may earn anything
    assert is_population_equilibrium(MatrixGame([[1, 1], [5, 5]]), np.array([0.0, 1.0]))


class TestPositiveCorrelation:
    def test_holds_for_replicator(self):
        rep = check_positive_correlation(replicator_field(RPS), RPS, interior_states(3, 50, seed=31))
        assert rep.holds
        assert rep.samples == 50

    def test_fails_on_equal_payoffs_with_drift(self):
        # retry selection moves mass even when every payoff is identical,
        # so the correlation is exactly zero while the state moves
        game = constant_game([1.0, 1.0])
        field = mother_field(RETRY4_SUCC, game)
        rep = check_positive_correlation(field, game, [np.array([0.3, 0.7])])
        assert rep.verdict == "fails"
        assert rep.witness is not None
        assert abs(rep.witness["correlation"]) < 1e-9


class TestMonotone:
    def test_holds_for_replicator_on_random_games(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            g = MatrixGame(rng.uniform(-1, 1, size=(3, 3)))
            rep = check_monotone(replicator_field(g), g, interior_states(3, 20, seed=8))
            assert rep.holds

    def test_fails_for_rare_favouring_selection(self):
        field = mother_field(LIST3_PW, C4)
        rep = check_monotone(field, C4, interior_sample(4, 60, seed=2))
        assert rep.verdict == "fails"
        assert "percapita_growth" in rep.witness


class TestAdvantage:
    def test_rarity_holds_strict_for_list_sampling(self):
        field = mother_field(LIST3_PW, C4)
        states = interior_sample(4, 60, seed=3)
        rep = check_advantage(field, C4, states, "rarity", LIST3_PW)
        assert rep.holds
        assert rep.details["strictness_AR1"] and rep.details["strictness_AR2"]
        assert check_advantage(field, C4, states, "frequency", LIST3_PW).verdict == "fails"

    def test_frequency_holds_for_majority_sampling(self):
        field = mother_field(MAJ3_PW, C4)
        states = interior_sample(4, 60, seed=4)
        rep = check_advantage(field, C4, states, "frequency", MAJ3_PW)
        assert rep.holds
        assert check_advantage(field, C4, states, "rarity", MAJ3_PW).verdict == "fails"

    def test_neutral_for_fair_selection(self):
        proto = RevisionProtocol(SelectionRule("fair"), AdoptionRule("pairwise"))
        field = mother_field(proto, C4)
        states = interior_sample(4, 40, seed=5)
        for mode in ("rarity", "frequency"):
            rep = check_advantage(field, C4, states, mode, proto)
            assert rep.holds
            assert not rep.details["strictness_AR1"]

    def test_requires_declared_twins(self):
        with pytest.raises(GameError):
            check_advantage(replicator_field(RPS), RPS, [np.full(3, 1 / 3)], "rarity")

    def test_rejects_unknown_mode(self):
        with pytest.raises(ValueError):
            check_advantage(mother_field(LIST3_PW, C4), C4, [], "fastest")


class TestImitationCondition:
    def test_holds_for_pairwise_on_rps(self):
        proto = RevisionProtocol(SelectionRule("fair"), AdoptionRule("pairwise"))
        rep = check_imitation_condition(proto, RPS, interior_states(3, 30, seed=6))
        assert rep.holds

    def test_fails_when_adoption_ignores_strategies(self):
        # a product rule whose maps vanish below a payoff cutoff leaves
        # the weaker strategies with neither inflow nor outflow
        cutoff = lambda v: max(v - 0.9, 0.0)
        proto = RevisionProtocol(
            SelectionRule("fair"), AdoptionRule("product", f=cutoff, g=cutoff)
        )
        game = constant_game([1.0, 0.5, 0.4])
        rep = check_imitation_condition(proto, game, [np.full(3, 1 / 3)])
        assert rep.verdict == "fails"

    def test_inconclusive_at_equilibria_only(self):
        proto = RevisionProtocol(SelectionRule("fair"), AdoptionRule("pairwise"))
        rep = check_imitation_condition(proto, RPS, [np.full(3, 1 / 3)])
        assert rep.verdict == "inconclusive"


class TestTrajectoryStatistics:
    def periodic(self, n=400, T=40.0):
        t = np.linspace(0.0, T, n)
        x = 0.5 + 0.2 * np.sin(2 * np.pi * t / 8.0)
        return Trajectory(t, np.column_stack([x, 1.0 - x]))

    def test_tail_stats_constant(self):
        t = np.linspace(0, 10, 500)
        s = np.tile([0.3, 0.7], (500, 1))
        ts = tail_stats(Trajectory(t, s))
        assert np.allclose(ts.minimum, [0.3, 0.7])
        assert np.allclose(ts.mean, [0.3, 0.7])

    def test_tail_stats_periodic_mean(self):
        ts = tail_stats(self.periodic(), window_fraction=0.4)
        assert ts.mean[0] == pytest.approx(0.5, abs=0.02)
        assert ts.minimum[0] < 0.35 and ts.maximum[0] > 0.65

    def test_tail_needs_samples(self):
        t = np.linspace(0, 1, 20)
        with pytest.raises(ValueError):
            tail_stats(Trajectory(t, np.tile([0.5, 0.5], (20, 1))))

    def test_oscillation_period(self):
        traj = self.periodic()
        p = oscillation_period(traj.times, traj.states[:, 0])
        assert p == pytest.approx(8.0, abs=0.2)
        flat = np.full(100, 0.5)
        assert oscillation_period(np.linspace(0, 10, 100), flat) is None

    def test_twin_ratio_series(self):
        t = np.linspace(0, 5, 50)
        x3 = np.linspace(0.1, 0.2, 50)
        x4 = np.linspace(0.3, 0.2, 50)
        rest = 1.0 - x3 - x4
        states = np.column_stack([rest / 2, rest / 2, x3, x4])
        series = twin_ratio_series(Trajectory(t, states), 2, 3)
        assert series.monotone_toward_one
        assert series.terminal_gap < 1e-9
        assert series.valid.all()

    def test_twin_ratio_flags_vanishing_denominator(self):
        t = np.array([0.0, 1.0])
        states = np.array([[0.5, 0.25, 0.25, 0.0], [0.5, 0.25, 0.25, 0.0]])
        series = twin_ratio_series(Trajectory(t, states), 2, 3)
        assert not series.valid.any()
        assert np.isnan(series.terminal_gap)


def test_lyapunov_distance_with_twin_grouping():
    params = HypnodiskParams(np.full(3, 1 / 3), 0.05, 0.1)
    x = [1 / 3, 1 / 3, 1 / 6, 1 / 6]
    assert lyapunov_distance(x, params, [(0,), (1,), (2, 3)]) == pytest.approx(0.0, abs=1e-12)
    y = [1 / 3 + 0.06, 1 / 3 - 0.03, 1 / 6 - 0.015, 1 / 6 - 0.015]
    d = lyapunov_distance(y, params, [(0,), (1,), (2, 3)])
    assert d == pytest.approx(np.sqrt(0.06**2 + 2 * 0.03**2), abs=1e-12)
