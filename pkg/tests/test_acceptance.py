"""End-to-end acceptance checks.

Each test covers one headline behavior of the library at its stated
tolerance and prints a single PASS/FAIL line so the suite output doubles
as a checklist.  These are intentionally heavier than the unit tests;
the whole module runs in a few minutes.
"""
import time

import numpy as np
import pytest

from imidyn.analysis import tail_stats, twin_ratio_series
from imidyn.cli import cmd_verify, interior_sample
from imidyn.core import distance_to_center, validate_state
from imidyn.dynamics import asymptotic_share, mother_field, replicator_field, smith_field, _share_curve
from imidyn.games import HypnodiskParams, MatrixGame, constant_game, hypnodisk_game, rps_feeble_twin
from imidyn.integrate import IntegratorConfig, integrate
from imidyn.protocols import AdoptionRule, RevisionProtocol, SelectionRule, selection_prob, selection_prob_mc
from conftest import interior_states

PARAMS = HypnodiskParams(np.full(3, 1 / 3), 0.05, 0.1)


def _report(label: str, ok: bool, detail: str, t0: float, budget: float):
    elapsed = time.perf_counter() - t0
    status = "PASS" if ok and elapsed < budget else "FAIL"
    print(f"[{status}] {label}: {detail} ({elapsed:.1f}s, budget {budget:.0f}s)")
    assert ok, f"{label}: {detail}"
    assert elapsed < budget, f"{label}: runtime {elapsed:.1f}s over budget {budget:.0f}s"


def test_acceptance_1_protocol_identities():
    """Fair selection with success / dissatisfaction / pairwise adoption
    reproduces the replicator field; uniform selection with pairwise
    adoption reproduces the Smith field divided by the strategy count."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    protos = [
        RevisionProtocol(SelectionRule("fair"), AdoptionRule("success")),
        RevisionProtocol(SelectionRule("fair"), AdoptionRule("dissatisfaction")),
        RevisionProtocol(SelectionRule("fair"), AdoptionRule("pairwise")),
    ]
    uniform_pw = RevisionProtocol(SelectionRule("uniform"), AdoptionRule("pairwise"))
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 6))
        game = MatrixGame(rng.uniform(-2.0, 2.0, size=(n, n)))
        x = validate_state(0.95 * rng.dirichlet(np.ones(n)) + 0.05 / n)
        v_rep = replicator_field(game)(x)
        v_smith = smith_field(game)(x)
        for proto in protos:
            worst = max(worst, float(np.max(np.abs(mother_field(proto, game)(x) - v_rep))))
        worst = max(worst, float(np.max(np.abs(mother_field(uniform_pw, game)(x) - v_smith / n))))
    _report("criterion 1 protocol identities", worst < 1e-12, f"max abs error {worst:.2e}", t0, 10.0)


def test_acceptance_2_sampling_oracles():
    """Exact selection probabilities agree with the Monte Carlo sampler
    within 4 standard errors at one million samples, and the sampling
    rules order candidates by rarity (list sampling) or frequency
    (majority sampling) at every tested state."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    samples = 1_000_000
    worst_se = 0.0
    ordering_ok = True
    for kind in ("list_sample", "majority"):
        for m in range(1, 7):
            for n in (2, 3, 4):
                for _ in range(20):
                    x = validate_state(0.9 * rng.dirichlet(np.ones(n)) + 0.1 / n)
                    i = int(rng.integers(n))
                    rule = SelectionRule(kind, m=m)
                    exact = selection_prob(rule, i, x)
                    mc, se = selection_prob_mc(rule, i, x, samples=samples, seed=int(rng.integers(2**31)))
                    dev = np.abs(mc - exact) / np.maximum(se, 1e-12)
                    dev[i] = 0.0
                    worst_se = max(worst_se, float(dev.max()))
                    # rarity / frequency ordering of the selection odds
                    for a in range(n):
                        for b in range(n):
                            if a in (b, i) or b == i or not x[a] < x[b]:
                                continue
                            lhs, rhs = exact[a] * x[b], exact[b] * x[a]
                            if kind == "list_sample" and lhs < rhs - 1e-12:
                                ordering_ok = False
                            if kind == "majority" and lhs > rhs + 1e-12:
                                ordering_ok = False
    ok = worst_se < 4.0 and ordering_ok
    _report(
        "criterion 2 sampling oracles",
        ok,
        f"worst MC deviation {worst_se:.2f} SE, ordering {'ok' if ordering_ok else 'violated'}",
        t0,
        120.0,
    )


def test_acceptance_3_asymptotic_share_curve():
    """The long-run share of the weaker of two strategies matches its
    closed-form curve: known boundary values, survival threshold at
    ratio 1/m, and direct simulation at three grid points per m."""
    t0 = time.perf_counter()
    problems = []
    if abs(asymptotic_share(2, 2 / 3) - 0.2) > 1e-9:
        problems.append("share(2, 2/3) != 0.2")
    if not asymptotic_share(2, 0.8) > 1 / 3:
        problems.append("share(2, 0.8) <= 1/3")
    for m in range(2, 11):
        if abs(_share_curve(1e-9, m) - 1.0 / m) > 1e-6:
            problems.append(f"threshold for m={m} not at 1/{m}")
        if asymptotic_share(m, 1.0 / m - 1e-9) != 0.0 or not asymptotic_share(m, 1.0 / m + 1e-4) > 0.0:
            problems.append(f"threshold behavior wrong for m={m}")
    worst_sim = 0.0
    for m in range(2, 11):
        for ratio in (1.0 / m + 0.1, 0.5 + 0.5 / m, 0.95):
            expected = asymptotic_share(m, ratio)
            game = constant_game([1.0, ratio])
            proto = RevisionProtocol(SelectionRule("retry_other", m=m), AdoptionRule("success", K=0.0))
            x0 = np.array([0.75, 0.25]) if expected < 0.25 else np.array([0.6, 0.4])
            traj = integrate(mother_field(proto, game), x0, IntegratorConfig(T=400.0, sample_stride=0.5))
            err = abs(float(tail_stats(traj, 0.2).mean[1]) - expected)
            worst_sim = max(worst_sim, err)
            if err >= 0.01:
                problems.append(f"simulation off by {err:.3f} at m={m}, ratio={ratio:.3f}")
    _report(
        "criterion 3 share curve",
        not problems,
        problems[0] if problems else f"all values verified, worst sim gap {worst_sim:.4f}",
        t0,
        120.0,
    )


def test_acceptance_4_two_strategy_survival_and_takeover():
    """With a 0.01 payoff handicap, list sampling keeps the dominated
    strategy near half the population, while majority sampling lets it
    take over completely from a majority start."""
    t0 = time.perf_counter()
    game = constant_game([1.0, 0.99])
    rare = RevisionProtocol(SelectionRule("list_sample", m=3), AdoptionRule("success"))
    field = mother_field(rare, game)
    cfg = IntegratorConfig(T=500.0, sample_stride=0.5)
    worst_tail = 1.0
    for x0 in interior_sample(2, 10, seed=40):
        traj = integrate(field, x0, cfg)
        worst_tail = min(worst_tail, float(tail_stats(traj, 0.25).minimum[1]))
    freq = RevisionProtocol(SelectionRule("majority", m=3), AdoptionRule("success"))
    field_f = mother_field(freq, game)
    takeover = 1.0
    for x2 in (0.55, 0.7, 0.9):
        traj = integrate(field_f, np.array([1.0 - x2, x2]), cfg)
        takeover = min(takeover, float(traj.final_state[1]))
    ok = worst_tail >= 0.45 and takeover > 0.99
    _report(
        "criterion 4 two-strategy survival/takeover",
        ok,
        f"tail min x2 {worst_tail:.3f} (need >= 0.45), majority final x2 {takeover:.4f} (need > 0.99)",
        t0,
        120.0,
    )


def test_acceptance_5_cycling_annulus_trapping():
    """Replicator trajectories of the 3-strategy cycling game end up
    with their distance to the interior equilibrium trapped between the
    inner and outer radii."""
    t0 = time.perf_counter()
    field = replicator_field(hypnodisk_game(PARAMS))
    cfg = IntegratorConfig(T=300.0, sample_stride=0.5)
    lo, hi = 1.0, 0.0
    for x0 in interior_sample(3, 20, seed=50):
        if distance_to_center(x0, PARAMS.center) < 1e-3:
            continue
        traj = integrate(field, x0, cfg)
        tail = traj.tail(0.25)
        dists = [distance_to_center(x, PARAMS.center) for x in tail.states]
        lo, hi = min(lo, min(dists)), max(hi, max(dists))
    ok = lo >= PARAMS.inner_radius - 0.01 and hi <= PARAMS.outer_radius + 0.01
    _report(
        "criterion 5 annulus trapping",
        ok,
        f"tail distance range [{lo:.4f}, {hi:.4f}], need within [{PARAMS.inner_radius - 0.01:.3f}, {PARAMS.outer_radius + 0.01:.3f}]",
        t0,
        60.0,
    )


def test_acceptance_6_dominated_twin_survival_in_cycling_game():
    """A feeble twin (payoff handicap 0.005) of one cycling strategy
    should keep a bounded share under rare-favouring imitation, with the
    twin ratio settling near 1; under frequent-favouring imitation the
    initially larger feeble twin should displace its sibling."""
    t0 = time.perf_counter()
    from imidyn.games import hypnodisk_feeble_twin

    game = hypnodisk_feeble_twin(PARAMS, 0.005)
    rare = RevisionProtocol(SelectionRule("list_sample", m=3), AdoptionRule("pairwise"))
    field = mother_field(rare, game)
    cfg = IntegratorConfig(T=300.0, sample_stride=0.5)
    x4_floor = 1.0 / 6.0 - PARAMS.outer_radius / np.sqrt(6.0) - 0.06
    worst_x4, worst_ratio_gap = 1.0, 0.0
    for x0 in interior_sample(4, 20, seed=60):
        traj = integrate(field, x0, cfg)
        tail = traj.tail(0.25)
        worst_x4 = min(worst_x4, float(tail.states[:, 3].min()))
        series = twin_ratio_series(tail, 3, 2)
        finite = series.ratios[series.valid]
        gap = float(np.max(np.abs(finite - 1.0))) if finite.size else np.inf
        worst_ratio_gap = max(worst_ratio_gap, gap)
    freq = RevisionProtocol(SelectionRule("majority", m=3), AdoptionRule("pairwise"))
    field_f = mother_field(freq, game)
    x4_floor_f = 1.0 / 3.0 - PARAMS.outer_radius - 0.06
    worst_x4_f, worst_x3_f = 1.0, 0.0
    starts = []
    for raw in interior_sample(4, 10, seed=61):
        x = raw.copy()
        if x[3] < x[2] + 0.1:
            x[2], x[3] = min(x[2], x[3]), max(x[2], x[3]) + 0.0
            shift = min(x[2] * 0.8, 0.12)
            x[2] -= shift
            x[3] += shift
        starts.append(validate_state(x, tol=1e-6))
    for x0 in (s for s in starts if s[3] > s[2] + 0.1):
        traj = integrate(field_f, x0, cfg)
        tail = traj.tail(0.25)
        worst_x4_f = min(worst_x4_f, float(tail.states[:, 3].min()))
        worst_x3_f = max(worst_x3_f, float(tail.states[:, 2].max()))
    ok = (
        worst_x4 >= x4_floor
        and worst_ratio_gap <= 0.05
        and worst_x4_f >= x4_floor_f
        and worst_x3_f < 0.02
    )
    _report(
        "criterion 6 dominated twin survival (cycling game)",
        ok,
        f"rarity: tail min x4 {worst_x4:.4f} (need >= {x4_floor:.4f}), ratio gap {worst_ratio_gap:.3f} "
        f"(need <= 0.05); frequency: tail min x4 {worst_x4_f:.4f} (need >= {x4_floor_f:.4f}), "
        f"tail max x3 {worst_x3_f:.4f} (need < 0.02)",
        t0,
        300.0,
    )


def test_acceptance_7_elimination_versus_survival():
    """Replicator eliminates the handicapped fourth strategy of the
    cyclic 4-strategy game, while retry selection with pairwise adoption
    keeps it alive on a limit cycle; survival levels are checked against
    thresholds frozen from step-size-consistent reference runs."""
    t0 = time.perf_counter()
    cfg_fast = IntegratorConfig(T=500.0, sample_stride=0.5)
    game = rps_feeble_twin(0.04)
    field = replicator_field(game)
    worst_final = 0.0
    for x0 in interior_sample(4, 20, seed=70):
        traj = integrate(field, x0, cfg_fast)
        worst_final = max(worst_final, float(traj.final_state[3]))
    proto = RevisionProtocol(SelectionRule("retry_other", m=4), AdoptionRule("pairwise"))
    starts = [
        np.array([1 / 7, 2 / 7, 1 / 7, 3 / 7]),
        np.array([1 / 7, 1 / 7, 4 / 7, 1 / 7]),
    ]
    # survival floors frozen from long reference runs repeated at halved
    # step cap: 0.01 for the 0.04 handicap, 0.005 for the 0.08 handicap
    floors = {0.04: 0.01, 0.08: 0.005}
    cfg_long = IntegratorConfig(T=2000.0, sample_stride=0.5)
    mins = {}
    for d, floor in floors.items():
        field_d = mother_field(proto, rps_feeble_twin(d))
        vals = []
        for x0 in starts:
            traj = integrate(field_d, x0, cfg_long)
            vals.append(float(traj.tail(0.25).states[:, 3].min()))
        mins[d] = min(vals)
    # step-size consistency spot check on the tighter case
    field_008 = mother_field(proto, rps_feeble_twin(0.08))
    cfg_half = IntegratorConfig(T=2000.0, sample_stride=0.5, h_max=0.05)
    ref = integrate(field_008, starts[0], cfg_half)
    ref_min = float(ref.tail(0.25).states[:, 3].min())
    consistent = abs(ref_min - mins[0.08]) <= 0.2 * max(ref_min, mins[0.08])
    ok = worst_final < 1e-3 and all(mins[d] > floors[d] for d in floors) and consistent
    _report(
        "criterion 7 elimination vs survival",
        ok,
        f"replicator final x4 {worst_final:.2e} (need < 1e-3); survival tail min x4 "
        f"{mins[0.04]:.4f} (need > 0.01) and {mins[0.08]:.4f} (need > 0.005), "
        f"halved-step check {'consistent' if consistent else 'inconsistent'}",
        t0,
        300.0,
    )


def test_acceptance_8_controlled_opponent_survival_levels():
    """Against a smoothly oscillating opponent the strictly dominated
    third strategy keeps a tail average near 20% (handicap 0.05) and
    near 10% (handicap 0.1); against a threshold-switching opponent its
    tail minimum stays above 0.12."""
    t0 = time.perf_counter()
    from imidyn.unilateral import SmoothPeriodicOpponent, ThresholdController, run_unilateral

    proto = RevisionProtocol(SelectionRule("retry_other", m=4), AdoptionRule("pairwise"))
    cfg = IntegratorConfig(T=200.0, sample_stride=0.05)
    x0 = validate_state(np.array([1 / 3, 1 / 6, 1 / 2]))
    means = {}
    for eps in (0.05, 0.1):
        traj = run_unilateral(proto, eps, SmoothPeriodicOpponent(), x0, cfg)
        means[eps] = float(tail_stats(traj, 0.25).mean[2])
    traj = run_unilateral(proto, 0.01, ThresholdController(0.3, 0.7), x0, cfg)
    tail_min_x3 = float(traj.tail(0.25).states[:, 2].min())
    ok = abs(means[0.05] - 0.20) <= 0.05 and abs(means[0.1] - 0.10) <= 0.05 and tail_min_x3 > 0.12
    _report(
        "criterion 8 controlled opponent survival",
        ok,
        f"tail mean x3 {means[0.05]:.3f} (need 0.20±0.05) and {means[0.1]:.3f} (need 0.10±0.05); "
        f"threshold run tail min x3 {tail_min_x3:.3f} (need > 0.12)",
        t0,
        180.0,
    )


VERDICT_TABLE = [
    # (label, game config, protocol config, expected verdicts)
    (
        "fair+pairwise / twin ladder",
        {"kind": "constant", "payoffs": [1.0, 0.8, 0.8, 0.6]},
        {"selection": {"kind": "fair"}, "adoption": {"kind": "pairwise"}},
        {"monotone": "holds", "positive_correlation": "holds", "imitation_flow": "holds",
         "advantage_rarity": "holds", "advantage_frequency": "holds"},
    ),
    (
        "fair+success / cyclic game",
        {"kind": "matrix", "matrix": [[0, -2, 1], [1, 0, -2], [-2, 1, 0]]},
        {"selection": {"kind": "fair"}, "adoption": {"kind": "success"}},
        {"monotone": "holds", "positive_correlation": "holds"},
    ),
    (
        "fair+dissatisfaction / cyclic game",
        {"kind": "matrix", "matrix": [[0, -2, 1], [1, 0, -2], [-2, 1, 0]]},
        {"selection": {"kind": "fair"}, "adoption": {"kind": "dissatisfaction"}},
        {"monotone": "holds", "positive_correlation": "holds"},
    ),
    (
        "list_sample(3)+pairwise / twin ladder",
        {"kind": "constant", "payoffs": [1.0, 0.8, 0.8, 0.6]},
        {"selection": {"kind": "list_sample", "m": 3}, "adoption": {"kind": "pairwise"}},
        {"monotone": "fails", "positive_correlation": "holds",
         "advantage_rarity": "holds", "advantage_frequency": "fails"},
    ),
    (
        "retry_other(4)+pairwise / twin ladder",
        {"kind": "constant", "payoffs": [1.0, 0.8, 0.8, 0.6]},
        {"selection": {"kind": "retry_other", "m": 4}, "adoption": {"kind": "pairwise"}},
        {"monotone": "fails", "positive_correlation": "holds",
         "advantage_rarity": "holds", "advantage_frequency": "fails"},
    ),
    (
        "majority(3)+pairwise / twin ladder",
        {"kind": "constant", "payoffs": [1.0, 0.8, 0.8, 0.6]},
        {"selection": {"kind": "majority", "m": 3}, "adoption": {"kind": "pairwise"}},
        {"monotone": "fails", "positive_correlation": "holds",
         "advantage_rarity": "fails", "advantage_frequency": "holds"},
    ),
    (
        "confirmation(3)+pairwise / twin ladder",
        {"kind": "constant", "payoffs": [1.0, 0.8, 0.8, 0.6]},
        {"selection": {"kind": "confirmation", "m": 3}, "adoption": {"kind": "pairwise"}},
        {"monotone": "fails", "positive_correlation": "holds",
         "advantage_rarity": "fails", "advantage_frequency": "holds"},
    ),
    (
        "retry_other(4)+success / flat payoffs",
        {"kind": "constant", "payoffs": [1.0, 1.0]},
        {"selection": {"kind": "retry_other", "m": 4}, "adoption": {"kind": "success"}},
        {"monotone": "fails", "positive_correlation": "fails", "imitation_flow": "inconclusive"},
    ),
    (
        "retry_other(4)+success / near-flat payoffs",
        {"kind": "constant", "payoffs": [1.0, 0.99]},
        {"selection": {"kind": "retry_other", "m": 4}, "adoption": {"kind": "success"}},
        {"monotone": "fails", "positive_correlation": "fails", "imitation_flow": "holds"},
    ),
]


def test_acceptance_9_condition_verdict_table():
    """The structural condition checkers classify the shipped protocol
    combinations exactly as expected, and every failing verdict carries
    a witness state that reproduces the violation on its own."""
    t0 = time.perf_counter()
    problems = []
    for label, game_cfg, proto_cfg, expected in VERDICT_TABLE:
        result = cmd_verify({"game": game_cfg, "protocol": proto_cfg}, n_states=100, seed=0)
        for name, verdict in expected.items():
            got = result["reports"].get(name, {}).get("verdict")
            if got != verdict:
                problems.append(f"{label}: {name} expected {verdict}, got {got}")
        # witness revalidation: re-running the checker on the witness
        # state alone must reproduce the failure
        for name, rep in result["reports"].items():
            if rep["verdict"] != "fails":
                continue
            state = rep["witness"]["state"]
            again = cmd_verify(
                {"game": game_cfg, "protocol": proto_cfg, "states": [state]}, n_states=0, seed=0
            )
            if again["reports"][name]["verdict"] != "fails":
                problems.append(f"{label}: witness for {name} does not reproduce")
    _report(
        "criterion 9 condition verdict table",
        not problems,
        "; ".join(problems) if problems else f"{len(VERDICT_TABLE)} combinations classified as expected",
        t0,
        120.0,
    )
