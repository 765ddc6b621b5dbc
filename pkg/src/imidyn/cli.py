"""Command-line runner: single simulations, the asymptotic-share sweep,
condition verification, and the bundled figure-reproduction recipes.

Everything is driven by JSON configs; outputs are CSV trajectories,
JSON reports, and a manifest recording config, seeds, tool version and
checksums so any bundle can be regenerated byte for byte.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    check_advantage,
    check_imitation_condition,
    check_monotone,
    check_positive_correlation,
    lyapunov_distance,
    tail_stats,
)
from .core import Trajectory, barycenter, validate_state, write_trajectory_csv
from .dynamics import asymptotic_share, build_field, mother_field
from .games import (
    GameError,
    HypnodiskParams,
    MatrixGame,
    PayoffFunction,
    constant_game,
    hypnodisk_feeble_twin,
    hypnodisk_game,
    rps_feeble_twin,
)
from .integrate import IntegratorConfig, integrate
from .protocols import AdoptionRule, ProtocolError, RevisionProtocol, SelectionRule
from .unilateral import SmoothPeriodicOpponent, ThresholdController, run_unilateral


class ConfigError(ValueError):
    """Invalid configuration; the message carries a JSON-pointer path."""

    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer}: {message}")
        self.pointer = pointer


def _require(cond: bool, pointer: str, message: str):
    if not cond:
        raise ConfigError(pointer, message)


# ---------------------------------------------------------------------------
# config -> objects

def game_from_config(cfg: dict, pointer: str = "/game") -> PayoffFunction:
    _require(isinstance(cfg, dict), pointer, "must be an object")
    kind = cfg.get("kind")
    try:
        if kind == "matrix":
            _require("matrix" in cfg, pointer + "/matrix", "missing payoff matrix")
            return MatrixGame(cfg["matrix"])
        if kind == "constant":
            _require("payoffs" in cfg, pointer + "/payoffs", "missing payoff vector")
            return constant_game(cfg["payoffs"])
        if kind == "hypnodisk":
            params = HypnodiskParams(
                np.asarray(cfg.get("center", barycenter(3)), dtype=float),
                float(cfg.get("inner_radius", 0.05)),
                float(cfg.get("outer_radius", 0.1)),
            )
            eps = float(cfg.get("twin_penalty", -1.0))
            if eps >= 0.0:
                return hypnodisk_feeble_twin(params, eps)
            return hypnodisk_game(params)
        if kind == "rps_feeble_twin":
            return rps_feeble_twin(float(cfg.get("d", 0.0)))
    except GameError as exc:
        raise ConfigError(pointer, str(exc)) from exc
    raise ConfigError(pointer + "/kind", f"unknown game kind {kind!r}")


def protocol_from_config(cfg: dict, pointer: str = "/protocol") -> RevisionProtocol:
    _require(isinstance(cfg, dict), pointer, "must be an object")
    sel = cfg.get("selection")
    ado = cfg.get("adoption")
    _require(isinstance(sel, dict), pointer + "/selection", "must be an object")
    _require(isinstance(ado, dict), pointer + "/adoption", "must be an object")
    try:
        m = sel.get("m")
        if isinstance(m, dict):
            m = {int(k): float(v) for k, v in m.items()}
        selection = SelectionRule(
            kind=sel.get("kind", ""),
            m=m,
            fair_weight=float(sel.get("fair_weight", 0.0)),
        )
        adoption = AdoptionRule(kind=ado.get("kind", ""), K=ado.get("K"))
    except ProtocolError as exc:
        raise ConfigError(pointer, str(exc)) from exc
    return RevisionProtocol(selection, adoption)


def integrator_from_config(cfg: dict | None, pointer: str = "/integrator") -> IntegratorConfig:
    cfg = cfg or {}
    _require(isinstance(cfg, dict), pointer, "must be an object")
    known = {"method", "T", "h", "rtol", "atol", "h_min", "h_max", "sample_stride", "renormalize"}
    for key in cfg:
        _require(key in known, f"{pointer}/{key}", "unknown integrator option")
    try:
        return IntegratorConfig(**cfg)
    except ValueError as exc:
        raise ConfigError(pointer, str(exc)) from exc


def initial_states(cfg: dict, arity: int, seed: int, pointer: str = "/initial") -> list[np.ndarray]:
    _require(isinstance(cfg, dict), pointer, "must be an object")
    if "states" in cfg:
        out = []
        for k, row in enumerate(cfg["states"]):
            x = np.asarray(row, dtype=float)
            _require(x.size == arity, f"{pointer}/states/{k}", f"arity {x.size}, game has {arity}")
            out.append(validate_state(x))
        return out
    sampler = cfg.get("sampler")
    _require(isinstance(sampler, dict), pointer, "needs 'states' or 'sampler'")
    count = int(sampler.get("count", 1))
    _require(count >= 1, pointer + "/sampler/count", "must be >= 1")
    rng = np.random.default_rng(int(sampler.get("seed", seed)))
    # pull samples toward the barycenter so every start is interior
    raw = rng.dirichlet(np.ones(arity), size=count)
    return [validate_state(0.8 * row + 0.2 * barycenter(arity)) for row in raw]


def interior_sample(arity: int, count: int, seed: int) -> list[np.ndarray]:
    """Stratified interior states: balanced, near-boundary, and
    near-barycenter draws, all floored away from the boundary."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        alpha = (1.0, 0.3, 3.0)[k % 3]
        raw = rng.dirichlet(np.full(arity, alpha))
        out.append(validate_state(0.98 * raw + 0.02 * barycenter(arity)))
    return out


# ---------------------------------------------------------------------------
# manifests

def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def write_manifest(out_dir: Path, command: str, config: dict, seed: int, files: list[Path]) -> Path:
    manifest = {
        "tool": "imidyn",
        "version": __version__,
        "command": command,
        "seed": seed,
        "config": config,
        "checksums": {p.name: _sha256(p) for p in sorted(files)},
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def run_manifest(manifest_path, out_dir, threads: int = 1) -> dict:
    """Re-run the command recorded in a manifest and report whether the
    regenerated files match the recorded checksums."""
    manifest = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    out_dir = Path(out_dir)
    command = manifest["command"]
    if command == "simulate":
        cmd_simulate(manifest["config"], out_dir, seed=manifest["seed"], threads=threads)
    elif command == "sweep":
        cmd_sweep_figA(out_dir=out_dir, **manifest["config"])
    elif command == "reproduce":
        cmd_reproduce(manifest["config"]["figure"], out_dir, seed=manifest["seed"], threads=threads)
    elif command == "verify":
        cmd_verify(manifest["config"], out_dir)
    else:
        raise ConfigError("/command", f"unknown command {command!r}")
    mismatches = {
        name: digest
        for name, digest in manifest["checksums"].items()
        if not (out_dir / name).exists() or _sha256(out_dir / name) != digest
    }
    return {"match": not mismatches, "mismatches": sorted(mismatches)}


# ---------------------------------------------------------------------------
# subcommands

def _simulate_one(config: dict, x0: np.ndarray, seed: int) -> Trajectory:
    if "unilateral" in config:
        uni = config["unilateral"]
        proto = protocol_from_config(uni["protocol"], "/unilateral/protocol")
        ctrl_cfg = uni.get("controller", {})
        kind = ctrl_cfg.get("kind", "smooth")
        if kind == "threshold":
            ctrl = ThresholdController(float(ctrl_cfg.get("x_min", 0.3)), float(ctrl_cfg.get("x_max", 0.7)))
        elif kind == "smooth":
            ctrl = SmoothPeriodicOpponent(int(ctrl_cfg.get("exponent_index", 9)))
        else:
            raise ConfigError("/unilateral/controller/kind", f"unknown controller {kind!r}")
        cfg = integrator_from_config(config.get("integrator"))
        return run_unilateral(proto, float(uni.get("eps", 0.0)), ctrl, x0, cfg)
    game = game_from_config(config["game"])
    field_kind = config.get("field", "mother")
    proto = None
    if field_kind == "mother":
        _require("protocol" in config, "/protocol", "mother field needs a protocol")
        proto = protocol_from_config(config["protocol"])
    field = build_field(field_kind, game, proto)
    cfg = integrator_from_config(config.get("integrator"))
    return integrate(field, x0, cfg)


def _analysis_payload(config: dict, trajs: list[Trajectory]) -> dict:
    requested = config.get("analyses", ["tail_stats"])
    payload = {}
    if "tail_stats" in requested:
        rows = []
        for traj in trajs:
            try:
                ts = tail_stats(traj, window_fraction=float(config.get("tail_window", 0.25)))
            except ValueError:
                rows.append(None)
                continue
            rows.append(
                {
                    "t_start": ts.t_start,
                    "min": ts.minimum.tolist(),
                    "mean": ts.mean.tolist(),
                    "max": ts.maximum.tolist(),
                }
            )
        payload["tail_stats"] = rows
    if "lyapunov_distance" in requested:
        game_cfg = config.get("game", {})
        params = HypnodiskParams(
            np.asarray(game_cfg.get("center", barycenter(3)), dtype=float),
            float(game_cfg.get("inner_radius", 0.05)),
            float(game_cfg.get("outer_radius", 0.1)),
        )
        groups = [(0,), (1,), (2, 3)] if trajs and trajs[0].arity == 4 else None
        payload["lyapunov_distance"] = [
            [lyapunov_distance(x, params, groups) for x in traj.states] for traj in trajs
        ]
    return payload


def cmd_simulate(config: dict, out_dir, seed: int = 0, threads: int = 1) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if "unilateral" in config:
        arity = 3
    else:
        arity = game_from_config(config["game"]).arity
    starts = initial_states(config.get("initial", {"sampler": {"count": 1}}), arity, seed)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trajs = list(pool.map(lambda x0: _simulate_one(config, x0, seed), starts))
    else:
        trajs = [_simulate_one(config, x0, seed) for x0 in starts]
    files = []
    for k, traj in enumerate(trajs):
        path = out_dir / f"trajectory_{k:03d}.csv"
        write_trajectory_csv(traj, path)
        files.append(path)
    analysis_path = out_dir / "analysis.json"
    analysis_path.write_text(
        json.dumps(_analysis_payload(config, trajs), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    files.append(analysis_path)
    write_manifest(out_dir, "simulate", config, seed, files)
    return {"trajectories": len(trajs), "out": str(out_dir)}


DEFAULT_M_VALUES = (2, 3, 4, 6, 10)
DEFAULT_RATIO_STEP = 0.02


def _share_simulation_check(m: int, ratio: float, expected: float) -> float:
    """Long-horizon run of the two-strategy imitation dynamics that the
    share curve describes (retry selection with m trials, success
    adoption at baseline 0); returns the tail mean of x_2."""
    game = constant_game([1.0, ratio])
    proto = RevisionProtocol(
        SelectionRule("retry_other", m=m),
        AdoptionRule("success", K=0.0),
    )
    field = mother_field(proto, game)
    x0 = np.array([0.75, 0.25]) if expected < 0.25 else np.array([0.6, 0.4])
    cfg = IntegratorConfig(T=400.0, rtol=1e-8, atol=1e-12, sample_stride=0.5)
    traj = integrate(field, x0, cfg)
    return float(tail_stats(traj, 0.2).mean[1])


def cmd_sweep_figA(
    m_values=DEFAULT_M_VALUES,
    ratio_grid=None,
    out_dir=None,
    validate: bool = True,
) -> dict:
    """Tabulate the long-run share of the weaker strategy over a
    (m, payoff ratio) grid, cross-checking three points per m against
    direct simulation."""
    if ratio_grid is None:
        ratio_grid = [round(k * DEFAULT_RATIO_STEP, 10) for k in range(1, int(1 / DEFAULT_RATIO_STEP) + 1)]
    rows = []
    for m in m_values:
        for ratio in ratio_grid:
            rows.append((int(m), float(ratio), asymptotic_share(int(m), float(ratio))))
    checks = []
    if validate:
        for m in m_values:
            picks = [r for r in ratio_grid if r > 1.0 / m + 0.05]
            picks = [picks[0], picks[len(picks) // 2], picks[-1]] if len(picks) >= 3 else picks
            for ratio in picks:
                expected = asymptotic_share(int(m), float(ratio))
                simulated = _share_simulation_check(int(m), float(ratio), expected)
                checks.append(
                    {
                        "m": int(m),
                        "ratio": float(ratio),
                        "expected": expected,
                        "simulated": simulated,
                        "ok": bool(abs(simulated - expected) < 0.01),
                    }
                )
    result = {"rows": rows, "checks": checks}
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / "share_curve.csv"
        lines = ["m,ratio,share"]
        lines += [f"{m},{repr(ratio)},{repr(share)}" for m, ratio, share in rows]
        csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        files = [csv_path]
        if checks:
            checks_path = out_dir / "share_checks.json"
            checks_path.write_text(json.dumps(checks, indent=2, sort_keys=True) + "\n", encoding="utf-8")
            files.append(checks_path)
        write_manifest(
            out_dir,
            "sweep",
            {"m_values": list(m_values), "ratio_grid": list(ratio_grid), "validate": validate},
            0,
            files,
        )
        result["out"] = str(out_dir)
    return result


def cmd_verify(config: dict, out_dir=None, seed: int = 0, n_states: int = 100) -> dict:
    """Run every applicable structural checker for a protocol on a game
    and consolidate the verdicts."""
    game = game_from_config(config["game"])
    proto = protocol_from_config(config["protocol"])
    field = mother_field(proto, game)
    states = [validate_state(np.asarray(s, dtype=float)) for s in config.get("states", [])]
    states += interior_sample(game.arity, n_states, seed)
    reports = {
        "monotone": check_monotone(field, game, states),
        "positive_correlation": check_positive_correlation(field, game, states),
        "imitation_flow": check_imitation_condition(proto, game, states),
    }
    if getattr(game, "twin_pair", None) is not None:
        reports["advantage_rarity"] = check_advantage(field, game, states, "rarity", proto)
        reports["advantage_frequency"] = check_advantage(field, game, states, "frequency", proto)
    payload = {name: rep.to_json() for name, rep in reports.items()}
    required = config.get("require", [name for name in reports])
    ok = all(reports[name].holds for name in required if name in reports)
    result = {"reports": payload, "ok": ok}
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "conditions.json"
        path.write_text(json.dumps(result, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        write_manifest(out_dir, "verify", config, seed, [path])
    return result


_RETRY_PAIRWISE = {
    "selection": {"kind": "retry_other", "m": 4},
    "adoption": {"kind": "pairwise"},
}


def _reproduce_figA(out_dir: Path, seed: int) -> list[Path]:
    result = cmd_sweep_figA(out_dir=None, validate=False)
    path = out_dir / "share_curve.csv"
    lines = ["m,ratio,share"]
    lines += [f"{m},{repr(ratio)},{repr(share)}" for m, ratio, share in result["rows"]]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return [path]


def _reproduce_figB(out_dir: Path, seed: int) -> list[Path]:
    files = []
    starts = [[1 / 3, 1 / 6, 1 / 2], [1 / 6, 2 / 3, 1 / 6]]
    for eps in (0.05, 0.1):
        for k, x0 in enumerate(starts):
            config = {
                "unilateral": {
                    "eps": eps,
                    "controller": {"kind": "smooth"},
                    "protocol": _RETRY_PAIRWISE,
                },
                "integrator": {"T": 200.0, "sample_stride": 0.05},
            }
            traj = _simulate_one(config, validate_state(np.array(x0)), seed)
            path = out_dir / f"unilateral_eps{eps:g}_ic{k}.csv"
            write_trajectory_csv(traj, path)
            files.append(path)
    return files


def _reproduce_figC(out_dir: Path, seed: int) -> list[Path]:
    files = []
    starts = [[1 / 7, 2 / 7, 1 / 7, 3 / 7], [1 / 7, 1 / 7, 4 / 7, 1 / 7]]
    for d in (0.04, 0.08):
        for k, x0 in enumerate(starts):
            config = {
                "game": {"kind": "rps_feeble_twin", "d": d},
                "protocol": _RETRY_PAIRWISE,
                "integrator": {"T": 1000.0, "sample_stride": 0.2},
            }
            traj = _simulate_one(config, validate_state(np.array(x0)), seed)
            path = out_dir / f"rpsft_d{d:g}_ic{k}.csv"
            write_trajectory_csv(traj, path)
            files.append(path)
    return files


def _reproduce_hypnodisk(out_dir: Path, seed: int) -> list[Path]:
    files = []
    config = {
        "game": {
            "kind": "hypnodisk",
            "inner_radius": 0.05,
            "outer_radius": 0.1,
            "twin_penalty": 0.005,
        },
        "protocol": {
            "selection": {"kind": "list_sample", "m": 3},
            "adoption": {"kind": "pairwise"},
        },
        "integrator": {"T": 300.0, "sample_stride": 0.2},
    }
    for k, x0 in enumerate(interior_sample(4, 20, seed)):
        traj = _simulate_one(config, x0, seed)
        path = out_dir / f"hypnodisk_run{k:02d}.csv"
        write_trajectory_csv(traj, path)
        files.append(path)
    return files


FIGURES = {
    "A": _reproduce_figA,
    "B": _reproduce_figB,
    "C": _reproduce_figC,
    "hypnodisk": _reproduce_hypnodisk,
}


def cmd_reproduce(figure: str, out_dir, seed: int = 0, threads: int = 1) -> dict:
    if figure not in FIGURES:
        raise ConfigError("/figure", f"unknown figure {figure!r} (choose from {sorted(FIGURES)})")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = FIGURES[figure](out_dir, seed)
    write_manifest(out_dir, "reproduce", {"figure": figure}, seed, files)
    return {"figure": figure, "files": [p.name for p in files], "out": str(out_dir)}


# ---------------------------------------------------------------------------
# argparse front end

def _load_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="imidyn", description=__doc__)
    parser.add_argument("--version", action="version", version=f"imidyn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="integrate one scenario config")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--threads", type=int, default=1)

    p_sweep = sub.add_parser("sweep", help="asymptotic-share sweep over (m, payoff ratio)")
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--m", type=int, nargs="+", default=list(DEFAULT_M_VALUES))
    p_sweep.add_argument("--no-validate", action="store_true")

    p_verify = sub.add_parser("verify", help="run structural condition checkers")
    p_verify.add_argument("--config", required=True)
    p_verify.add_argument("--out")
    p_verify.add_argument("--seed", type=int, default=0)

    p_rep = sub.add_parser("reproduce", help="emit a figure-reproduction CSV bundle")
    p_rep.add_argument("figure", choices=sorted(FIGURES))
    p_rep.add_argument("--out", required=True)
    p_rep.add_argument("--seed", type=int, default=0)
    p_rep.add_argument("--threads", type=int, default=1)

    p_man = sub.add_parser("rerun", help="re-run a manifest and compare checksums")
    p_man.add_argument("--manifest", required=True)
    p_man.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            result = cmd_simulate(_load_config(args.config), args.out, args.seed, args.threads)
        elif args.command == "sweep":
            result = cmd_sweep_figA(m_values=tuple(args.m), out_dir=args.out, validate=not args.no_validate)
            if any(not c["ok"] for c in result.get("checks", [])):
                print(json.dumps(result.get("checks"), indent=2))
                return 1
            result = {"out": result.get("out"), "rows": len(result["rows"])}
        elif args.command == "verify":
            result = cmd_verify(_load_config(args.config), args.out, args.seed)
            print(json.dumps(result, indent=2, sort_keys=True))
            return 0 if result["ok"] else 1
        elif args.command == "reproduce":
            result = cmd_reproduce(args.figure, args.out, args.seed, args.threads)
        else:
            result = run_manifest(args.manifest, args.out)
            print(json.dumps(result, indent=2))
            return 0 if result["match"] else 1
    except ConfigError as exc:
        print(f"config error at {exc}", file=sys.stderr)
        return 2
    print(json.dumps(result, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
