"""Command-line experiment runner.

Subcommands run one verification suite each against a configured map and
write machine-readable reports:

    toruslab rotation|chain|two-jump|essential|perturb|nonwandering|all
             [--config cfg.json] [--seed N] [--out DIR] [--threads N]

Configuration is strict JSON (unknown keys are rejected); every numeric
parameter has a default so the tool runs without a config file.  The
``TORUSLAB_OUT`` environment variable overrides the output directory.

Outputs per run: ``report.json`` (deterministic for a fixed config and
seed: no timings inside), ``timings.json`` (wall clock, excluded from the
determinism contract), plus CSV tables, pseudo-orbit text files and
box-set dumps depending on the suite.  Exit status: 0 success, 1 a check
failed, 2 inconclusive (budget exhausted), 3 invalid configuration.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import __version__
from .boxes import BoxDomain
from .chain import chain_transitivity_report
from .circle import QuadraticIrrational, rotation_number
from .denjoy import DenjoyMap, DenjoySpec, build_denjoy
from .errors import BudgetError
from .essential import (DOUBLY_ESSENTIAL, INESSENTIAL, SIMPLY_ESSENTIAL,
                        classify_essentiality, compute_capture_diameter,
                        essential_intersection_check, random_doubly_essential)
from .omega import nonwandering_approx, weak_transitivity_check
from .perturb import build_return_perturbation, verify_return
from .pseudo import ChainBudgets, two_jump_pseudo_orbit, validate_pseudo_orbit
from .skew import (SkewProduct, build_example_fiber_family, product_map,
                   rigid_translation, rotation_vector)

__all__ = ["ConfigError", "ExperimentConfig", "Report", "run_experiment",
           "emit_report", "main"]

SUITES = ("rotation", "chain", "two-jump", "essential", "perturb",
          "nonwandering")

MAP_KINDS = ("rigid", "denjoy-product", "skew-example", "skew-perturbed")

OUT_ENV = "TORUSLAB_OUT"


class ConfigError(ValueError):
    """Invalid or unknown configuration content."""


def _take(d: dict, key: str, default):
    return d.pop(key) if key in d else default


def _reject_unknown(d: dict, where: str) -> None:
    if d:
        raise ConfigError(f"unknown keys in {where}: {sorted(d)}")


def _quad(value, where: str) -> QuadraticIrrational:
    if not (isinstance(value, (list, tuple)) and len(value) == 4):
        raise ConfigError(f"{where} must be a 4-integer list [a, b, c, d] "
                          "meaning (a + b*sqrt(c))/d")
    return QuadraticIrrational(*(int(v) for v in value))


@dataclass
class MapConfig:
    kind: str = "skew-example"
    rho1: QuadraticIrrational = field(
        default_factory=lambda: QuadraticIrrational(-1, 1, 5, 2))
    rho2: QuadraticIrrational = field(
        default_factory=lambda: QuadraticIrrational(-1, 1, 2, 1))
    total_gap: float = 0.5
    gap_exponent: float = 4.0
    truncation: int = 2000
    amplitude: float = 0.1
    decay: float = 0.5
    perturb_gap_index: int = 2
    perturb_fiber: float = 0.37
    perturb_eps: float = 0.05
    perturb_delta: float = 0.1

    @classmethod
    def parse(cls, raw: dict) -> "MapConfig":
        raw = dict(raw)
        kind = _take(raw, "kind", "skew-example")
        if kind not in MAP_KINDS:
            raise ConfigError(f"map kind must be one of {MAP_KINDS}, got {kind!r}")
        cfg = cls(kind=kind)
        if "rho1" in raw:
            cfg.rho1 = _quad(raw.pop("rho1"), "map.rho1")
        if "rho2" in raw:
            cfg.rho2 = _quad(raw.pop("rho2"), "map.rho2")
        cfg.total_gap = float(_take(raw, "total_gap", cfg.total_gap))
        cfg.gap_exponent = float(_take(raw, "gap_exponent", cfg.gap_exponent))
        cfg.truncation = int(_take(raw, "truncation", cfg.truncation))
        cfg.amplitude = float(_take(raw, "amplitude", cfg.amplitude))
        cfg.decay = float(_take(raw, "decay", cfg.decay))
        cfg.perturb_gap_index = int(_take(raw, "perturb_gap_index",
                                          cfg.perturb_gap_index))
        cfg.perturb_fiber = float(_take(raw, "perturb_fiber", cfg.perturb_fiber))
        cfg.perturb_eps = float(_take(raw, "perturb_eps", cfg.perturb_eps))
        cfg.perturb_delta = float(_take(raw, "perturb_delta", cfg.perturb_delta))
        _reject_unknown(raw, "map")
        return cfg

    def echo(self) -> dict:
        return {
            "kind": self.kind,
            "rho1": [self.rho1.a, self.rho1.b, self.rho1.c, self.rho1.d],
            "rho2": [self.rho2.a, self.rho2.b, self.rho2.c, self.rho2.d],
            "total_gap": self.total_gap,
            "gap_exponent": self.gap_exponent,
            "truncation": self.truncation,
            "amplitude": self.amplitude,
            "decay": self.decay,
            "perturb_gap_index": self.perturb_gap_index,
            "perturb_fiber": self.perturb_fiber,
            "perturb_eps": self.perturb_eps,
            "perturb_delta": self.perturb_delta,
        }


@dataclass
class ExperimentConfig:
    suite: str = "all"
    map: MapConfig = field(default_factory=MapConfig)
    m: int = 128
    epsilon: float = 0.05
    trials: int = 20
    seed: int = 0
    threads: int = 1
    rotation_iters: tuple = (10**2, 10**4, 10**6)
    rotation_starts: int = 4
    two_jump_pairs: int = 5
    omega_m: int = 64
    omega_horizon: int = 2000
    nonwandering_horizon: int = 10**4
    essential_m: int = 32
    essential_pairs: int = 200
    perturb_samples: int = 16384
    weak_pairs: int = 4
    weak_horizon: int = 10**5
    budgets: ChainBudgets = field(default_factory=ChainBudgets)

    @classmethod
    def parse(cls, raw: dict, suite: str) -> "ExperimentConfig":
        raw = dict(raw)
        cfg = cls(suite=suite)
        if "map" in raw:
            cfg.map = MapConfig.parse(raw.pop("map"))
        cfg.m = int(_take(raw, "m", cfg.m))
        cfg.epsilon = float(_take(raw, "epsilon", cfg.epsilon))
        cfg.trials = int(_take(raw, "trials", cfg.trials))
        cfg.seed = int(_take(raw, "seed", cfg.seed))
        cfg.rotation_iters = tuple(int(v) for v in _take(
            raw, "rotation_iters", cfg.rotation_iters))
        cfg.rotation_starts = int(_take(raw, "rotation_starts", cfg.rotation_starts))
        cfg.two_jump_pairs = int(_take(raw, "two_jump_pairs", cfg.two_jump_pairs))
        cfg.omega_m = int(_take(raw, "omega_m", cfg.omega_m))
        cfg.omega_horizon = int(_take(raw, "omega_horizon", cfg.omega_horizon))
        cfg.nonwandering_horizon = int(_take(raw, "nonwandering_horizon",
                                             cfg.nonwandering_horizon))
        cfg.essential_m = int(_take(raw, "essential_m", cfg.essential_m))
        cfg.essential_pairs = int(_take(raw, "essential_pairs", cfg.essential_pairs))
        cfg.perturb_samples = int(_take(raw, "perturb_samples", cfg.perturb_samples))
        cfg.weak_pairs = int(_take(raw, "weak_pairs", cfg.weak_pairs))
        cfg.weak_horizon = int(_take(raw, "weak_horizon", cfg.weak_horizon))
        if "budgets" in raw:
            braw = dict(raw.pop("budgets"))
            fields = {}
            for name in ("omega_grid", "omega_horizon", "orbit_search",
                         "direct_horizon", "connector_orbit", "total_steps"):
                if name in braw:
                    fields[name] = int(braw.pop(name))
            _reject_unknown(braw, "budgets")
            cfg.budgets = ChainBudgets(**fields)
        _reject_unknown(raw, "config")
        if cfg.m < 1 or cfg.epsilon <= 0.0 or cfg.trials < 1:
            raise ConfigError("m, epsilon and trials must be positive")
        return cfg

    def echo(self) -> dict:
        return {
            "suite": self.suite,
            "map": self.map.echo(),
            "m": self.m,
            "epsilon": self.epsilon,
            "trials": self.trials,
            "seed": self.seed,
            "threads": self.threads,
            "rotation_iters": list(self.rotation_iters),
            "rotation_starts": self.rotation_starts,
            "two_jump_pairs": self.two_jump_pairs,
            "omega_m": self.omega_m,
            "omega_horizon": self.omega_horizon,
            "nonwandering_horizon": self.nonwandering_horizon,
            "essential_m": self.essential_m,
            "essential_pairs": self.essential_pairs,
            "perturb_samples": self.perturb_samples,
            "weak_pairs": self.weak_pairs,
            "weak_horizon": self.weak_horizon,
        }


@dataclass
class BuiltMap:
    f: SkewProduct
    g1: Optional[DenjoyMap]
    g2: Optional[DenjoyMap]
    rho: tuple[float, float]
    has_fiber_family: bool


def build_map(mc: MapConfig) -> BuiltMap:
    rho = (mc.rho1.value, mc.rho2.value)
    if mc.kind == "rigid":
        return BuiltMap(rigid_translation(*rho), None, None, rho, False)
    spec1 = DenjoySpec.with_total_gap_length(mc.rho1, mc.total_gap,
                                             mc.gap_exponent, mc.truncation)
    spec2 = DenjoySpec.with_total_gap_length(mc.rho2, mc.total_gap,
                                             mc.gap_exponent, mc.truncation)
    g1 = build_denjoy(spec1)
    g2 = build_denjoy(spec2)
    if mc.kind == "denjoy-product":
        return BuiltMap(product_map(g1, g2.lift), g1, g2, rho, False)
    beta = build_example_fiber_family(g1, g2.lift, mc.amplitude, mc.decay)
    if mc.kind == "skew-example":
        return BuiltMap(SkewProduct(g1, beta), g1, g2, rho, True)
    x = (g1.gap_interval(mc.perturb_gap_index)[0], mc.perturb_fiber)
    rp = build_return_perturbation(beta, x, mc.perturb_eps, mc.perturb_delta)
    return BuiltMap(SkewProduct(g1, rp.beta_prime), g1, g2, rho, True)


@dataclass
class Report:
    """Experiment outcome: config echo, per-check results, artifacts.

    ``checks`` is a list of dicts with keys ``name``, ``status`` (``pass`` /
    ``fail`` / ``inconclusive``) and witness details; ``tables`` maps CSV
    file names to row lists; ``artifacts`` maps file names to raw text.
    Timings are kept separate so the serialized report is identical across
    runs with one config and seed.
    """

    config: dict
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def add(self, name: str, status: str, **details) -> None:
        entry = {"name": name, "status": status}
        entry.update(details)
        self.checks.append(entry)

    @property
    def status(self) -> str:
        statuses = {c["status"] for c in self.checks}
        if "fail" in statuses:
            return "fail"
        if "inconclusive" in statuses:
            return "inconclusive"
        return "pass"

    def to_json(self) -> str:
        doc = {"tool": "toruslab", "version": __version__,
               "status": self.status, "config": self.config,
               "checks": self.checks}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _fmt(x: float) -> str:
    return f"{x:.17g}"


# -- suites -----------------------------------------------------------------

def _suite_rotation(cfg: ExperimentConfig, built: BuiltMap, report: Report) -> None:
    rng = np.random.default_rng(cfg.seed)
    rows = [("n", "estimate_1", "estimate_2", "bound")]
    rho = built.rho
    ok = True
    worst = 0.0
    for n in cfg.rotation_iters:
        ests = []
        for _ in range(cfg.rotation_starts):
            z0 = (float(rng.random()), float(rng.random()))
            rv = rotation_vector(built.f, z0, n)
            ests.append(rv.vector)
        e1 = sum(v[0] for v in ests) / len(ests)
        e2 = sum(v[1] for v in ests) / len(ests)
        bound = 2.0 / n
        rows.append((str(n), _fmt(e1), _fmt(e2), _fmt(bound)))
        # rigid translations meet the bound exactly; constructions carry
        # their truncation budget on top
        slack = 0.0 if built.g1 is None else 1e-6 + built.g1.tail
        if built.has_fiber_family:
            slack += 2e-3
        dev = max(abs(e1 - rho[0]), abs(e2 - rho[1]))
        worst = max(worst, dev - bound - slack)
        if dev > bound + slack:
            ok = False
    report.tables["rotation.csv"] = rows
    report.add("rotation-vector-vs-prescribed", "pass" if ok else "fail",
               worst_excess=_fmt(worst), rho=[_fmt(rho[0]), _fmt(rho[1])])


def _suite_chain(cfg: ExperimentConfig, built: BuiltMap, report: Report) -> None:
    eps = max(cfg.epsilon, 2.0 / cfg.m)
    rep = chain_transitivity_report(built.f, cfg.m, eps, cfg.trials, cfg.seed)
    rows = [("from", "to", "connected", "path_length")]
    for a, b, conn, length in rep.pairs:
        rows.append((str(a), str(b), str(int(conn)),
                     "" if length is None else str(length)))
    report.tables["chain_pairs.csv"] = rows
    report.add("chain-connectivity", "pass" if rep.fraction_connected == 1.0 else "fail",
               fraction=_fmt(rep.fraction_connected),
               max_path_length=rep.max_path_length,
               edges=rep.n_edges,
               recurrent_single_scc=rep.recurrent_single_scc)
    om = nonwandering_approx(built.f, cfg.omega_m, cfg.omega_horizon)
    report.add("chain-wandering-boxes", "pass",
               certified_nonreturning=len(om.certified),
               returning=len(om.returning),
               grid=cfg.omega_m, horizon=cfg.omega_horizon)


def _suite_two_jump(cfg: ExperimentConfig, built: BuiltMap, report: Report) -> None:
    rng = np.random.default_rng(cfg.seed)
    omega = nonwandering_approx(built.f, cfg.budgets.omega_grid,
                                cfg.budgets.omega_horizon)
    failed = incomplete = 0
    for i in range(cfg.two_jump_pairs):
        x = (float(rng.random()), float(rng.random()))
        y = (float(rng.random()), float(rng.random()))
        try:
            po = two_jump_pseudo_orbit(built.f, x, y, cfg.epsilon,
                                       budgets=cfg.budgets, omega=omega)
        except BudgetError as exc:
            report.add(f"two-jump-pair-{i}", "inconclusive",
                       reason=str(exc),
                       near_miss=getattr(exc, "near_miss", None))
            incomplete += 1
            continue
        val = validate_pseudo_orbit(built.f, po)
        good = val.valid and val.jump_count <= 2
        failed += 0 if good else 1
        report.add(f"two-jump-pair-{i}", "pass" if good else "fail",
                   steps=po.n_steps, jumps=val.jump_count,
                   max_step_error=_fmt(val.max_step_error))
        report.artifacts[f"pseudo_orbit_{i}.txt"] = po.to_text()
    status = "fail" if failed else ("inconclusive" if incomplete else "pass")
    report.add("two-jump-summary", status,
               pairs=cfg.two_jump_pairs, epsilon=_fmt(cfg.epsilon),
               failed=failed, inconclusive=incomplete)


def _suite_essential(cfg: ExperimentConfig, built: BuiltMap, report: Report) -> None:
    m = cfg.essential_m
    rng = np.random.default_rng(cfg.seed)
    canonical = [
        ("full-torus", BoxDomain.full(m), DOUBLY_ESSENTIAL),
        ("annulus", BoxDomain.band(m, 0, 0, m // 2), SIMPLY_ESSENTIAL),
        ("single-cell", BoxDomain.from_cells(m, [(0, 0)]), INESSENTIAL),
    ]
    ok = True
    for name, dom, expect in canonical:
        got = classify_essentiality(dom).klass
        refined = classify_essentiality(dom.refine()).klass
        seeds_ok = all(classify_essentiality(dom, tree_seed=s).klass == got
                       for s in range(10))
        good = got == expect and refined == expect and seeds_ok
        ok = ok and good
        report.add(f"essential-{name}", "pass" if good else "fail",
                   expected=expect, got=got, grid_doubling=refined,
                   tree_seed_stable=seeds_ok)

    inter_ok = True
    for _ in range(cfg.essential_pairs):
        U = random_doubly_essential(m, rng)
        V = random_doubly_essential(m, rng)
        if not essential_intersection_check(U, V):
            inter_ok = False
            break
    report.add("essential-pair-intersections",
               "pass" if inter_ok else "fail", pairs=cfg.essential_pairs)

    w = max(1, m // 4)
    cross = BoxDomain.from_cells(
        m, [(i, j) for i in range(m) for j in range(m) if i < w or j < w])
    K = compute_capture_diameter(cross)
    expected = math.sqrt(2.0) * (1.0 - w / m)
    k_ok = abs(K - expected) <= 1.5 / m
    report.add("capture-diameter-cross", "pass" if k_ok else "fail",
               K=_fmt(K), expected=_fmt(expected))
    report.artifacts["cross_domain.rle"] = cross.to_rle()


def _suite_perturb(cfg: ExperimentConfig, built: BuiltMap, report: Report) -> None:
    if not built.has_fiber_family:
        report.add("perturb", "inconclusive",
                   reason="perturb suite needs a skew-example map")
        return
    mc = cfg.map
    g1 = built.g1
    beta = build_example_fiber_family(g1, built.g2.lift, mc.amplitude, mc.decay)
    x = (g1.gap_interval(mc.perturb_gap_index)[0], mc.perturb_fiber)
    try:
        rp = build_return_perturbation(beta, x, mc.perturb_eps, mc.perturb_delta)
    except (ValueError, BudgetError) as exc:
        report.add("perturb-build", "inconclusive", reason=str(exc))
        return
    report.add("perturb-build", "pass", k=rp.k, n0=rp.n0,
               theta=_fmt(rp.theta), host_gap=rp.host_index,
               min_radius=_fmt(rp.min_radius))

    fprime = SkewProduct(g1, rp.beta_prime)
    chk = verify_return(fprime, x, mc.perturb_eps, rp.k,
                        samples=cfg.perturb_samples)
    report.add("perturb-return", "pass" if chk.hit else "fail",
               hit=chk.hit, min_distance=_fmt(chk.min_distance),
               witness=None if chk.witness is None else
               [_fmt(chk.witness[0]), _fmt(chk.witness[1])])

    devs = []
    for n in range(-50, 50):
        endpoint = g1.gap_interval(n)[0]
        devs.append(abs(rp.beta_prime.angle(endpoint) - beta.angle(endpoint)))
    rng = np.random.default_rng(cfg.seed)
    ss = rng.random(10**4)
    sup = float(np.max(np.abs(rp.beta_prime.angle_array(ss)
                              - beta.angle_array(ss))))
    agree_ok = max(devs) == 0.0
    sup_ok = sup < mc.perturb_delta
    report.add("perturb-agreement-on-minimal-set",
               "pass" if agree_ok else "fail", max_deviation=_fmt(max(devs)))
    report.add("perturb-sup-distance", "pass" if sup_ok else "fail",
               sup_distance=_fmt(sup), delta=_fmt(mc.perturb_delta))


def _suite_nonwandering(cfg: ExperimentConfig, built: BuiltMap, report: Report) -> None:
    om = nonwandering_approx(built.f, cfg.omega_m, cfg.nonwandering_horizon)
    expect_wandering = cfg.map.kind in ("denjoy-product", "skew-example",
                                        "skew-perturbed")
    status = "pass"
    if expect_wandering and not om.certified:
        status = "fail"
    if cfg.map.kind == "rigid" and om.certified:
        status = "fail"
    report.add("nonwandering-partition", status,
               certified_nonreturning=len(om.certified),
               returning=len(om.returning),
               grid=cfg.omega_m, horizon=cfg.nonwandering_horizon)
    report.artifacts["returning_boxes.rle"] = om.returning_domain().to_rle()


_SUITE_RUNNERS = {
    "rotation": _suite_rotation,
    "chain": _suite_chain,
    "two-jump": _suite_two_jump,
    "essential": _suite_essential,
    "perturb": _suite_perturb,
    "nonwandering": _suite_nonwandering,
}


def run_experiment(cfg: ExperimentConfig) -> Report:
    """Execute the configured suite(s) deterministically under the seed."""
    report = Report(config=cfg.echo())
    t0 = time.perf_counter()
    built = build_map(cfg.map)
    report.timings["build_map_s"] = time.perf_counter() - t0
    names = SUITES if cfg.suite == "all" else (cfg.suite,)
    for name in names:
        t0 = time.perf_counter()
        _SUITE_RUNNERS[name](cfg, built, report)
        report.timings[f"{name}_s"] = time.perf_counter() - t0
    return report


def emit_report(report: Report, out_dir, formats=("json", "csv")) -> list:
    """Write the report and its tables/artifacts; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "json" in formats:
        p = out / "report.json"
        p.write_text(report.to_json())
        written.append(p)
        t = out / "timings.json"
        t.write_text(json.dumps(report.timings, indent=2, sort_keys=True) + "\n")
        written.append(t)
    if "csv" in formats:
        for name, rows in report.tables.items():
            p = out / name
            p.write_text("\n".join(",".join(row) for row in rows) + "\n")
            written.append(p)
    for name, text in report.artifacts.items():
        p = out / name
        p.write_text(text)
        written.append(p)
    return written


def main(argv: Optional[list] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="toruslab",
        description="Verification experiments for non-resonant torus "
                    "homeomorphisms")
    parser.add_argument("suite", choices=SUITES + ("all",))
    parser.add_argument("--config", type=Path, default=None,
                        help="JSON configuration file (strict schema)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the configured random seed")
    parser.add_argument("--out", type=Path, default=Path("toruslab-out"),
                        help=f"output directory (env {OUT_ENV} overrides)")
    parser.add_argument("--threads", type=int, default=1,
                        help="accepted for compatibility; execution is "
                             "single-threaded and deterministic")
    args = parser.parse_args(argv)

    try:
        raw = {}
        if args.config is not None:
            raw = json.loads(args.config.read_text())
            if not isinstance(raw, dict):
                raise ConfigError("config root must be a JSON object")
        cfg = ExperimentConfig.parse(raw, args.suite)
        if args.seed is not None:
            cfg.seed = int(args.seed)
        cfg.threads = int(args.threads)
    except (ConfigError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 3

    out_dir = Path(os.environ.get(OUT_ENV, str(args.out)))
    report = run_experiment(cfg)
    emit_report(report, out_dir)

    for check in report.checks:
        print(f"[{check['status']:>12}] {check['name']}")
    print(f"report: {out_dir / 'report.json'} (status: {report.status})")
    return {"pass": 0, "fail": 1, "inconclusive": 2}[report.status]


if __name__ == "__main__":
    sys.exit(main())
