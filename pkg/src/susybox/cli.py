"""Configuration-driven runner: verification suite, single runs, and sweeps.

Sweeps emit one row per (state, tau, mode) with the full set of scalar
diagnostics, deterministically ordered and formatted so identical configs
produce byte-identical CSV files. The fig2/fig3 subcommands are sweep
presets over the ground-state and isospectral state sets.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import observables
from .dynamics import evolve_bare, evolve_cd, sudden_quench
from .hierarchy import (DEFAULT_BOX_LENGTH, NATURAL_UNITS, EigenIndex,
                        HierarchySpec, check_factorization, energy)
from .numerics import (IntegrationError, IntegratorConfig, coupling_matrix,
                       gauss_legendre, integrate)
from .ramp import RampSpec, gamma, gamma_dot

GROUNDSTATE_SET = ((2, 1), (3, 1), (4, 1))
ISOSPECTRAL_SET = ((2, 3), (3, 2), (4, 1))
PAPER_STATES = tuple(dict.fromkeys(GROUNDSTATE_SET + ISOSPECTRAL_SET))

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


class ConfigError(ValueError):
    """Invalid scenario configuration."""


def default_tau_grid(count: int = 40, lo: float = 0.05, hi: float = 8.0) -> tuple:
    return tuple(float(t) for t in np.geomspace(lo, hi, count))


@dataclass
class ScenarioConfig:
    L_i: float = DEFAULT_BOX_LENGTH
    ratio: float = 2.0
    tau: tuple = field(default_factory=default_tau_grid)
    states: tuple = PAPER_STATES
    basis: int = 64
    nodes: int = 200
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    mode: str = "both"              # bare | cd | both
    bures_from: str = "target"      # target | evolved
    out: Optional[str] = None
    fmt: str = "csv"                # csv | json
    jobs: int = 1

    def validate(self) -> "ScenarioConfig":
        if self.L_i <= 0 or self.ratio <= 0:
            raise ConfigError("L_i and ratio must be positive")
        if not self.tau:
            raise ConfigError("tau list must not be empty")
        if any(t <= 0 for t in self.tau):
            raise ConfigError("all tau values must be positive")
        if not self.states:
            raise ConfigError("states list must not be empty")
        if any(a < 1 or n < 1 for a, n in self.states):
            raise ConfigError("states must have alpha >= 1 and n >= 1")
        if self.basis < 2 or self.nodes < 2:
            raise ConfigError("basis and nodes must be at least 2")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ConfigError("tolerances must be positive")
        if self.mode not in ("bare", "cd", "both"):
            raise ConfigError("mode must be bare, cd, or both")
        if self.bures_from not in ("target", "evolved"):
            raise ConfigError("bures_from must be target or evolved")
        if self.fmt not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        return self

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["tau"] = list(self.tau)
        d["states"] = [list(s) for s in self.states]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(d)
        if "tau" in kwargs:
            kwargs["tau"] = tuple(float(t) for t in kwargs["tau"])
        if "states" in kwargs:
            kwargs["states"] = tuple((int(a), int(n)) for a, n in kwargs["states"])
        return cls(**kwargs).validate()

    @classmethod
    def from_file(cls, path: str) -> "ScenarioConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class SweepResultRow:
    tau: float
    alpha: int
    n: int
    mode: str
    bures: float
    fidelity: float
    avg_energy: float
    adiabatic_energy: float
    excess_energy: float
    avg_cost_rate: float
    qsl_na: float
    qsl_sta: float


ROW_FIELDS = tuple(f.name for f in dataclasses.fields(SweepResultRow))


def compute_row(cfg: ScenarioConfig, alpha: int, n: int, tau: float, mode: str):
    """One sweep row plus non-schema diagnostics (norm drift, sample fidelity)."""
    spec = HierarchySpec(alpha, cfg.L_i)
    index = EigenIndex(alpha, n)
    ramp = RampSpec(cfg.L_i, cfg.ratio * cfg.L_i, tau)
    rule = gauss_legendre(cfg.nodes)
    iconf = IntegratorConfig(rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol)
    evolve = evolve_cd if mode == "cd" else evolve_bare
    traj = evolve(spec, index, ramp, n_basis=cfg.basis, config=iconf, rule=rule)

    fid = observables.fidelity(traj.final_state(), n)
    avg_e = observables.time_avg_energy(traj)
    ad_e = observables.adiabatic_avg_energy(index, ramp, spec.units, rule)
    if cfg.bures_from == "evolved":
        angle = float(np.arccos(min(math.sqrt(fid), 1.0)))
    else:
        angle = observables.bures_angle(index, ramp.L_i, ramp.L_f, rule)
    row = SweepResultRow(
        tau=tau, alpha=alpha, n=n, mode=mode,
        bures=angle,
        fidelity=fid,
        avg_energy=avg_e,
        adiabatic_energy=ad_e,
        excess_energy=avg_e - ad_e,
        avg_cost_rate=observables.time_avg_cost(index, ramp, rule, spec.units),
        qsl_na=observables.qsl_nonadiabatic(angle, avg_e, spec.units),
        qsl_sta=observables.qsl_sta(index, ramp, rule, spec.units),
    )
    fser = traj.fidelity_series()
    extras = {
        "min_sample_fidelity": float(fser.min()),
        "max_sample_fidelity": float(fser.max()),
        "max_norm_error": traj.max_norm_error,
        "truncation_warning": traj.truncation_warning,
    }
    return row, extras


def _row_job(args):
    cfg_dict, alpha, n, tau, mode = args
    cfg = ScenarioConfig.from_dict(cfg_dict)
    return compute_row(cfg, alpha, n, tau, mode)


def run_sweep(cfg: ScenarioConfig):
    """All rows for states x tau x modes; per-row failures are collected.

    Rows are computed as independent jobs (optionally in parallel) and
    sorted by (alpha, n, tau, mode) before returning, so output order does
    not depend on scheduling.
    """
    cfg.validate()
    modes = ("bare", "cd") if cfg.mode == "both" else (cfg.mode,)
    jobs = [(alpha, n, tau, mode)
            for (alpha, n) in cfg.states for tau in cfg.tau for mode in modes]
    rows, extras, failures = [], {}, []

    if cfg.jobs > 1:
        arglist = [(cfg.to_dict(),) + job for job in jobs]
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            for job, outcome in zip(jobs, pool.map(_job_guard, arglist)):
                _collect(job, outcome, rows, extras, failures)
    else:
        for job in jobs:
            outcome = _job_guard((cfg.to_dict(),) + job)
            _collect(job, outcome, rows, extras, failures)

    rows.sort(key=lambda r: (r.alpha, r.n, r.tau, r.mode))
    return rows, extras, failures


def _job_guard(args):
    try:
        return ("ok", _row_job(args))
    except Exception as exc:  # per-row failure: record, keep sweeping
        return ("error", f"{type(exc).__name__}: {exc}")


def _collect(job, outcome, rows, extras, failures):
    status, payload = outcome
    if status == "ok":
        row, extra = payload
        rows.append(row)
        extras[job] = extra
    else:
        failures.append((job, payload))


def format_value(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def rows_to_csv(rows: Sequence[SweepResultRow]) -> str:
    lines = [",".join(ROW_FIELDS)]
    for r in rows:
        lines.append(",".join(format_value(getattr(r, f)) for f in ROW_FIELDS))
    return "\n".join(lines) + "\n"


def rows_to_json(cfg: ScenarioConfig, rows: Sequence[SweepResultRow]) -> str:
    payload = {"config": cfg.to_dict(),
               "rows": [dataclasses.asdict(r) for r in rows]}
    return json.dumps(payload, indent=2) + "\n"


def rows_from_json(text: str):
    payload = json.loads(text)
    return [SweepResultRow(**r) for r in payload["rows"]]


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- verify ---

def cmd_verify(alpha_max: int = 4, n_max: int = 6, nodes: int = 200,
               tol: float = 1e-8, out: Optional[str] = None,
               superpotential_sign: float = 1.0) -> int:
    """Run the algebraic identity suite; exit 0 iff every residual is small."""
    rule = gauss_legendre(nodes)
    checks = []

    for alpha in range(1, alpha_max + 1):
        rep = check_factorization(HierarchySpec(alpha), n_max, rule, tol=tol,
                                  superpotential_sign=superpotential_sign)
        checks.append((f"factorization alpha={alpha}",
                       max(rep.factorization_residuals)))
        checks.append((f"ground-state annihilation alpha={alpha}",
                       rep.annihilation_norm))
        checks.append((f"intertwining alpha={alpha}",
                       max(rep.intertwining_residuals)))

    rng = np.random.default_rng(7)
    shift = 0.0
    for alpha in range(1, alpha_max + 1):
        for n in range(1, n_max + 1):
            L = float(rng.uniform(0.5, 3.0))
            shift = max(shift, abs(energy(EigenIndex(alpha + 1, n), L)
                                   - energy(EigenIndex(alpha, n + 1), L)))
    checks.append(("isospectral shift", shift))

    ortho = 0.0
    for alpha in range(1, alpha_max + 1):
        from .hierarchy import eigenstate
        vals = np.array([eigenstate(EigenIndex(alpha, k)).evaluate(rule.nodes)
                         for k in range(1, 13)])
        gram = (vals * rule.weights) @ vals.T
        ortho = max(ortho, float(np.abs(gram - np.eye(12)).max()))
    checks.append(("orthonormality", ortho))

    antisym = 0.0
    for alpha in range(1, alpha_max + 1):
        g = coupling_matrix(alpha, 12, rule).g
        antisym = max(antisym, float(np.abs(g + g.T).max()))
    checks.append(("coupling antisymmetry", antisym))

    cdres = max(observables.cd_intertwine_residual(a, n, L=1.3, Ldot=0.7, rule=rule)
                for (a, n) in ((1, 1), (1, 2), (2, 1)))
    checks.append(("counterdiabatic intertwining", cdres))

    ramp = RampSpec(DEFAULT_BOX_LENGTH, 2 * DEFAULT_BOX_LENGTH, 1.0)
    log_int = integrate(lambda t: np.asarray(gamma_dot(ramp, t)) / np.asarray(gamma(ramp, t)),
                        0.0, ramp.tau, rule)
    checks.append(("ramp log integral", abs(log_int - math.log(2.0))))

    ok = True
    report = []
    for name, resid in checks:
        passed = resid < tol
        ok = ok and passed
        line = f"{'PASS' if passed else 'FAIL'} {name}: residual {resid:.3e}"
        print(line)
        report.append({"check": name, "residual": resid, "passed": passed})
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            json.dump({"tolerance": tol, "checks": report, "ok": ok}, fh, indent=2)
    return EXIT_OK if ok else EXIT_NUMERICAL


# ------------------------------------------------------- small subcommands ---

def cmd_spectrum(alpha_max: int, n_max: int, L: float, out: Optional[str],
                 fmt: str) -> int:
    rows = [(a, n, energy(EigenIndex(a, n), L))
            for a in range(1, alpha_max + 1) for n in range(1, n_max + 1)]
    if fmt == "json":
        _emit(json.dumps({"L": L, "levels": [
            {"alpha": a, "n": n, "energy": e} for a, n, e in rows]}, indent=2) + "\n", out)
    else:
        lines = ["alpha,n,energy"]
        lines += [f"{a},{n},{format_value(e)}" for a, n, e in rows]
        _emit("\n".join(lines) + "\n", out)
    return EXIT_OK


def cmd_ramp(L_i: float, ratio: float, tau: float, samples: int,
             out: Optional[str], fmt: str) -> int:
    spec = RampSpec(L_i, ratio * L_i, tau)
    t = np.linspace(0.0, tau, samples)
    g = np.asarray(gamma(spec, t))
    gd = np.asarray(gamma_dot(spec, t))
    if fmt == "json":
        _emit(json.dumps({"L_i": L_i, "ratio": ratio, "tau": tau, "samples": [
            {"t": float(a), "gamma": float(b), "gamma_dot": float(c)}
            for a, b, c in zip(t, g, gd)]}, indent=2) + "\n", out)
    else:
        lines = ["t,gamma,gamma_dot"]
        lines += [f"{format_value(float(a))},{format_value(float(b))},{format_value(float(c))}"
                  for a, b, c in zip(t, g, gd)]
        _emit("\n".join(lines) + "\n", out)
    return EXIT_OK


def cmd_evolve(cfg: ScenarioConfig, alpha: int, n: int, tau: float,
               mode: str) -> int:
    spec = HierarchySpec(alpha, cfg.L_i)
    index = EigenIndex(alpha, n)
    ramp = RampSpec(cfg.L_i, cfg.ratio * cfg.L_i, tau)
    rule = gauss_legendre(cfg.nodes)
    iconf = IntegratorConfig(rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol)
    evolve = evolve_cd if mode == "cd" else evolve_bare
    traj = evolve(spec, index, ramp, n_basis=cfg.basis, config=iconf, rule=rule)
    fser = traj.fidelity_series()
    norm = np.abs(traj.coeffs) ** 2
    lines = ["t,L,fidelity,norm,energy"]
    for k in range(len(traj.times)):
        lines.append(",".join(format_value(float(v)) for v in (
            traj.times[k], traj.lengths[k], fser[k], norm[k].sum(), traj.energies[k])))
    _emit("\n".join(lines) + "\n", cfg.out)
    return EXIT_OK


def cmd_sweep(cfg: ScenarioConfig) -> int:
    rows, extras, failures = run_sweep(cfg)
    for job, message in failures:
        print(f"row {job} failed: {message}", file=sys.stderr)
    text = rows_to_json(cfg, rows) if cfg.fmt == "json" else rows_to_csv(rows)
    _emit(text, cfg.out)
    if failures:
        return EXIT_NUMERICAL
    return EXIT_OK


# ----------------------------------------------------------------- parsing ---

def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--li", type=float, help="initial box length")
    p.add_argument("--ratio", type=float, help="expansion ratio L_f/L_i")
    p.add_argument("--tau", help="comma-separated stroke durations")
    p.add_argument("--basis", type=int, help="number of basis states N")
    p.add_argument("--nodes", type=int, help="quadrature node count M")
    p.add_argument("--rtol", type=float, help="integrator relative tolerance")
    p.add_argument("--mode", choices=("bare", "cd", "both"))
    p.add_argument("--bures-from", choices=("target", "evolved"), dest="bures_from",
                   help="reference state of the Bures angle")
    p.add_argument("--jobs", type=int, help="parallel row jobs")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), dest="fmt")


def _config_from_args(args, states=None, tau=None, mode=None) -> ScenarioConfig:
    cfg = ScenarioConfig.from_file(args.config) if args.config else ScenarioConfig()
    updates = {}
    if states is not None:
        updates["states"] = tuple(states)
    if tau is not None:
        updates["tau"] = tuple(tau)
    if mode is not None:
        updates["mode"] = mode
    for attr, key in (("li", "L_i"), ("ratio", "ratio"), ("basis", "basis"),
                      ("nodes", "nodes"), ("rtol", "rel_tol"), ("mode", "mode"),
                      ("bures_from", "bures_from"), ("jobs", "jobs"),
                      ("out", "out"), ("fmt", "fmt")):
        v = getattr(args, attr, None)
        if v is not None:
            updates[key] = v
    if getattr(args, "tau", None):
        updates["tau"] = tuple(float(t) for t in str(args.tau).split(","))
    merged = {**cfg.to_dict(), **updates}
    return ScenarioConfig.from_dict(merged)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="susybox",
        description="Supersymmetric box hierarchy: expansion dynamics, "
                    "counterdiabatic driving, costs, and speed limits.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the algebraic identity suite")
    p.add_argument("--alpha-max", type=int, default=4)
    p.add_argument("--n-max", type=int, default=6)
    p.add_argument("--nodes", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out", help="write a JSON report here")

    p = sub.add_parser("spectrum", help="tabulate eigenenergies")
    p.add_argument("--alpha-max", type=int, default=4)
    p.add_argument("--n-max", type=int, default=5)
    p.add_argument("--li", type=float, default=DEFAULT_BOX_LENGTH)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), dest="fmt", default="csv")

    p = sub.add_parser("ramp", help="sample the length schedule")
    p.add_argument("--li", type=float, default=DEFAULT_BOX_LENGTH)
    p.add_argument("--ratio", type=float, default=2.0)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), dest="fmt", default="csv")

    p = sub.add_parser("evolve", help="one trajectory, sampled")
    p.add_argument("--alpha", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tau-single", type=float, default=1.0, dest="tau_single")
    _add_common(p)

    p = sub.add_parser("sweep", help="full diagnostic table over states x tau")
    p.add_argument("--alpha", type=int, help="restrict to one state: order")
    p.add_argument("--n", type=int, help="restrict to one state: level")
    _add_common(p)

    for name, desc in (("fig2", "ground-state + isospectral fidelity dataset"),
                       ("fig3", "cost and speed-limit dataset")):
        p = sub.add_parser(name, help=desc)
        _add_common(p)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(args.alpha_max, args.n_max, args.nodes, args.tol,
                              args.out)
        if args.command == "spectrum":
            return cmd_spectrum(args.alpha_max, args.n_max, args.li, args.out,
                                args.fmt)
        if args.command == "ramp":
            return cmd_ramp(args.li, args.ratio, args.tau, args.samples,
                            args.out, args.fmt)
        if args.command == "evolve":
            cfg = _config_from_args(args, states=[(args.alpha, args.n)])
            mode = cfg.mode if cfg.mode != "both" else "bare"
            return cmd_evolve(cfg, args.alpha, args.n, args.tau_single, mode)
        if args.command == "sweep":
            states = None
            if args.alpha is not None and args.n is not None:
                states = [(args.alpha, args.n)]
            cfg = _config_from_args(args, states=states)
            return cmd_sweep(cfg)
        if args.command == "fig2":
            cfg = _config_from_args(args,
                                    states=tuple(dict.fromkeys(GROUNDSTATE_SET + ISOSPECTRAL_SET)),
                                    mode=getattr(args, "mode", None) or "both")
            return cmd_sweep(cfg)
        if args.command == "fig3":
            cfg = _config_from_args(args,
                                    states=tuple(dict.fromkeys(GROUNDSTATE_SET + ISOSPECTRAL_SET)),
                                    mode=getattr(args, "mode", None) or "bare")
            return cmd_sweep(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    raise AssertionError("unreachable")


if __name__ == "__main__":
    raise SystemExit(main())
