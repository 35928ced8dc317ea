"""Command-line front end: ``anyonqism {verify,spectrum,bethe,sweep}``.

Settings are resolved as built-in defaults, then the ``--config`` JSON document,
then explicit command-line flags (highest precedence).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .bethe import DEFAULT_TEST_POINTS, STRATEGIES, bethe_energy, continue_roots, match_spectrum, solve_bae
from .chain import (
    ModelSpec,
    affine_fit,
    build_hamiltonian,
    commutation_of_transfers,
    commutation_suite,
    dim_cap,
    exact_spectrum,
    hamiltonian_from_transfer,
    sector_labels,
    transfer_matrix,
)
from .errors import AnyonQISMError, DegenerateRoots, NoConvergence, ResourceLimit
from .integrability import check_rll, check_ybe, string_transparency_check
from .io import atomic_write, cpair, dumps_csv, dumps_json, spectrum_record

log = logging.getLogger("anyonqism")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CAP = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Everything a run depends on; equal configs give byte-identical output."""

    command: str = "verify"
    model: str = "xxx"
    L: int = 4
    eta: float = 1.0
    theta: float = 0.0
    theta1: float = 0.0
    theta2: float = 0.0
    theta3: float = 0.0
    sectors: list = field(default_factory=list)
    samples: int | None = None
    seed: int = 0
    tol: float | None = None
    out: str | None = None
    format: str = "json"
    strategy: str = "auto"
    lambda_test: list = field(default_factory=list)
    theta_grid: str = "0:6.283185307179586:13"
    sweep_angle: str = "all"
    bethe: bool = False
    plot: bool = False
    workers: int = 1
    timing: bool = False

    def validate(self):
        if self.model not in ("xxx", "tj"):
            raise ConfigError(f"model must be xxx or tj, got {self.model!r}")
        if int(self.L) != self.L or self.L < 1:
            raise ConfigError("L must be ≥ 1")
        if self.eta == 0:
            raise ConfigError("eta must be nonzero")
        if self.tol is not None and not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.samples is not None and self.samples < 1:
            raise ConfigError("samples must be ≥ 1")
        if self.workers < 1:
            raise ConfigError("workers must be ≥ 1")
        if self.format not in ("json", "csv"):
            raise ConfigError("format must be json or csv")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {', '.join(STRATEGIES)}")
        if self.sweep_angle not in ("1", "2", "3", "all"):
            raise ConfigError("sweep-angle must be 1, 2, 3 or all")
        for a in ("theta", "theta1", "theta2", "theta3", "eta"):
            if not np.isfinite(getattr(self, a)):
                raise ConfigError(f"{a} must be finite")
        for s in self.sectors:
            _check_sector(self, s)
        if self.plot and not self.out:
            raise ConfigError("--plot needs --out (figures are written next to the output file)")
        _parse_grid(self.theta_grid)

    def model_spec(self, angles=None) -> ModelSpec:
        if self.model == "xxx":
            th = self.theta if angles is None else angles[0]
            return ModelSpec.xxx(self.L, self.eta, th)
        a = (self.theta1, self.theta2, self.theta3) if angles is None else angles
        return ModelSpec.tj(self.L, self.eta, *a)

    def n_samples(self) -> int:
        """Sample count; defaults to 20 random draws for checks, 120 solver seeds otherwise."""
        if self.samples is not None:
            return self.samples
        return 20 if self.command == "verify" else 120

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("timing")
        d.pop("workers")
        return d


def _check_sector(cfg: RunConfig, s):
    if cfg.model == "xxx":
        if len(s) != 1 or not 0 <= s[0] <= cfg.L:
            raise ConfigError(f"XXX sectors are a single count 0..L, got {s}")
    elif len(s) != 2 or not 0 <= s[1] <= s[0] <= cfg.L:
        raise ConfigError(f"t-J sectors are 'N,M' with 0 <= M <= N <= L, got {s}")


def _parse_sector(text: str) -> list[int]:
    try:
        return [int(x) for x in str(text).split(",") if x.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"bad sector {text!r}") from exc


def _parse_complex(text) -> complex:
    if isinstance(text, (list, tuple)):
        return complex(text[0], text[1] if len(text) > 1 else 0.0)
    try:
        parts = [float(x) for x in str(text).split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad complex value {text!r}; use 're,im'") from exc
    return complex(parts[0], parts[1] if len(parts) > 1 else 0.0)


def _parse_grid(text: str) -> np.ndarray:
    try:
        a, b, n = str(text).split(":")
        n = int(n)
        grid = np.linspace(float(a), float(b), n)
    except ValueError as exc:
        raise ConfigError(f"theta grid must be 'start:stop:count', got {text!r}") from exc
    if n < 1:
        raise ConfigError("theta grid needs at least one point")
    return grid


# --- checks ------------------------------------------------------------------------


def _check(name, residual, tol, inputs, extra=None) -> dict:
    ok = bool(np.isfinite(residual) and residual <= tol)
    rec = {"name": name, "residual": float(residual) if np.isfinite(residual) else None, "tol": tol, "passed": ok}
    if not ok:
        rec["inputs"] = inputs
    if extra:
        rec.update(extra)
    return rec


def _rand_c(rng, scale=1.0) -> complex:
    return complex(rng.normal(0, scale), rng.normal(0, scale))


def run_verify(cfg: RunConfig) -> tuple[int, dict]:
    rng = np.random.default_rng(cfg.seed)
    model = cfg.model_spec()
    r, lax, g = model.r_matrix(), model.lax(), model.grading
    tol = (lambda default: cfg.tol if cfg.tol is not None else default)
    checks = []

    worst, worst_in = 0.0, None
    tworst, t_in = 0.0, None
    for _ in range(cfg.n_samples()):
        lam, mu = _rand_c(rng), _rand_c(rng)
        rep = check_ybe(r, lam, mu)
        if not rep.applicable:
            worst, worst_in = np.inf, [cpair(lam), cpair(mu)]
        elif rep.residual >= worst:
            worst, worst_in = rep.residual, [cpair(lam), cpair(mu)]
        tr = string_transparency_check(r(lam), g)
        if tr.worst_violation >= tworst:
            tworst, t_in = tr.worst_violation, [cpair(lam)]
    checks.append(_check("ybe_component", worst, tol(1e-12), {"lambda_mu": worst_in}))
    checks.append(_check("string_transparency", tworst, tol(1e-12), {"lambda": t_in}))

    worst, worst_in = 0.0, None
    for _ in range(cfg.n_samples()):
        lam, mu = _rand_c(rng), _rand_c(rng)
        res = check_rll(r, lax, lam=lam, mu=mu).residual
        if res >= worst:
            worst, worst_in = res, [cpair(lam), cpair(mu)]
    checks.append(_check("rll", worst, tol(1e-12), {"lambda_mu": worst_in}))

    if model.L >= 2:
        rep = commutation_suite(model)
        checks.append(_check("commutation_suite", rep.residual, tol(1e-13), {"relation": rep.details["worst_relation"]}))

    worst, worst_in = 0.0, None
    for _ in range(cfg.n_samples()):
        lam, mu = _rand_c(rng), _rand_c(rng)
        res = commutation_of_transfers(model, lam, mu).residual
        if res >= worst:
            worst, worst_in = res, [cpair(lam), cpair(mu)]
    checks.append(_check("commuting_transfers", worst, tol(1e-10), {"lambda_mu": worst_in}))

    # a single site has no bond, so there is no local Hamiltonian to extract
    if model.L >= 2:
        h = build_hamiltonian(model)
        h_trans = hamiltonian_from_transfer(model)
        alpha, beta, fit_res = affine_fit(h_trans, h)
        checks.append(
            _check("hamiltonian_match", fit_res, tol(1e-10), {}, {"alpha": cpair(alpha), "beta": cpair(beta)})
        )
        mu = _rand_c(rng)
        t = transfer_matrix(model, mu).matrix
        norm = np.linalg.norm(h.matrix) * np.linalg.norm(t)
        comm = np.linalg.norm(h.matrix @ t - t @ h.matrix) / norm if norm else 0.0
        checks.append(_check("hamiltonian_in_family", comm, tol(1e-10), {"mu": cpair(mu)}))

    ok = all(c["passed"] for c in checks)
    return (EXIT_OK if ok else EXIT_FAIL), {"suite": "verify", "passed": ok, "checks": checks}


def _sectors(cfg: RunConfig, model: ModelSpec) -> list[tuple[int, ...]]:
    if cfg.sectors:
        return [tuple(s) for s in cfg.sectors]
    return sector_labels(model.layout())


def _ed_sector(model, s):
    return s[0] if model.kind == "xxx" else s


def run_spectrum(cfg: RunConfig) -> tuple[int, dict]:
    model = cfg.model_spec()
    h = build_hamiltonian(model)
    label = "H" if model.kind == "xxx" else "eta*H"
    records = []
    for s in _sectors(cfg, model):
        spec = exact_spectrum(h, _ed_sector(model, s), source=label)
        records.append(spectrum_record(model, spec))
    for lam in cfg.lambda_test:
        lam = _parse_complex(lam)
        t = transfer_matrix(model, lam)
        for s in _sectors(cfg, model):
            spec = exact_spectrum(t, _ed_sector(model, s), source=f"tau({lam.real:g}{lam.imag:+g}j)")
            records.append(spectrum_record(model, spec))
    return EXIT_OK, {"suite": "spectrum", "records": records}


def run_bethe(cfg: RunConfig) -> tuple[int, dict]:
    model = cfg.model_spec()
    sectors = _sectors(cfg, model)
    reports = []
    ed_ok = model.layout(aux=True).dim <= dim_cap()
    all_matched = True
    for s in sectors:
        failures = []
        sets = solve_bae(model, s, cfg.strategy, samples=cfg.n_samples(), seed=cfg.seed, failures=failures)
        entry = {"sector": list(s), "n_failures": len(failures)}
        if ed_ok:
            rep = match_spectrum(model, s, sets, DEFAULT_TEST_POINTS, tol=cfg.tol or 1e-7)
            entry["match"] = rep.to_json()
            all_matched &= rep.all_matched
        else:
            entry["roots"] = [r.to_json() for r in sets]
        reports.append(entry)
    return (EXIT_OK if all_matched else EXIT_FAIL), {"suite": "bethe", "ed_available": ed_ok, "sectors": reports}


def _sweep_angles(cfg: RunConfig, theta: float) -> tuple[float, ...]:
    if cfg.model == "xxx":
        return (theta,)
    base = [cfg.theta1, cfg.theta2, cfg.theta3]
    if cfg.sweep_angle == "all":
        return (theta, theta, theta)
    base[int(cfg.sweep_angle) - 1] = theta
    return tuple(base)


def _sweep_point(args):
    cfg, theta = args
    model = cfg.model_spec(_sweep_angles(cfg, theta))
    h = build_hamiltonian(model)
    out = []
    for s in _sectors(cfg, model):
        ev = exact_spectrum(h, _ed_sector(model, s)).eigenvalues
        out.append((tuple(s), [complex(x) for x in ev]))
    return out


def run_sweep(cfg: RunConfig) -> tuple[int, dict]:
    grid = _parse_grid(cfg.theta_grid)
    tasks = [(cfg, float(t)) for t in grid]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_sweep_point, tasks))
    else:
        results = [_sweep_point(t) for t in tasks]
    rows = []
    for theta, res in zip(grid, results):
        for s, ev in res:
            for k, e in enumerate(ev):
                rows.append([float(theta), ",".join(map(str, s)), k, e.real + 0.0, e.imag + 0.0])
    payload = {"suite": "sweep", "theta": [float(t) for t in grid], "rows": rows}
    if cfg.bethe:
        payload["bethe"] = _sweep_bethe(cfg, grid)
    return EXIT_OK, payload


def _sweep_bethe(cfg: RunConfig, grid) -> list[dict]:
    """Track root sets from the first grid point by continuation; failures are logged per point."""
    out = []
    for s in _sectors(cfg, cfg.model_spec(_sweep_angles(cfg, grid[0]))):
        model0 = cfg.model_spec(_sweep_angles(cfg, grid[0]))
        tracks = [r for r in solve_bae(model0, s, cfg.strategy, samples=cfg.n_samples(), seed=cfg.seed) if not r.n_infinite]
        for k, start in enumerate(tracks):
            path = [{"theta": float(grid[0]), "energy": cpair(bethe_energy(start))}]
            cur, prev_angles = start, np.array(_sweep_angles(cfg, grid[0]))
            for theta in grid[1:]:
                angles = np.array(_sweep_angles(cfg, theta))
                try:
                    cur = continue_roots(cur, cfg.model_spec(tuple(angles)), start_angles=prev_angles)
                except (NoConvergence, DegenerateRoots) as exc:
                    log.warning("sector %s track %d lost at theta=%.6g: %s", s, k, theta, exc)
                    path.append({"theta": float(theta), "energy": None, "reason": str(exc)})
                    break
                prev_angles = angles
                path.append({"theta": float(theta), "energy": cpair(bethe_energy(cur))})
            out.append({"sector": list(s), "track": k, "path": path})
    return out


# --- output ------------------------------------------------------------------------


def _csv(cfg: RunConfig, payload: dict) -> str:
    suite = payload["suite"]
    if suite == "verify":
        return dumps_csv(["check", "residual", "tol", "passed"], [[c["name"], c["residual"], c["tol"], c["passed"]] for c in payload["checks"]])
    if suite == "spectrum":
        rows = []
        for rec in payload["records"]:
            sec = ",".join(map(str, rec["sector"] or []))
            for k, (re, im) in enumerate(rec["eigenvalues"]):
                rows.append([rec["source"], sec, k, re, im])
        return dumps_csv(["operator", "sector", "index", "re", "im"], rows)
    if suite == "bethe":
        rows = []
        for sec in payload["sectors"]:
            for e in sec.get("match", {}).get("entries", []):
                roots = json.dumps(e["roots"], sort_keys=True, separators=(",", ":"))
                m = e["matched_energy"]
                rows.append([
                    ",".join(map(str, sec["sector"])), roots, e["energy"][0], e["energy"][1],
                    None if m is None else m[0], None if m is None else m[1],
                    max(e["energy_residual"], e["lambda_residual"]),
                ])
        return dumps_csv(["sector", "roots", "energy_re", "energy_im", "ed_re", "ed_im", "residual"], rows)
    return dumps_csv(["theta", "sector", "level", "energy_re", "energy_im"], payload["rows"])


def _plot(cfg: RunConfig, payload: dict, out: Path):
    from .plotting import plot_level_flow, plot_spectrum

    fig = out.with_suffix(".png")
    title = f"{cfg.model} L={cfg.L}"
    if payload["suite"] == "sweep":
        rows = [(r[0], r[1], r[2], r[3]) for r in payload["rows"]]
        return plot_level_flow(rows, fig, title)
    if payload["suite"] == "spectrum":
        return plot_spectrum(payload["records"], fig, title)
    return None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="anyonqism", description="Integrable hard-core anyon chains: checks, spectra, Bethe roots.")
    sub = p.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with run settings (flags override it)")
    common.add_argument("--model", choices=["xxx", "tj"], default=S)
    common.add_argument("--L", type=int, default=S)
    common.add_argument("--eta", type=float, default=S)
    common.add_argument("--theta", type=float, default=S, help="XXX statistics angle, q = exp(i theta)")
    for k in (1, 2, 3):
        common.add_argument(f"--theta{k}", type=float, default=S, help=f"t-J angle for q{k}")
    common.add_argument("--sector", action="append", default=S, help="'M' (XXX) or 'N,M' (t-J); repeatable")
    common.add_argument("--samples", type=int, default=S)
    common.add_argument("--seed", type=int, default=S)
    common.add_argument("--tol", type=float, default=S)
    common.add_argument("--out", default=S, help="output file (stdout when omitted)")
    common.add_argument("--format", choices=["json", "csv"], default=S)
    common.add_argument("--plot", action="store_true", default=S, help="also write a PNG next to --out")
    common.add_argument("--workers", type=int, default=S)
    common.add_argument("--timing", action="store_true", default=S, help="add wall-clock timing (output no longer reproducible)")
    common.add_argument("-v", "--verbose", action="store_true")
    sub.add_parser("verify", parents=[common], help="YBE, RLL, commutation, transfer and Hamiltonian checks")
    sp = sub.add_parser("spectrum", parents=[common], help="sector-resolved exact spectra")
    sp.add_argument("--lambda-test", action="append", default=S, help="also diagonalize tau at 're,im'")
    bp = sub.add_parser("bethe", parents=[common], help="solve the Bethe equations and match against ED")
    bp.add_argument("--strategy", choices=list(STRATEGIES), default=S)
    wp = sub.add_parser("sweep", parents=[common], help="level flows versus the statistics angle")
    wp.add_argument("--theta-grid", default=S, help="'start:stop:count' (inclusive)")
    wp.add_argument("--sweep-angle", choices=["1", "2", "3", "all"], default=S, help="t-J angle to sweep")
    wp.add_argument("--bethe", action="store_true", default=S, help="track Bethe roots along the grid")
    wp.add_argument("--strategy", choices=list(STRATEGIES), default=S)
    return p


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    values = {}
    if getattr(ns, "config", None):
        try:
            with open(ns.config) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {ns.config}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        values.update(doc)
    cli = {k: v for k, v in vars(ns).items() if k not in ("config", "verbose")}
    if "sector" in cli:
        cli["sectors"] = cli.pop("sector")
    values.update(cli)
    names = {f.name for f in fields(RunConfig)}
    unknown = set(values) - names
    if unknown:
        raise ConfigError(f"unknown settings: {', '.join(sorted(unknown))}")
    if "sectors" in values:
        values["sectors"] = [s if isinstance(s, list) else _parse_sector(s) for s in values["sectors"]]
    try:
        cfg = RunConfig(**values)
        for f in fields(RunConfig):
            v = getattr(cfg, f.name)
            if f.name in ("L", "samples", "seed", "workers") and v is not None:
                if isinstance(v, bool) or int(v) != v:
                    raise ConfigError(f"{f.name} must be an integer")
                setattr(cfg, f.name, int(v))
            if f.name in ("eta", "theta", "theta1", "theta2", "theta3") and v is not None:
                setattr(cfg, f.name, float(v))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    cfg.validate()
    return cfg


RUNNERS = {"verify": run_verify, "spectrum": run_spectrum, "bethe": run_bethe, "sweep": run_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(ns)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    t0 = time.perf_counter()
    try:
        code, payload = RUNNERS[cfg.command](cfg)
    except ResourceLimit as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (AnyonQISMError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    record = {"config": cfg.echo(), **payload}
    if cfg.timing:
        record["timing_s"] = time.perf_counter() - t0
    text = dumps_json(record) if cfg.format == "json" else _csv(cfg, payload)
    if cfg.out:
        out = atomic_write(cfg.out, text)
        if cfg.plot:
            _plot(cfg, payload, out)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
