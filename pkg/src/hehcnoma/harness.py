"""Experiment driver: JSON configs, SNR / power-allocation / EH-grid sweeps,
grid optimisers and CSV output."""
from __future__ import annotations

import csv
import hashlib
import itertools
import json
import logging
import math
from functools import lru_cache
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable

from . import __version__
from .analytic import e2e_aber
from .channel import SCENARIOS, FadingParams, Scenario
from .protocol import BETA_MAX, DEFAULT_ETA, EhKind, EhProtocol, PowerAllocation
from .simulator import SimConfig, StoppingRule, run_point

__all__ = [
    "CSV_HEADER",
    "OBJECTIVES",
    "ResultRow",
    "RunManifest",
    "SweepSpec",
    "config_digest",
    "load_config",
    "optimize_alpha",
    "optimize_eh",
    "read_results",
    "run_sweep",
    "spec_from_config",
    "write_csv",
    "write_results",
]

log = logging.getLogger(__name__)

CSV_HEADER = (
    "scenario", "protocol", "beta", "rho", "eta", "alpha2", "snr_db",
    "user", "stage", "ber_analytic", "ber_mc", "n_bits", "n_errors", "ci95",
)
STAGES = ("relay", "phase2", "e2e")
AXES = ("snr", "alpha2", "eh_grid")
MODES = ("analytic", "simulate", "both")

# sweeps and optimisers revisit the same cells; every key is a frozen dataclass
_e2e = lru_cache(maxsize=16384)(e2e_aber)

OBJECTIVES = {
    "max_user": lambda e1, e2: max(e1, e2),
    "u1": lambda e1, e2: e1,
    "u2": lambda e1, e2: e2,
    "mean": lambda e1, e2: 0.5 * (e1 + e2),
}


# ---------------------------------------------------------------------------
# sweep description
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    """One experiment: the Cartesian product scenarios x protocols x SNR x alpha2.

    For ``axis="eh_grid"`` the protocol list is replaced by hybrid protocols over
    ``beta_grid`` x ``rho_grid``. Axes other than the swept one must be
    single-valued.
    """

    axis: str
    scenarios: tuple[Scenario, ...]
    protocols: tuple[EhProtocol, ...] = ()
    snr_db: tuple[float, ...] = (20.0,)
    alpha2: tuple[float, ...] = (0.1,)
    beta_grid: tuple[float, ...] = ()
    rho_grid: tuple[float, ...] = ()
    eta: float = DEFAULT_ETA
    mode: str = "analytic"
    seed: int = 0
    stop: StoppingRule = field(default_factory=StoppingRule)

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.scenarios:
            raise ValueError("no scenarios given")
        if not self.snr_db or not self.alpha2:
            raise ValueError("SNR and alpha2 grids must be non-empty")
        if any(not math.isfinite(s) for s in self.snr_db):
            raise ValueError("SNR values must be finite")
        if any(not 0.0 < a <= 0.5 for a in self.alpha2):
            raise ValueError("alpha2 must lie in (0, 0.5]")
        if self.axis == "eh_grid":
            if not self.beta_grid or not self.rho_grid:
                raise ValueError("eh_grid sweeps need non-empty beta and rho grids")
            if any(not 0.0 <= b <= BETA_MAX for b in self.beta_grid):
                raise ValueError(f"beta must lie in [0, {BETA_MAX}]")
            if any(not 0.0 <= r <= 1.0 for r in self.rho_grid):
                raise ValueError("rho must lie in [0, 1]")
        elif not self.protocols:
            raise ValueError("no protocols given")
        if self.axis != "snr" and len(self.snr_db) != 1:
            raise ValueError(f"{self.axis} sweeps take a single SNR value")
        if self.axis != "alpha2" and len(self.alpha2) != 1:
            raise ValueError(f"{self.axis} sweeps take a single alpha2 value")

    def protocol_list(self) -> list[EhProtocol]:
        if self.axis == "eh_grid":
            return [EhProtocol.hybrid(b, r, self.eta) for b in self.beta_grid for r in self.rho_grid]
        return list(self.protocols)

    def points(self):
        """Grid points in output order."""
        return list(itertools.product(self.scenarios, self.protocol_list(), self.snr_db, self.alpha2))


@dataclass(frozen=True)
class ResultRow:
    scenario: str
    protocol: str
    beta: float | None
    rho: float | None
    eta: float | None
    alpha2: float
    snr_db: float
    user: int
    stage: str
    ber_analytic: float | None = None
    ber_mc: float | None = None
    n_bits: int | None = None
    n_errors: int | None = None
    ci95: float | None = None
    # diagnostics kept out of the CSV
    flags: tuple[str, ...] = field(default=(), compare=False)


@dataclass
class RunManifest:
    config_digest: str
    master_seed: int
    version: str = __version__
    wall_clock_s: float = 0.0
    point_flags: dict[str, list[str]] = field(default_factory=dict)
    extra: dict[str, Any] = field(default_factory=dict)


def config_digest(config: dict) -> str:
    """SHA-256 of the canonical JSON form; insensitive to key order."""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------

def _point_key(scenario, protocol, snr, alpha2) -> str:
    parts = [scenario.name, protocol.label]
    if protocol.beta is not None:
        parts.append(f"beta={protocol.beta!r}")
    if protocol.rho is not None:
        parts.append(f"rho={protocol.rho!r}")
    parts += [f"snr={snr!r}", f"alpha2={alpha2!r}"]
    return "/".join(parts)


def run_sweep(spec: SweepSpec, workers: int = 1, manifest: RunManifest | None = None) -> list[ResultRow]:
    """Evaluate every grid point; six rows (2 users x 3 stages) per point.

    A failure at one point is logged and recorded in that point's rows and in
    ``manifest.point_flags``; the sweep carries on.
    """
    rows: list[ResultRow] = []
    want_analytic = spec.mode in ("analytic", "both")
    want_mc = spec.mode in ("simulate", "both")
    pool = ProcessPoolExecutor(max_workers=workers) if want_mc and workers > 1 else None
    try:
        for scenario, protocol, snr, alpha2 in spec.points():
            key = _point_key(scenario, protocol, snr, alpha2)
            flags: list[str] = []
            pa = PowerAllocation.from_alpha2(alpha2)
            analytic = counts = None
            if want_analytic:
                try:
                    analytic = _e2e(scenario, protocol, pa, snr)
                    if analytic.provenance != "closed_form":
                        flags.append(f"analytic:{analytic.provenance}")
                except Exception as exc:  # noqa: BLE001 - recorded, sweep continues
                    log.warning("analytic evaluation failed at %s: %s", key, exc)
                    flags.append(f"analytic_error:{type(exc).__name__}")
            if want_mc:
                try:
                    cfg = SimConfig(scenario, protocol, pa, snr, spec.seed, spec.stop)
                    counts = run_point(cfg, workers=workers, executor=pool)
                    if counts.budget_exhausted:
                        flags.append("budget_exhausted")
                except Exception as exc:  # noqa: BLE001
                    log.warning("simulation failed at %s: %s", key, exc)
                    flags.append(f"simulate_error:{type(exc).__name__}")
            if flags and manifest is not None:
                manifest.point_flags[key] = flags
            for user in (1, 2):
                for stage in STAGES:
                    row = dict(
                        scenario=scenario.name, protocol=protocol.label, beta=protocol.beta,
                        rho=protocol.rho, eta=protocol.eta if protocol.harvests else None,
                        alpha2=alpha2, snr_db=snr, user=user, stage=stage, flags=tuple(flags),
                    )
                    if analytic is not None:
                        row["ber_analytic"] = analytic.get(stage, user)
                    if counts is not None:
                        est = counts.estimate(stage, user)
                        row.update(ber_mc=est.ber, n_bits=est.n_bits, n_errors=est.n_errors,
                                   ci95=est.ci95_halfwidth)
                    rows.append(ResultRow(**row))
    finally:
        if pool is not None:
            pool.shutdown()
    return rows


def _objective(name: str):
    try:
        return OBJECTIVES[name]
    except KeyError:
        raise ValueError(f"objective must be one of {sorted(OBJECTIVES)}, got {name!r}") from None


def optimize_eh(scenario: Scenario, pa: PowerAllocation, total_snr_db: float, beta_grid: Iterable[float],
                rho_grid: Iterable[float], objective: str = "max_user", eta: float = DEFAULT_ETA,
                evaluated: list | None = None):
    """Exhaustive grid search of the hybrid (beta, rho) pair minimising the
    objective over analytic end-to-end error rates.

    Ties go to the smaller beta, then the smaller rho. Cells whose evaluation
    fails are skipped with a log entry. Returns (beta*, rho*, value). When
    ``evaluated`` is a list, every (beta, rho, e2e_u1, e2e_u2, value) visited is
    appended to it.
    """
    fn = _objective(objective)
    best = None
    for beta in sorted(beta_grid):
        for rho in sorted(rho_grid):
            try:
                b = _e2e(scenario, EhProtocol.hybrid(beta, rho, eta), pa, total_snr_db)
            except Exception as exc:  # noqa: BLE001
                log.warning("skipping beta=%r rho=%r: %s", beta, rho, exc)
                continue
            value = fn(b.e2e_u1, b.e2e_u2)
            if evaluated is not None:
                evaluated.append((beta, rho, b.e2e_u1, b.e2e_u2, value))
            if best is None or value < best[2]:
                best = (beta, rho, value)
    if best is None:
        raise ValueError("no grid cell could be evaluated")
    return best


def optimize_alpha(scenario: Scenario, protocol: EhProtocol, total_snr_db: float, alpha2_grid: Iterable[float],
                   objective: str = "max_user", evaluated: list | None = None):
    """Grid argmin of the objective over alpha2; ties go to the smaller alpha2.
    Returns (alpha2*, value)."""
    fn = _objective(objective)
    best = None
    for a2 in sorted(alpha2_grid):
        if not 0.0 < a2 <= 0.5:
            raise ValueError(f"alpha2 must lie in (0, 0.5], got {a2!r}")
        try:
            b = _e2e(scenario, protocol, PowerAllocation.from_alpha2(a2), total_snr_db)
        except Exception as exc:  # noqa: BLE001
            log.warning("skipping alpha2=%r: %s", a2, exc)
            continue
        value = fn(b.e2e_u1, b.e2e_u2)
        if evaluated is not None:
            evaluated.append((a2, b.e2e_u1, b.e2e_u2, value))
        if best is None or value < best[1]:
            best = (a2, value)
    if best is None:
        raise ValueError("no grid cell could be evaluated")
    return best


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _manifest_path(path: Path) -> Path:
    return path.with_name(path.name + ".manifest.json")


def write_csv(rows: Iterable[ResultRow], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([_fmt(getattr(row, name)) for name in CSV_HEADER])


def write_results(rows: Iterable[ResultRow], manifest: RunManifest | None, path) -> Path:
    """Write rows as CSV and the manifest as ``<path>.manifest.json`` next to it."""
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            write_csv(rows, fh)
        if manifest is not None:
            _manifest_path(path).write_text(json.dumps(asdict(manifest), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    return path


_INT_COLUMNS = {"user", "n_bits", "n_errors"}
_STR_COLUMNS = {"scenario", "protocol", "stage"}


def read_results(path) -> list[ResultRow]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected CSV header {reader.fieldnames}")
        rows = []
        for rec in reader:
            kw = {}
            for name, text in rec.items():
                if name in _STR_COLUMNS:
                    kw[name] = text
                elif text == "":
                    kw[name] = None
                elif name in _INT_COLUMNS:
                    kw[name] = int(text)
                else:
                    kw[name] = float(text)
            rows.append(ResultRow(**kw))
    return rows


# ---------------------------------------------------------------------------
# JSON config
# ---------------------------------------------------------------------------

def load_config(source) -> dict:
    """Read an experiment config from a JSON file (dicts pass through)."""
    if isinstance(source, dict):
        return source
    path = Path(source)
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc


def _grid(value) -> tuple[float, ...]:
    if isinstance(value, (int, float)):
        return (float(value),)
    if isinstance(value, dict):
        start, stop, step = float(value["start"]), float(value["stop"]), float(value["step"])
        if step <= 0:
            raise ValueError("grid step must be positive")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 12) for i in range(max(n, 0)))
    return tuple(float(v) for v in value)


def _scenario(entry) -> Scenario:
    if isinstance(entry, str):
        try:
            return SCENARIOS[entry]
        except KeyError:
            raise ValueError(f"unknown scenario {entry!r}; known: {sorted(SCENARIOS)}") from None
    name = entry["name"]
    if "omega" in entry:
        return Scenario.from_table(name, entry["omega"], entry["m"])
    links = [FadingParams(entry[k]["m"], entry[k]["omega"]) for k in ("relay", "user1", "user2")]
    return Scenario(name, *links)


def _protocol(entry, eta: float) -> EhProtocol:
    if isinstance(entry, str):
        entry = {"kind": entry}
    kind = EhKind(entry["kind"])
    return EhProtocol(kind, beta=entry.get("beta"), rho=entry.get("rho"), eta=entry.get("eta", eta))


def spec_from_config(config: dict, axis: str | None = None, mode: str | None = None,
                     seed: int | None = None) -> SweepSpec:
    """Build a SweepSpec from a config document; arguments override the document."""
    eta = float(config.get("eta", DEFAULT_ETA))
    stop = StoppingRule(**config.get("stop", {}))
    return SweepSpec(
        axis=axis or config.get("axis", "snr"),
        scenarios=tuple(_scenario(s) for s in config.get("scenarios", ["I"])),
        protocols=tuple(_protocol(p, eta) for p in config.get("protocols", [])),
        snr_db=_grid(config.get("snr_db", 20.0)),
        alpha2=_grid(config.get("alpha2", 0.1)),
        beta_grid=_grid(config.get("beta", [])),
        rho_grid=_grid(config.get("rho", [])),
        eta=eta,
        mode=mode or config.get("mode", "analytic"),
        seed=int(config.get("seed", 0) if seed is None else seed),
        stop=stop,
    )


def eh_grid_defaults() -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Default (beta, rho) grids: step 0.05 over [0, 0.9] x [0, 0.95]."""
    return _grid({"start": 0.0, "stop": 0.9, "step": 0.05}), _grid({"start": 0.0, "stop": 0.95, "step": 0.05})
