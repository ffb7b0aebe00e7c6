"""Experiment driver: parse a YAML experiment, run analytic and Monte Carlo sweeps, emit CSV.

An experiment is a shared SNR grid and trial budget plus a list of cases.  Each
case fixes scheme, direction, user count, targets and the metrics to produce;
every (case, metric, user) becomes one :class:`MetricSeries` whose rows hold the
closed-form value next to the simulated mean and its standard error.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import jsonschema
import numpy as np
import yaml

from .downlink import (
    DownlinkNomaConfig,
    DownlinkOmaConfig,
    compare_oma_noma_dl,
    dl_noma_er_asymptotic,
    dl_noma_er_bounds,
    dl_noma_op,
    dl_oma_er,
    dl_oma_er_asymptotic,
    dl_oma_op,
)
from .model import NomaPowerAllocation, RateTargets, SnrGrid, SystemGeometry
from .montecarlo import SimConfig, simulate
from .quadrature import ChebyshevRule
from .uplink import (
    UplinkNomaTwoUserConfig,
    ul_noma2_er_asymptotic,
    ul_noma2_er_user1,
    ul_noma2_er_user2,
    ul_noma2_op_asymptotic,
    ul_noma2_op_user1,
    ul_noma2_op_user2,
    ul_oma_er,
    ul_oma_er_asymptotic,
    ul_oma_op,
)

CSV_HEADER = "snr_db,analytic,mc_mean,mc_se"
OP_TOL_SE = 3.0
OP_TOL_ABS = 1e-3
ER_TOL_REL = 0.01
BOUND_TOL_SE = 3.0

_PRESET_PACKAGE = "pinching_noma.presets"


class SpecError(ValueError):
    """Invalid experiment file; ``path`` locates the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.message = message


# -- spec types ------------------------------------------------------------------

@dataclass(frozen=True)
class CaseSpec:
    label: str
    scheme: str
    direction: str
    M: int
    targets: RateTargets
    metrics: tuple[str, ...]
    geometry: SystemGeometry = SystemGeometry()
    alloc: Optional[NomaPowerAllocation] = None
    analytic: bool = True

    @property
    def uplink_noma_pair(self) -> bool:
        return self.scheme == "noma" and self.direction == "up" and self.M == 2


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    snr_grid: SnrGrid
    cases: tuple[CaseSpec, ...]
    trials: int = 10**6
    seed: int = 1
    quadrature_n: int = 100
    compare: Optional[tuple[str, str]] = None
    description: str = ""
    notices: tuple[str, ...] = ()

    def with_overrides(self, trials=None, seed=None, quadrature_n=None) -> "ExperimentSpec":
        changes = {}
        if trials is not None:
            changes["trials"] = int(trials)
        if seed is not None:
            changes["seed"] = int(seed)
        if quadrature_n is not None:
            changes["quadrature_n"] = int(quadrature_n)
        return replace(self, **changes)

    def case(self, label: str) -> CaseSpec:
        for c in self.cases:
            if c.label == label:
                return c
        raise KeyError(label)


# -- parsing ---------------------------------------------------------------------

def schema() -> dict:
    return json.loads(resources.files("pinching_noma").joinpath("schema.json").read_text())


def _fmt_path(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out


def _geometry(base: SystemGeometry, data: Optional[dict]) -> SystemGeometry:
    return base.replace(**data) if data else base


def parse_spec(data) -> ExperimentSpec:
    """Validate a decoded experiment document and build an :class:`ExperimentSpec`."""
    if not isinstance(data, dict):
        raise SpecError("", "experiment must be a mapping")
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        e = errors[0]
        raise SpecError(_fmt_path(e.absolute_path) or "<root>", e.message)

    grid_data = data["snr_db"]
    try:
        if isinstance(grid_data, list):
            grid = SnrGrid(tuple(grid_data))
        else:
            grid = SnrGrid.linspace(grid_data["start"], grid_data["stop"], grid_data["num"])
    except ValueError as exc:
        raise SpecError("snr_db", str(exc)) from None

    base = _geometry(SystemGeometry(), data.get("geometry"))
    bandwidth = float(data.get("bandwidth_hz", 1e6))
    notices = []
    cases = []
    for i, raw in enumerate(data["cases"]):
        case = _parse_case(raw, f"cases[{i}]", base, bandwidth, notices)
        if any(c.label == case.label for c in cases):
            raise SpecError(f"cases[{i}].label", f"duplicate label {case.label!r}")
        cases.append(case)

    compare = None
    if "compare" in data:
        compare = (data["compare"]["oma"], data["compare"]["noma"])
        labels = {c.label: c for c in cases}
        for role, label in zip(("oma", "noma"), compare):
            if label not in labels:
                raise SpecError(f"compare.{role}", f"no case labelled {label!r}")
            c = labels[label]
            if c.scheme != role or c.direction != "down":
                raise SpecError(f"compare.{role}", f"case {label!r} is not downlink {role.upper()}")
        if labels[compare[0]].M != labels[compare[1]].M:
            raise SpecError("compare", "OMA and NOMA cases must have the same user count")

    return ExperimentSpec(
        name=data["name"],
        snr_grid=grid,
        cases=tuple(cases),
        trials=int(data.get("trials", 10**6)),
        seed=int(data.get("seed", 1)),
        quadrature_n=int(data.get("quadrature_n", 100)),
        compare=compare,
        description=data.get("description", ""),
        notices=tuple(notices),
    )


def _parse_case(raw: dict, path: str, base: SystemGeometry, bandwidth: float, notices: list) -> CaseSpec:
    M = raw["users"]
    scheme, direction = raw["scheme"], raw["direction"]
    if ("target_mbps" in raw) == ("targets_mbps" in raw):
        raise SpecError(path, "give exactly one of target_mbps or targets_mbps")
    mbps = raw["targets_mbps"] if "targets_mbps" in raw else [raw["target_mbps"]] * M
    if len(mbps) != M:
        raise SpecError(f"{path}.targets_mbps", f"{len(mbps)} targets for {M} users")
    targets = RateTargets.from_mbps(mbps, bandwidth)

    alloc = None
    if "alloc" in raw:
        if scheme != "noma" or direction != "down":
            raise SpecError(f"{path}.alloc", "power allocation applies to downlink NOMA only")
        if len(raw["alloc"]) != M:
            raise SpecError(f"{path}.alloc", f"{len(raw['alloc'])} coefficients for {M} users")
        try:
            alloc = NomaPowerAllocation(tuple(raw["alloc"]))
        except ValueError as exc:
            raise SpecError(f"{path}.alloc", str(exc)) from None
    elif scheme == "noma" and direction == "down":
        raise SpecError(f"{path}.alloc", "downlink NOMA needs a power allocation")

    try:
        geometry = _geometry(base, raw.get("geometry"))
    except ValueError as exc:
        raise SpecError(f"{path}.geometry", str(exc)) from None

    metrics = tuple(raw["metrics"])
    analytic = raw.get("analytic", True)
    label = raw["label"]
    if scheme == "noma" and direction == "up" and M > 2:
        if raw.get("analytic") is True:
            raise SpecError(
                f"{path}.analytic",
                f"no closed form for uplink NOMA with {M} users; drop 'analytic' to simulate only",
            )
        analytic = False
        notices.append(f"{label}: uplink NOMA with {M} users is monte-carlo-only")
    if "er_bounds" in metrics and not (scheme == "noma" and direction == "down"):
        raise SpecError(f"{path}.metrics", "er_bounds is defined for downlink NOMA only")
    if "op_asymptote" in metrics and not (scheme == "noma" and direction == "up" and M == 2):
        raise SpecError(f"{path}.metrics", "op_asymptote is defined for two-user uplink NOMA only")
    if not analytic:
        bad = [m for m in metrics if m not in ("op", "er")]
        if bad:
            raise SpecError(f"{path}.metrics", f"{bad} need a closed form; only op/er can be simulated")
    return CaseSpec(label, scheme, direction, M, targets, metrics, geometry, alloc, analytic)


def load_spec(path) -> ExperimentSpec:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise SpecError("", f"not valid YAML: {exc}") from None
    return parse_spec(data)


def preset_names() -> list[str]:
    folder = resources.files(_PRESET_PACKAGE)
    return sorted(p.name[: -len(".yaml")] for p in folder.iterdir() if p.name.endswith(".yaml"))


def preset_text(name: str) -> str:
    if name not in preset_names():
        raise SpecError("", f"unknown preset {name!r}; choose from {', '.join(preset_names())}")
    return resources.files(_PRESET_PACKAGE).joinpath(f"{name}.yaml").read_text()


def load_preset(name: str) -> ExperimentSpec:
    return parse_spec(yaml.safe_load(preset_text(name)))


# -- series and results ------------------------------------------------------------

@dataclass
class MetricSeries:
    case: str
    scheme: str
    direction: str
    metric: str
    user: int
    snr_db: np.ndarray
    analytic: np.ndarray
    mc_mean: np.ndarray
    mc_se: np.ndarray

    @property
    def key(self) -> tuple[str, str, str, str, int]:
        return (self.case, self.scheme, self.direction, self.metric, self.user)

    @property
    def stem(self) -> str:
        return f"{self.case}_{self.metric}_u{self.user}"

    @property
    def rho(self) -> np.ndarray:
        return 10.0 ** (self.snr_db / 10.0)


@dataclass(frozen=True)
class SeriesAgreement:
    series: str
    metric: str
    checked: bool
    ok: bool
    max_abs: float
    max_se_units: float
    worst_snr_db: Optional[float]


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    series: list[MetricSeries]
    agreement: list[SeriesAgreement]
    notices: list[str] = field(default_factory=list)
    comparison: Optional[dict] = None

    @property
    def ok(self) -> bool:
        return all(a.ok for a in self.agreement)

    def get(self, case: str, metric: str, user: int) -> MetricSeries:
        for s in self.series:
            if (s.case, s.metric, s.user) == (case, metric, user):
                return s
        raise KeyError((case, metric, user))


# -- running -------------------------------------------------------------------------

def _analytic_op(case: CaseSpec, m: int, rho: float, rule: ChebyshevRule) -> float:
    g, M = case.geometry, case.M
    target = case.targets[m - 1]
    if case.scheme == "oma":
        if case.direction == "down":
            return dl_oma_op(DownlinkOmaConfig(g, M, target, rho))
        return ul_oma_op(g, M, target, rho)
    if case.direction == "down":
        return dl_noma_op(DownlinkNomaConfig(g, case.alloc, case.targets, rho), m)
    if case.uplink_noma_pair:
        cfg = UplinkNomaTwoUserConfig(g, tuple(case.targets.targets), rho, rule)
        return ul_noma2_op_user1(cfg) if m == 1 else ul_noma2_op_user2(cfg)
    return math.nan


def _analytic_er(case: CaseSpec, m: int, rho: float, rule: ChebyshevRule) -> float:
    g, M = case.geometry, case.M
    if case.scheme == "oma":
        if case.direction == "down":
            return dl_oma_er(DownlinkOmaConfig(g, M, case.targets[m - 1], rho))
        return ul_oma_er(g, M, rho)
    if case.uplink_noma_pair:
        cfg = UplinkNomaTwoUserConfig(g, tuple(case.targets.targets), rho, rule)
        return ul_noma2_er_user1(cfg) if m == 1 else ul_noma2_er_user2(cfg)
    # downlink NOMA has bounds only
    return math.nan


def _analytic_asymptote(case: CaseSpec, m: int, rho: float, rule: ChebyshevRule) -> dict:
    g, M = case.geometry, case.M
    if case.scheme == "oma":
        if case.direction == "down":
            return {"asymptote": dl_oma_er_asymptotic(DownlinkOmaConfig(g, M, case.targets[m - 1], rho))}
        return {"asymptote": ul_oma_er_asymptotic(g, M, rho)}
    if case.direction == "down":
        b = dl_noma_er_asymptotic(DownlinkNomaConfig(g, case.alloc, case.targets, rho), m)
        return {"asymptote_lower": b.lower, "asymptote_upper": b.upper}
    cfg = UplinkNomaTwoUserConfig(g, tuple(case.targets.targets), rho, rule)
    return {"asymptote": ul_noma2_er_asymptotic(cfg)[m - 1]}


def run_case(case: CaseSpec, spec: ExperimentSpec, workers: int = 1) -> list[MetricSeries]:
    snr_db = spec.snr_grid.db
    rhos = spec.snr_grid.linear
    rule = ChebyshevRule(spec.quadrature_n)
    want_er = any(m in case.metrics for m in ("er", "er_bounds", "asymptote"))
    want_op = any(m in case.metrics for m in ("op", "op_asymptote"))
    sim = None
    if len(rhos) and (want_er or want_op):
        cfg = SimConfig(
            case.geometry, case.M, case.scheme, case.direction, case.targets,
            float(rhos[0]), case.alloc, spec.trials, spec.seed,
        )
        sim = simulate(cfg, rhos, workers=workers, want_er=want_er)

    def mc(kind: str, m: int):
        if sim is None:
            return np.zeros(0), np.zeros(0)
        est = sim.op(m) if kind == "op" else sim.er(m)
        return np.array([e.mean for e in est]), np.array([e.std_error for e in est])

    out = []

    def add(metric: str, m: int, analytic, kind: str):
        mean, se = mc(kind, m)
        out.append(MetricSeries(
            case.label, case.scheme, case.direction, metric, m,
            snr_db.copy(), np.asarray(analytic, dtype=float), mean, se,
        ))

    nan = [math.nan] * len(rhos)
    for m in range(1, case.M + 1):
        for metric in case.metrics:
            if metric == "op":
                values = [_analytic_op(case, m, r, rule) for r in rhos] if case.analytic else nan
                add("op", m, values, "op")
            elif metric == "er":
                values = [_analytic_er(case, m, r, rule) for r in rhos] if case.analytic else nan
                add("er", m, values, "er")
            elif metric == "er_bounds":
                bounds = [
                    dl_noma_er_bounds(DownlinkNomaConfig(case.geometry, case.alloc, case.targets, r), m)
                    for r in rhos
                ]
                add("er_lower", m, [b.lower for b in bounds], "er")
                add("er_upper", m, [b.upper for b in bounds], "er")
            elif metric == "asymptote":
                rows = [_analytic_asymptote(case, m, r, rule) for r in rhos]
                for name in (rows[0] if rows else {"asymptote": 0}):
                    add(name, m, [row[name] for row in rows], "er")
            elif metric == "op_asymptote":
                cfg = lambda r: UplinkNomaTwoUserConfig(  # noqa: E731
                    case.geometry, tuple(case.targets.targets), r, rule
                )
                add("op_asymptote", m, [ul_noma2_op_asymptotic(cfg(r)).value for r in rhos], "op")
    return out


def agreement(series: MetricSeries) -> SeriesAgreement:
    """Compare the analytic column with the simulation under the metric's tolerance."""
    a, mc, se = series.analytic, series.mc_mean, series.mc_se
    name = series.stem
    finite = np.isfinite(a) if len(a) else np.zeros(0, dtype=bool)
    if not len(mc) or not finite.any() or series.metric.startswith("asymptote") or series.metric == "op_asymptote":
        return SeriesAgreement(name, series.metric, False, True, math.nan, math.nan, None)
    a, mc, se, db = a[finite], mc[finite], se[finite], series.snr_db[finite]
    diff = np.abs(a - mc)
    with np.errstate(divide="ignore", invalid="ignore"):
        se_units = np.where(se > 0, diff / se, np.where(diff > 0, np.inf, 0.0))
    if series.metric == "op":
        passed = diff <= OP_TOL_SE * se + OP_TOL_ABS
    elif series.metric == "er":
        passed = diff <= ER_TOL_REL * np.abs(a)
    elif series.metric == "er_lower":
        passed = mc >= a - BOUND_TOL_SE * se
    elif series.metric == "er_upper":
        passed = mc <= a + BOUND_TOL_SE * se
    else:
        passed = np.ones(len(a), dtype=bool)
    worst = int(np.argmax(se_units)) if len(se_units) else None
    return SeriesAgreement(
        name,
        series.metric,
        True,
        bool(passed.all()),
        float(diff.max()),
        float(se_units.max()),
        float(db[worst]) if worst is not None else None,
    )


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> ExperimentResult:
    series = []
    for case in spec.cases:
        series.extend(run_case(case, spec, workers))
    result = ExperimentResult(spec, series, [agreement(s) for s in series], list(spec.notices))
    if spec.compare:
        oma, noma = spec.case(spec.compare[0]), spec.case(spec.compare[1])
        cmp = compare_oma_noma_dl(
            DownlinkNomaConfig(noma.geometry, noma.alloc, noma.targets, 1.0), oma.targets[0]
        )
        result.comparison = {
            "case": cmp.case,
            "rho_oma_db": 10.0 * math.log10(cmp.rho_oma),
            "rho_noma_db": [10.0 * math.log10(r) if math.isfinite(r) else math.inf for r in cmp.rho_noma],
            "noma_better": list(cmp.noma_better),
        }
    return result


# -- output ---------------------------------------------------------------------------

def _num(x: float) -> str:
    return "nan" if math.isnan(x) else f"{x:.17e}"


def csv_text(series: MetricSeries) -> str:
    lines = [CSV_HEADER]
    n = len(series.snr_db)
    mc = series.mc_mean if len(series.mc_mean) == n else np.full(n, math.nan)
    se = series.mc_se if len(series.mc_se) == n else np.full(n, math.nan)
    for row in zip(series.snr_db, series.analytic, mc, se):
        lines.append(",".join(_num(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def emit_csv(series: Sequence[MetricSeries], out_dir, prefix: str = "") -> list[Path]:
    if not series:
        raise ValueError("no series to write")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for s in series:
        path = out / f"{prefix}{s.stem}.csv"
        path.write_bytes(csv_text(s).encode("ascii"))
        paths.append(path)
    return paths


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    return x


def report_dict(result: ExperimentResult) -> dict:
    return _json_safe({
        "experiment": result.spec.name,
        "trials": result.spec.trials,
        "seed": result.spec.seed,
        "quadrature_n": result.spec.quadrature_n,
        "ok": result.ok,
        "notices": result.notices,
        "comparison": result.comparison,
        "series": [a.__dict__ for a in result.agreement],
    })


def report_text(result: ExperimentResult) -> str:
    lines = [f"experiment {result.spec.name}: trials={result.spec.trials} seed={result.spec.seed}"]
    for n in result.notices:
        lines.append(f"notice: {n}")
    if result.comparison:
        c = result.comparison
        noma = ", ".join(f"{x:.2f}" for x in c["rho_noma_db"])
        lines.append(f"comparison: {c['case']} (OMA zero-OP {c['rho_oma_db']:.2f} dB; NOMA {noma} dB)")
    for a in result.agreement:
        if not a.checked:
            lines.append(f"  {a.series:40s} (not checked)")
            continue
        status = "ok  " if a.ok else "FAIL"
        lines.append(
            f"  {status} {a.series:40s} max|diff|={a.max_abs:.3e} "
            f"max={a.max_se_units:.2f} SE at {a.worst_snr_db:g} dB"
        )
    lines.append("all series within tolerance" if result.ok else "some series out of tolerance")
    return "\n".join(lines)


# -- slopes ------------------------------------------------------------------------------

class InsufficientPointsError(ValueError):
    pass


def fit_slope(snr_db, values, log_log: bool = False, window_db: float = 20.0) -> float:
    """Least-squares slope over the top ``window_db`` of the grid.

    Rates are regressed on ``log2(rho)``; with ``log_log`` (outage series) the
    regression is ``log10(values)`` on ``log10(rho)`` and zeros are dropped.
    """
    snr_db = np.asarray(snr_db, dtype=float)
    values = np.asarray(values, dtype=float)
    if not len(snr_db):
        raise InsufficientPointsError("empty series")
    keep = (snr_db >= snr_db.max() - window_db - 1e-9) & np.isfinite(values)
    if log_log:
        keep &= values > 0
        x, y = snr_db[keep] / 10.0, np.log10(values[keep])
    else:
        x, y = snr_db[keep] / 10.0 * math.log2(10.0), values[keep]
    if len(x) < 4:
        raise InsufficientPointsError(f"{len(x)} usable points in the top {window_db} dB; need 4")
    return float(np.polyfit(x, y, 1)[0])


def slope_report(series: Sequence[MetricSeries], window_db: float = 20.0, column: str = "analytic") -> dict:
    """Slope per series; the simulated mean stands in where no closed form exists."""
    out = {}
    for s in series:
        values = getattr(s, column)
        if column == "analytic" and not np.isfinite(values).any():
            values = s.mc_mean
        out[s.stem] = fit_slope(s.snr_db, values, s.metric.startswith("op"), window_db)
    return out
