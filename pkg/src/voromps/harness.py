"""Empirical studies: generate a cloud, pick a focal site, measure every
operator error against its budget, and write the artifacts.

A study walks a list of grid spacings. For each spacing it builds the cloud
over the padded rectangle, derives the interaction radius from the measured
cell radius (h = c_star * r_sigma), evaluates the full operator chain for the
requested fields, and emits one CSV row per (field, operator) pair. Soft
assumption failures (padding, covering) are recorded in the side report or
abort the run, depending on the policy; structural failures always abort.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bounds import compute_constants, operator_budget
from .errors import AssumptionViolationError, GeometryError
from .functions import FIELD_NAMES, field_catalog
from .geometry import (
    DomainSpec,
    VoronoiDecomposition,
    build_voronoi,
    validate_standing_assumptions,
)
from .operators import OPERATOR_KINDS, evaluate_chain, make_context
from .weights import indicator_weight, linear_taper_weight

CSV_HEADER = ("r_sigma", "h", "C_star", "lambda", "function", "operator", "error", "rhs", "pass")

GENERATORS = ("lattice", "jittered", "poisson", "moat")
WEIGHT_KINDS = ("indicator", "taper")
ASSUMPTION_POLICIES = ("skip", "record")


# ---------------------------------------------------------------------------
# site generators; every generator fills the padded rectangle so boundary
# cells stay the same size as interior ones and the cell radius reflects
# the spacing, not the padding


def lattice_sites(domain: DomainSpec, spacing: float) -> np.ndarray:
    if spacing <= 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    lo, hi = domain.omega_h_min, domain.omega_h_max
    axes = []
    for a in range(2):
        width = hi[a] - lo[a]
        n = int(np.floor(width / spacing)) + 1
        start = lo[a] + 0.5 * (width - (n - 1) * spacing)
        axes.append(start + spacing * np.arange(n))
    gx, gy = np.meshgrid(axes[0], axes[1], indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def jittered_lattice_sites(
    domain: DomainSpec, spacing: float, jitter: float, seed: int = 0
) -> np.ndarray:
    if not 0.0 <= jitter <= 0.45:
        raise ValueError(f"jitter fraction must lie in [0, 0.45], got {jitter}")
    base = lattice_sites(domain, spacing)
    if jitter == 0.0:
        return base
    rng = np.random.Generator(np.random.Philox(key=seed))
    moved = base + rng.uniform(-jitter * spacing, jitter * spacing, size=base.shape)
    margin = 1e-6 * spacing
    lo, hi = domain.omega_h_min, domain.omega_h_max
    return np.clip(moved, lo + margin, hi - margin)


def poisson_disk_sites(
    domain: DomainSpec, min_dist: float, seed: int = 0, max_failures: int = 2000
) -> np.ndarray:
    """Dart throwing: accept uniform candidates no closer than min_dist to
    any accepted site, until max_failures rejections in a row."""
    if min_dist <= 0:
        raise ValueError(f"separation must be positive, got {min_dist}")
    rng = np.random.Generator(np.random.Philox(key=seed))
    lo, hi = domain.omega_h_min, domain.omega_h_max
    accepted: list[np.ndarray] = []
    pts = np.empty((0, 2))
    failures = 0
    while failures < max_failures:
        cand = rng.uniform(lo, hi)
        if len(accepted) and np.min(np.hypot(*(pts - cand).T)) < min_dist:
            failures += 1
            continue
        accepted.append(cand)
        pts = np.asarray(accepted)
        failures = 0
    return pts


def moat_lattice_sites(
    domain: DomainSpec,
    spacing: float,
    rho_inner: float,
    rho_outer: float,
) -> np.ndarray:
    """Lattice with a vacated circular band around the domain center; with
    the interaction radius inside the band every covering sample is owned by
    a strict neighbor, so the full set of standing assumptions is satisfiable."""
    if not 0 < rho_inner < rho_outer:
        raise ValueError("need 0 < rho_inner < rho_outer")
    sites = lattice_sites(domain, spacing)
    rho = np.hypot(sites[:, 0] - domain.center[0], sites[:, 1] - domain.center[1])
    keep = (rho < rho_inner) | (rho > rho_outer)
    return sites[keep]


# ---------------------------------------------------------------------------
# cloud serialization


def save_sites(path, domain: DomainSpec, sites) -> None:
    payload = {
        "omega": {
            "min": list(map(float, domain.omega_min)),
            "max": list(map(float, domain.omega_max)),
        },
        "H": float(domain.padding),
        "sites": [[float(x), float(y)] for x, y in np.asarray(sites)],
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_sites(path) -> tuple[DomainSpec, np.ndarray]:
    try:
        payload = json.loads(Path(path).read_text())
        domain = DomainSpec(payload["omega"]["min"], payload["omega"]["max"], payload["H"])
        sites = np.asarray(payload["sites"], dtype=float)
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ValueError(f"malformed sites file {path}: {exc}") from exc
    if sites.ndim != 2 or sites.shape[1] != 2 or not len(sites):
        raise ValueError(f"sites file {path} holds no (n, 2) coordinate list")
    return domain, sites


# ---------------------------------------------------------------------------
# study configuration


@dataclass(frozen=True)
class StudyConfig:
    generator: str = "jittered"
    spacings: tuple[float, ...] = (0.05,)
    jitter: float = 0.15
    seed: int = 0
    c_star: float = 4.0
    lam: float = 0.5
    delta_fraction: float = 0.5
    weight: str = "indicator"
    functions: tuple[str, ...] = FIELD_NAMES
    omega_min: tuple[float, float] = (0.0, 0.0)
    omega_max: tuple[float, float] = (1.0, 1.0)
    padding: float | None = None
    moat_band: tuple[float, float] | None = None
    focal_index: int | None = None
    strict_assumptions: str = "record"

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}")
        if self.weight not in WEIGHT_KINDS:
            raise ValueError(f"unknown weight kind {self.weight!r}")
        if self.strict_assumptions not in ASSUMPTION_POLICIES:
            raise ValueError(
                f"assumption policy must be one of {ASSUMPTION_POLICIES}, "
                f"got {self.strict_assumptions!r}"
            )
        if not self.spacings or any(s <= 0 for s in self.spacings):
            raise ValueError("spacings must be a non-empty list of positive numbers")
        if not (self.c_star > 0.5):
            raise ValueError(f"radius multiple must exceed 1/2, got {self.c_star}")
        if not (0 < self.lam <= 1):
            raise ValueError(f"neighborhood fraction must be in (0, 1], got {self.lam}")
        if not (0 < self.delta_fraction < 1):
            raise ValueError("exclusion fraction must sit strictly between 0 and 1")
        unknown = set(self.functions) - set(FIELD_NAMES)
        if unknown:
            raise ValueError(f"unknown field names {sorted(unknown)}")

    @classmethod
    def from_json(cls, path) -> "StudyConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ValueError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ValueError(f"config {path} must hold a JSON object")
        for key in ("spacings", "functions", "omega_min", "omega_max", "moat_band"):
            if key in raw and raw[key] is not None:
                raw[key] = tuple(raw[key])
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ValueError(f"config {path}: {exc}") from exc

    def to_json(self, path) -> None:
        out = {
            k: (list(v) if isinstance(v, tuple) else v)
            for k, v in self.__dict__.items()
        }
        Path(path).write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")


def sites_on(domain: DomainSpec, config: StudyConfig, spacing: float) -> np.ndarray:
    if config.generator == "lattice":
        return lattice_sites(domain, spacing)
    if config.generator == "jittered":
        return jittered_lattice_sites(domain, spacing, config.jitter, config.seed)
    if config.generator == "poisson":
        return poisson_disk_sites(domain, spacing, config.seed)
    band = config.moat_band
    if band is None:
        raise ValueError("the moat generator needs moat_band = [rho_inner, rho_outer]")
    return moat_lattice_sites(domain, spacing, band[0], band[1])


def generate_sites(config: StudyConfig, spacing: float) -> tuple[DomainSpec, np.ndarray]:
    padding = config.padding if config.padding is not None else 2.0 * spacing
    domain = DomainSpec(config.omega_min, config.omega_max, padding)
    return domain, sites_on(domain, config, spacing)


# ---------------------------------------------------------------------------
# focal selection


def pick_focal(
    decomp: VoronoiDecomposition,
    h: float,
    delta: float,
    lam: float,
    forced: int | None = None,
) -> tuple[int, object]:
    """First site inside the core region, nearest the center first, whose
    structural clauses all hold. A forced index skips the search but is still
    validated."""
    dom = decomp.domain
    if forced is not None:
        report = validate_standing_assumptions(decomp, forced, h, delta, lam=lam)
        if not report.structural_passed:
            raise AssumptionViolationError(
                f"forced focal site {forced} fails structural clauses: "
                f"{report.failed_names()}"
            )
        return forced, report
    inside = [i for i, s in enumerate(decomp.sites) if dom.contains_omega(s)]
    if not inside:
        raise GeometryError("no site lies in the core region")
    center = np.asarray(dom.center)
    inside.sort(key=lambda i: float(np.hypot(*(decomp.sites[i] - center))))
    last = None
    for i in inside[:32]:
        report = validate_standing_assumptions(decomp, i, h, delta, lam=lam)
        if report.structural_passed:
            return i, report
        last = report
    raise AssumptionViolationError(
        "no central site satisfies the structural clauses; nearest candidate "
        f"failed {last.failed_names() if last else '(none tried)'}"
    )


# ---------------------------------------------------------------------------
# the study itself


@dataclass(frozen=True)
class StudyRun:
    """Everything measured at one spacing."""
    spacing: float
    r_sigma: float
    h: float
    delta: float
    focal: int
    n_sites: int
    clauses: dict[str, bool]
    domain: DomainSpec = field(repr=False, default=None)
    sites: np.ndarray = field(repr=False, default=None)
    rows: list[dict] = field(repr=False, default_factory=list)
    budgets: dict = field(repr=False, default_factory=dict)


@dataclass(frozen=True)
class StudyResult:
    config: StudyConfig
    runs: list[StudyRun]

    @property
    def rows(self) -> list[dict]:
        return [row for run in self.runs for row in run.rows]

    def csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in self.rows:
            writer.writerow(
                [
                    repr(row["r_sigma"]),
                    repr(row["h"]),
                    repr(row["C_star"]),
                    repr(row["lambda"]),
                    row["function"],
                    row["operator"],
                    repr(row["error"]),
                    repr(row["rhs"]),
                    "true" if row["pass"] else "false",
                ]
            )
        return buf.getvalue()

    def report(self) -> dict:
        return {
            "config": {
                k: (list(v) if isinstance(v, tuple) else v)
                for k, v in self.config.__dict__.items()
            },
            "runs": [
                {
                    "spacing": run.spacing,
                    "r_sigma": run.r_sigma,
                    "h": run.h,
                    "delta": run.delta,
                    "focal": run.focal,
                    "n_sites": run.n_sites,
                    "clauses": run.clauses,
                    "budgets": run.budgets,
                }
                for run in self.runs
            ],
            "all_rows_pass": all(row["pass"] for row in self.rows),
        }


def make_weight(kind: str, delta: float, h: float):
    if kind == "indicator":
        return indicator_weight(delta, h)
    if kind == "taper":
        return linear_taper_weight(delta, h)
    raise ValueError(f"unknown weight kind {kind!r}")


def run_single(config: StudyConfig, spacing: float) -> StudyRun:
    domain, sites = generate_sites(config, spacing)
    decomp = build_voronoi(sites, domain)
    if config.padding is None:
        # the interaction radius follows the measured cell radius, so the
        # padding has to as well: regrow until h < H holds with room
        for _ in range(4):
            reach = (config.c_star + 1.0) * decomp.r_sigma
            if domain.padding >= 1.05 * reach:
                break
            domain = DomainSpec(config.omega_min, config.omega_max, 1.2 * reach)
            sites = sites_on(domain, config, spacing)
            decomp = build_voronoi(sites, domain)
    r_sigma = decomp.r_sigma
    h = config.c_star * r_sigma
    k_probe = (
        config.focal_index
        if config.focal_index is not None
        else decomp.nearest_site(domain.center)
    )
    delta = min(
        config.delta_fraction * r_sigma,
        0.995 * decomp.cells[k_probe].inradius_at(decomp.sites[k_probe]),
    )
    if not delta > 0:
        raise GeometryError("no positive exclusion radius fits the focal cell")

    focal, report = pick_focal(decomp, h, delta, config.lam, config.focal_index)
    if focal != k_probe:
        delta = min(
            config.delta_fraction * r_sigma,
            0.995 * decomp.cells[focal].inradius_at(decomp.sites[focal]),
        )
        report = validate_standing_assumptions(decomp, focal, h, delta, lam=config.lam)
    clauses = {c.name: c.passed for c in report.clauses}
    if not report.passed and config.strict_assumptions == "skip":
        raise AssumptionViolationError(
            f"hypothesis clauses failed at spacing {spacing}: {report.failed_names()}"
        )

    weight = make_weight(config.weight, delta, h)
    ctx = make_context(decomp, focal, weight, lam=config.lam)
    bundle = compute_constants(ctx)
    budgets = {kind: operator_budget(kind, bundle) for kind in OPERATOR_KINDS}

    fields = field_catalog(domain)
    rows = []
    for fname in config.functions:
        f = fields[fname]
        seminorms = tuple(f.seminorm(j) for j in range(4))
        chain = evaluate_chain(ctx, f)
        for kind in OPERATOR_KINDS:
            err = np.asarray(chain.reference(kind), dtype=float) - np.asarray(
                chain.value(kind, "tilde"), dtype=float
            )
            error = float(np.sqrt(np.sum(err * err)))
            rhs = budgets[kind].rhs(seminorms)
            rows.append(
                {
                    "r_sigma": r_sigma,
                    "h": h,
                    "C_star": config.c_star,
                    "lambda": config.lam,
                    "function": fname,
                    "operator": kind,
                    "error": error,
                    "rhs": rhs,
                    "pass": bool(error <= rhs * (1.0 + 1e-9)),
                }
            )
    return StudyRun(
        spacing=spacing,
        r_sigma=r_sigma,
        h=h,
        delta=delta,
        focal=focal,
        n_sites=decomp.n_sites,
        clauses=clauses,
        domain=domain,
        sites=sites,
        rows=rows,
        budgets={kind: rep.to_dict() for kind, rep in budgets.items()},
    )


def run_study(config: StudyConfig, out_dir=None, plots: bool = False) -> StudyResult:
    runs = [run_single(config, s) for s in config.spacings]
    result = StudyResult(config=config, runs=runs)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.csv").write_text(result.csv_text())
        (out / "report.json").write_text(
            json.dumps(result.report(), indent=2, sort_keys=True) + "\n"
        )
        for run in runs:
            save_sites(out / f"sites_{run.spacing:g}.json", run.domain, run.sites)
        if plots:
            write_plots(result, out / "plots")
    return result


def write_plots(result: StudyResult, plot_dir) -> list[Path]:
    """One log-log panel per operator: measured error and budget against the
    cell radius, one series per field."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(plot_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    rows = result.rows
    for kind in OPERATOR_KINDS:
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        for fname in result.config.functions:
            pts = [
                (row["r_sigma"], row["error"], row["rhs"])
                for row in rows
                if row["operator"] == kind and row["function"] == fname
            ]
            if not pts:
                continue
            pts.sort()
            r = [p[0] for p in pts]
            ax.loglog(r, [p[1] for p in pts], "o-", label=f"{fname} error")
            ax.loglog(r, [p[2] for p in pts], "--", alpha=0.6, label=f"{fname} budget")
        ax.set_xlabel("cell radius")
        ax.set_ylabel("error")
        ax.set_title(kind)
        ax.legend(fontsize=6)
        fig.tight_layout()
        path = out / f"{kind}.svg"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)
    return written


def theorem_sweep_configs() -> list[StudyConfig]:
    """The verification sweep: jitter levels crossed with radius multiples,
    spacings chosen so the padded rectangle keeps the interaction disk of a
    central focal site well inside the cloud."""
    combos = [
        (4.0, 0.05),
        (8.0, 0.05),
        (4.0, 0.04),
        (8.0, 0.04),
        (4.0, 0.03),
        (4.0, 0.06),
        (16.0, 0.11),
    ]
    configs = []
    for jitter in (0.0, 0.15, 0.3):
        for i, (c_star, spacing) in enumerate(combos):
            configs.append(
                StudyConfig(
                    generator="jittered",
                    spacings=(spacing,),
                    jitter=jitter,
                    seed=17 + i,
                    c_star=c_star,
                    lam=0.5,
                    weight="indicator" if i % 2 == 0 else "taper",
                    functions=("coord_x1", "quadratic", "sincos", "gaussian", "const"),
                )
            )
    return configs
