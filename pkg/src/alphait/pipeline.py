"""Experiment orchestration: simulation study, cross-validation, kriged maps.

Every (replicate, alpha) cell runs the same chain: transform the training
compositions, fit a nugget plus exponential LMC to the empirical
cross-variogram, cokrige the test locations, back-transform and score.
"""

from __future__ import annotations

import importlib.metadata
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import scipy

from .geostat import cokrige, empirical_cross_variogram, fit_default_lmc
from .io import fmt, write_table
from .metrics import alpha_it_distance, pooled_sd, score_predictions
from .mle import estimate_alpha
from .simplex import CompositionalField, DomainError
from .simulate import GRFSampler, ScenarioConfig, apply_scenario, to_compositions, uniform_locations
from .transforms import coordinates, inverse_coordinates

#: inverse residual above which a prediction is flagged as outside the codomain
FLAG_RESIDUAL = 1e-6
#: alpha used in place of 0 on zero-containing data when substitution is enabled
ZERO_SUBSTITUTE = 0.01
MODES = ("simulation-study", "cross-validation", "estimate", "krige-map")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def parse_alpha_grid(text: str) -> tuple[str, ...]:
    """Tokens from ``"0,0.2,ml"`` or a range ``"0:1:0.1"`` (inclusive)."""
    tokens: list[str] = []
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        if item.count(":") == 2:
            a, b, s = (float(v) for v in item.split(":"))
            if s <= 0:
                raise ConfigError(f"range step must be positive in {item!r}")
            k = int(np.floor((b - a) / s + 1e-9))
            tokens.extend(f"{round(a + i * s, 12):g}" for i in range(k + 1))
        elif item == "ml":
            tokens.append(item)
        else:
            try:
                v = float(item)
            except ValueError:
                raise ConfigError(f"alpha grid token {item!r} is neither a number nor 'ml'") from None
            if v < 0:
                raise ConfigError(f"negative alpha {v}")
            tokens.append(f"{v:g}")
    if not tokens:
        raise ConfigError("empty alpha grid")
    return tuple(tokens)


def _to_bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment description; serialises to ``key = value`` lines."""

    mode: str = "simulation-study"
    alpha_grid: tuple[str, ...] = parse_alpha_grid("0:1:0.1")
    replicates: int = 20
    train_size: int = 200
    test_size: int = 400
    scenario: str = "center-0.2"
    input: str = ""
    out_dir: str = "out"
    seed: int = 0
    workers: int = 1
    zero_substitute: bool = False
    metric_alphas: tuple[float, ...] = (0.2, 0.6, 1.0)
    alpha: str = "ml"
    grid_size: int = 100
    n_bins: int = 15

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if self.train_size < 2 or self.test_size < 1:
            raise ConfigError("train_size must be >= 2 and test_size >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.grid_size < 1:
            raise ConfigError("grid_size must be >= 1")
        parse_alpha_grid(",".join(self.alpha_grid))
        parse_alpha_grid(self.alpha)

    @classmethod
    def from_mapping(cls, values: dict) -> "ExperimentConfig":
        known = {f.name: f for f in fields(cls)}
        kw = {}
        for key, raw in values.items():
            name = key.strip().replace("-", "_")
            if name not in known:
                raise ConfigError(f"unknown configuration key {key!r}")
            if raw is None:
                continue
            if name == "alpha_grid":
                kw[name] = parse_alpha_grid(raw) if isinstance(raw, str) else tuple(f"{v:g}" if not isinstance(v, str) else v for v in raw)
            elif name == "metric_alphas":
                kw[name] = tuple(float(v) for v in (raw.split(",") if isinstance(raw, str) else raw))
            elif name == "alpha":
                kw[name] = parse_alpha_grid(str(raw))[0]
            elif name == "zero_substitute":
                kw[name] = _to_bool(raw)
            elif name in ("replicates", "train_size", "test_size", "seed", "workers", "grid_size", "n_bins"):
                try:
                    kw[name] = int(raw)
                except ValueError:
                    raise ConfigError(f"{name} must be an integer, got {raw!r}") from None
            else:
                kw[name] = str(raw).strip()
        return cls(**kw)

    @classmethod
    def from_file(cls, path, **overrides) -> "ExperimentConfig":
        values = {}
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key = value")
                k, v = line.split("=", 1)
                values[k.strip()] = v.strip()
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_mapping(values)

    def to_text(self) -> str:
        out = []
        for k, v in asdict(self).items():
            if isinstance(v, tuple):
                v = ",".join(fmt(x) if isinstance(x, float) else str(x) for x in v)
            out.append(f"{k} = {fmt(v) if isinstance(v, float) else str(v).lower() if isinstance(v, bool) else v}")
        return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# result table
# --------------------------------------------------------------------------

BASE_COLUMNS = ("replicate", "alpha_label", "alpha", "delta_H", "delta_TV", "delta_alpha",
                "sigma", "delta_alpha_over_sigma", "alpha_hat", "n_flagged", "status")
NUMERIC = ("alpha", "delta_H", "delta_TV", "delta_alpha", "sigma", "delta_alpha_over_sigma",
           "alpha_hat", "n_flagged")


def metric_column(a: float) -> str:
    return f"delta_metric_{a:g}"


@dataclass
class ResultTable:
    """One row per (replicate, alpha) cell plus mean/sd summaries per alpha.

    Failed cells keep their row with ``status`` holding the error and NaN
    scores; summaries skip NaN entries.
    """

    metric_alphas: tuple[float, ...] = ()
    rows: list[dict] = field(default_factory=list)

    @property
    def columns(self) -> list[str]:
        return list(BASE_COLUMNS) + [metric_column(a) for a in self.metric_alphas]

    @property
    def numeric_columns(self) -> list[str]:
        return list(NUMERIC) + [metric_column(a) for a in self.metric_alphas]

    def sorted_rows(self) -> list[dict]:
        return sorted(self.rows, key=lambda r: (r["replicate"], r["_order"]))

    def labels(self) -> list[str]:
        seen: dict[str, int] = {}
        for r in self.rows:
            seen.setdefault(r["alpha_label"], r["_order"])
        return sorted(seen, key=seen.get)

    def column(self, name: str, label: str) -> np.ndarray:
        return np.array([r[name] for r in self.sorted_rows() if r["alpha_label"] == label], dtype=float)

    def summary(self) -> list[dict]:
        """Mean and sample sd (ddof=1) per alpha label, ignoring NaN."""
        out = []
        for stat in ("mean", "sd"):
            for lab in self.labels():
                row = {"replicate": stat, "alpha_label": lab, "status": ""}
                for c in self.numeric_columns:
                    v = self.column(c, lab)
                    v = v[np.isfinite(v)]
                    if stat == "mean":
                        row[c] = float(np.mean(v)) if v.size else float("nan")
                    else:
                        row[c] = float(np.std(v, ddof=1)) if v.size > 1 else float("nan")
                out.append(row)
        return out

    def mean(self, name: str) -> dict[str, float]:
        return {r["alpha_label"]: r[name] for r in self.summary() if r["replicate"] == "mean"}

    def n_failed(self) -> int:
        return sum(r["status"] != "ok" for r in self.rows)

    def to_csv(self, path) -> None:
        cols = self.columns
        body = [[r.get(c, "") for c in cols] for r in self.sorted_rows() + self.summary()]
        write_table(path, cols, body)


# --------------------------------------------------------------------------
# one cell of an experiment
# --------------------------------------------------------------------------


def _nan_row(metric_alphas):
    row = {c: float("nan") for c in NUMERIC}
    row.update({metric_column(a): float("nan") for a in metric_alphas})
    return row


def krige_in_coordinates(train: CompositionalField, targets, alpha: float, n_bins: int = 15):
    """Transform, fit the default LMC, cokrige and back-transform.

    Returns the training coordinates, kriged coordinates, the inverse result
    and the fitted model.
    """
    Z = coordinates(train.parts, alpha)
    ev = empirical_cross_variogram(train.locations, Z, bins=n_bins)
    model = fit_default_lmc(ev)
    kr = cokrige(model, train.locations, Z, targets)
    inv = inverse_coordinates(kr.predictions, alpha)
    return Z, kr, inv, model


def evaluate_cell(train: CompositionalField, test: CompositionalField, alpha: float,
                  metric_alphas=(), n_bins: int = 15) -> dict:
    """Scores of kriging ``test`` from ``train`` in alpha coordinates."""
    Z, kr, inv, _ = krige_in_coordinates(train, test.locations, alpha, n_bins)
    sigma = pooled_sd(Z)
    pred = np.atleast_2d(inv.composition)
    rep = score_predictions(test.parts, pred, alpha, sigma)
    row = {
        "alpha": float(alpha),
        "delta_H": rep.hellinger_mean,
        "delta_TV": rep.total_variation_mean,
        "delta_alpha": rep.alpha_it_rmse,
        "sigma": sigma,
        "delta_alpha_over_sigma": rep.normalized_rmse,
        "n_flagged": float(np.sum(np.atleast_1d(inv.residual) > FLAG_RESIDUAL)),
    }
    for a in metric_alphas:
        d = alpha_it_distance(test.parts, pred, a)
        row[metric_column(a)] = float(np.sqrt(np.mean(d**2)))
    return row


def _run_cell(train, test, label, alpha, metric_alphas, n_bins):
    row = _nan_row(metric_alphas)
    row["alpha_label"] = label
    try:
        row.update(evaluate_cell(train, test, alpha, metric_alphas, n_bins))
        row["status"] = "ok"
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        row["alpha"] = float(alpha)
        row["status"] = f"failed: {type(exc).__name__}: {exc}".replace(",", ";")
    return row


def _resolve_alpha(token: str, has_zeros: bool, zero_substitute: bool, alpha_hat=None) -> float:
    if token == "ml":
        if alpha_hat is None:
            raise ConfigError("'ml' needs an estimated alpha")
        return float(alpha_hat)
    a = float(token)
    if a == 0 and has_zeros:
        if not zero_substitute:
            raise ConfigError("alpha = 0 is undefined for compositions with zero parts; "
                              f"enable zero_substitute to use alpha = {ZERO_SUBSTITUTE} instead")
        return ZERO_SUBSTITUTE
    return a


# --------------------------------------------------------------------------
# simulation study
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class StudyDesign:
    """Fixed locations, split and sampler shared by all replicates."""

    scenario: ScenarioConfig
    locations: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray
    sampler: GRFSampler


def study_design(config: ExperimentConfig, scenario: ScenarioConfig | None = None) -> StudyDesign:
    n, N = config.train_size, config.test_size
    sc = scenario or ScenarioConfig.preset(config.scenario)
    sc = replace(sc, n_points=n + N, seed=config.seed)
    rng = np.random.default_rng(config.seed)
    loc = uniform_locations(n + N, sc.domain, rng)
    perm = rng.permutation(n + N)
    sampler = GRFSampler(loc, sc.coregionalization, sc.nu, sc.range_)
    return StudyDesign(sc, loc, np.sort(perm[:n]), np.sort(perm[n:]), sampler)


def simulate_replicate(design: StudyDesign, b: int) -> CompositionalField:
    """Field of replicate ``b`` (seed ``seed + 1 + b``) at the design locations."""
    rng = np.random.default_rng(design.scenario.seed + 1 + b)
    Z = apply_scenario(design.sampler.draw(rng), design.scenario)
    return to_compositions(Z, design.scenario.alpha0, design.locations)


def _study_replicate(args):
    design, b, grid, metric_alphas, n_bins = args
    try:
        fld = simulate_replicate(design, b)
    except DomainError as exc:
        # a far Gaussian tail can leave the codomain; the replicate is kept as failed cells
        fld, reason = None, f"failed: simulation: {exc}".replace(",", ";")
    rows = []
    for k, tok in enumerate(grid):
        if fld is None:
            row = _nan_row(metric_alphas)
            row.update(alpha_label=tok, alpha=float(tok), status=reason)
        else:
            row = _run_cell(fld.subset(design.train_idx), fld.subset(design.test_idx), tok, float(tok),
                            metric_alphas, n_bins)
        row.update(replicate=b, _order=k)
        rows.append(row)
    return rows


def _map(fn, jobs, workers):
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs))


def run_simulation_study(config: ExperimentConfig, scenario: ScenarioConfig | None = None) -> ResultTable:
    """Simulate ``replicates`` fields and score kriging for every grid alpha.

    Locations and the train/test split are drawn once from ``seed`` and kept
    for every replicate; only the field realisation changes.
    """
    if "ml" in config.alpha_grid:
        raise ConfigError("the simulation study takes numeric alphas only")
    design = study_design(config, scenario)
    jobs = [(design, b, config.alpha_grid, config.metric_alphas, config.n_bins)
            for b in range(config.replicates)]
    table = ResultTable(tuple(config.metric_alphas))
    for rows in _map(_study_replicate, jobs, config.workers):
        table.rows.extend(rows)
    return table


# --------------------------------------------------------------------------
# cross-validation on a given field
# --------------------------------------------------------------------------


def _cv_replicate(args):
    fld, config, b = args
    rng = np.random.default_rng(config.seed + b)
    perm = rng.permutation(fld.n)
    train = fld.subset(np.sort(perm[: config.train_size]))
    test = fld.subset(np.sort(perm[config.train_size: config.train_size + config.test_size]))
    has_zeros = not fld.strictly_positive
    try:
        a_hat = estimate_alpha(train.parts).alpha_hat
    except ValueError:
        a_hat = float("nan")
    rows = []
    for k, tok in enumerate(config.alpha_grid):
        if tok == "ml" and not np.isfinite(a_hat):
            row = _nan_row(config.metric_alphas)
            row.update(alpha_label=tok, status="failed: alpha could not be estimated")
        else:
            a = _resolve_alpha(tok, has_zeros, config.zero_substitute, a_hat)
            row = _run_cell(train, test, tok, a, config.metric_alphas, config.n_bins)
        row.update(replicate=b, _order=k, alpha_hat=a_hat)
        rows.append(row)
    return rows


def run_cross_validation(config: ExperimentConfig, fld: CompositionalField) -> ResultTable:
    """Monte Carlo cross-validation with per-replicate random splits.

    Each replicate estimates alpha on its training set; the token ``"ml"``
    in the grid evaluates kriging at that estimate.
    """
    if config.train_size + config.test_size > fld.n:
        raise ConfigError(f"train_size + test_size = {config.train_size + config.test_size} "
                          f"exceeds the {fld.n} available points")
    has_zeros = not fld.strictly_positive
    for tok in config.alpha_grid:
        if tok != "ml":
            _resolve_alpha(tok, has_zeros, config.zero_substitute)
    jobs = [(fld, config, b) for b in range(config.replicates)]
    table = ResultTable(tuple(config.metric_alphas))
    for rows in _map(_cv_replicate, jobs, config.workers):
        table.rows.extend(rows)
    return table


# --------------------------------------------------------------------------
# kriged map
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class KrigedMap:
    alpha: float
    grid: np.ndarray  # (m, 2)
    compositions: np.ndarray  # (m, D)
    residual: np.ndarray  # (m,)
    part_names: tuple[str, ...]

    @property
    def flagged(self) -> np.ndarray:
        return self.residual > FLAG_RESIDUAL

    def to_csv(self, path) -> None:
        header = ["x", "y", *self.part_names, "residual", "out_of_codomain"]
        rows = [[*g, *c, r, int(f)] for g, c, r, f in
                zip(self.grid, self.compositions, self.residual, self.flagged)]
        write_table(path, header, rows)


def regular_grid(locations, size: int) -> np.ndarray:
    """``size x size`` nodes spanning the bounding box of ``locations``."""
    lo, hi = locations.min(axis=0), locations.max(axis=0)
    gx, gy = np.linspace(lo[0], hi[0], size), np.linspace(lo[1], hi[1], size)
    X, Y = np.meshgrid(gx, gy)
    return np.column_stack([X.ravel(), Y.ravel()])


def krige_map(config: ExperimentConfig, fld: CompositionalField, targets=None) -> KrigedMap:
    """Cokrige the whole field onto a regular grid over its bounding box.

    ``config.alpha`` is a number or ``"ml"`` (estimated on the field).
    """
    if config.alpha == "ml":
        a = estimate_alpha(fld.parts).alpha_hat
    else:
        a = _resolve_alpha(config.alpha, not fld.strictly_positive, config.zero_substitute)
    grid = regular_grid(fld.locations, config.grid_size) if targets is None else np.atleast_2d(targets)
    _, _, inv, _ = krige_in_coordinates(fld, grid, a, config.n_bins)
    comp = np.atleast_2d(inv.composition)
    return KrigedMap(a, grid, comp, np.atleast_1d(inv.residual), fld.part_names)


# --------------------------------------------------------------------------
# run manifest
# --------------------------------------------------------------------------


def write_manifest(path, config: ExperimentConfig, extra: dict | None = None) -> None:
    """Configuration, seed and software versions, one ``key = value`` per line."""
    try:
        version = importlib.metadata.version("artifact")
    except importlib.metadata.PackageNotFoundError:
        version = "unknown"
    lines = ["# run manifest", f"package_version = {version}",
             f"python = {platform.python_version()}", f"numpy = {np.__version__}",
             f"scipy = {scipy.__version__}", config.to_text().rstrip()]
    for k, v in (extra or {}).items():
        lines.append(f"{k} = {fmt(v)}")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines) + "\n")


__all__ = [
    "ConfigError", "DomainError", "ExperimentConfig", "KrigedMap", "ResultTable", "StudyDesign",
    "evaluate_cell", "krige_in_coordinates", "krige_map", "parse_alpha_grid", "regular_grid",
    "run_cross_validation", "run_simulation_study", "simulate_replicate", "study_design",
    "write_manifest",
]
