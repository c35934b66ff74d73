"""Parameter sweeps: noise level, sampling rate, device count, input magnitude.

Each sweep returns a :class:`SweepTable` whose rows are ordered by the
independent variable. Exact rows carry ``std_error == 0`` and the
``closed-form`` method tag.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .detection import (
    DiscretePrior,
    LinearSystemBoundInput,
    largest_singular_value,
    linear_system_upper_bound,
    pairwise_success_probability,
)
from .errors import ConfigError, TooShort
from .montecarlo import McConfig, collection_success_probability, nway_success_probability
from .noise import NoiseModel
from .signals import (
    DEFAULT_RATE_HZ,
    Component,
    DeviceSignal,
    PulseSource,
    SamplingPlan,
    ScenarioMean,
    ScenarioSet,
    ScenarioSpec,
    decimate_mean,
    load_scenarios,
    parse_scenario_document,
)

CLOSED_FORM = "closed-form"
MONTE_CARLO = "monte-carlo"
COLUMNS = ("x", "probability", "std_error", "ci_low", "ci_high", "method")

DEFAULT_SIGMA2_GRID = tuple(float(v) for v in np.logspace(-2, 8, 21))
DEFAULT_DECIMATION_GRID = (1, 2, 4, 12, 60)
DEFAULT_MAGNITUDE_GRID = tuple(float(v) for v in np.linspace(0.0, 0.5, 11))


@dataclass(frozen=True)
class DeviceStandIn:
    """Rectangular RMS-current pulse standing in for a measured appliance trace."""

    name: str
    amplitude: float
    duration_s: float


# shapes are illustrative, not measured
STAND_INS = (
    DeviceStandIn("microwave", 8.0, 45.0),
    DeviceStandIn("toaster", 6.0, 60.0),
    DeviceStandIn("kettle", 10.0, 90.0),
    DeviceStandIn("lcd_monitor", 0.4, 90.0),
    DeviceStandIn("projector", 1.5, 90.0),
    DeviceStandIn("oscilloscope", 0.3, 90.0),
)


def stand_in_library(window_s: float = 100.0, onset_s: float = 5.0, rate_hz: float = DEFAULT_RATE_HZ,
                     devices: Sequence[DeviceStandIn] = STAND_INS) -> dict[str, DeviceSignal]:
    """Full-window signals for each stand-in, all switching on at ``onset_s``."""
    T = int(round(window_s * rate_hz))
    onset = int(round(onset_s * rate_hz))
    lib = {}
    for dev in devices:
        dur = min(int(round(dev.duration_s * rate_hz)), T - onset)
        x = np.zeros(T)
        x[onset:onset + dur] = dev.amplitude
        lib[dev.name] = DeviceSignal(x, rate_hz)
    return lib


def preset_scenarios(name: str, **kwargs) -> ScenarioSet:
    """Built-in scenario sets over the stand-in library.

    ``toaster-vs-nothing``, ``toaster-vs-kettle`` and ``six-devices``.
    """
    lib = stand_in_library(**kwargs)
    T = len(next(iter(lib.values())))
    rate = next(iter(lib.values())).sample_rate_hz
    if name == "toaster-vs-nothing":
        specs = (ScenarioSpec("nothing"), ScenarioSpec("toaster", (Component("toaster"),)))
    elif name == "toaster-vs-kettle":
        specs = (ScenarioSpec("toaster", (Component("toaster"),)),
                 ScenarioSpec("kettle", (Component("kettle"),)))
    elif name == "six-devices":
        specs = tuple(ScenarioSpec(d.name, (Component(d.name),)) for d in STAND_INS)
    else:
        raise ConfigError(f"unknown preset {name!r}")
    return ScenarioSet(T, rate, specs, lib)


def pulse_pair(amplitudes: tuple[float, float], duration: int, onset: int, length: int,
               rate_hz: float = DEFAULT_RATE_HZ) -> ScenarioSet:
    """Two single-pulse scenarios differing only in amplitude."""
    specs = tuple(ScenarioSpec(f"pulse{i}", (Component(PulseSource(a, onset, duration)),))
                  for i, a in enumerate(amplitudes))
    return ScenarioSet(length, rate_hz, specs, {})


@dataclass(frozen=True)
class SweepRow:
    x: float
    probability: float
    std_error: float
    ci_low: float
    ci_high: float
    method: str
    series: str | None = None

    @classmethod
    def exact(cls, x, p, series=None) -> SweepRow:
        p = float(p)
        return cls(float(x), p, 0.0, p, p, CLOSED_FORM, series)

    @classmethod
    def estimated(cls, x, est, series=None) -> SweepRow:
        return cls(float(x), est.value, est.std_error, est.ci_low, est.ci_high, MONTE_CARLO, series)


@dataclass
class SweepTable:
    rows: list[SweepRow]
    metadata: dict = field(default_factory=dict)

    @property
    def has_series(self) -> bool:
        return any(r.series is not None for r in self.rows)

    def column(self, name: str, series: str | None = None) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows if series is None or r.series == series])

    def to_csv(self) -> str:
        cols = COLUMNS + (("series",) if self.has_series else ())
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in self.rows:
            vals = [repr(r.x), repr(r.probability), repr(r.std_error), repr(r.ci_low),
                    repr(r.ci_high), r.method]
            if self.has_series:
                vals.append(r.series or "")
            w.writerow(vals)
        return buf.getvalue()

    def to_json(self) -> str:
        rows = []
        for r in self.rows:
            d = asdict(r)
            if not self.has_series:
                d.pop("series")
            rows.append(d)
        return json.dumps({"metadata": self.metadata, "rows": rows}, indent=2, sort_keys=True) + "\n"

    def render(self, fmt: str = "csv") -> str:
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json":
            return self.to_json()
        raise ConfigError(f"unknown output format {fmt!r}")

    def write(self, path, fmt: str = "csv") -> None:
        Path(path).write_text(self.render(fmt))


@dataclass(frozen=True)
class ExperimentConfig:
    scenarios: ScenarioSet
    sigma2: tuple[float, ...] | None = None
    covariance: np.ndarray | None = field(default=None, repr=False)
    decimation: tuple[int, ...] = DEFAULT_DECIMATION_GRID
    magnitudes: tuple[float, ...] = DEFAULT_MAGNITUDE_GRID
    system_matrix: np.ndarray | None = field(default=None, repr=False)
    prior: tuple[float, ...] | None = None
    prior_null: float = 0.5
    mc: McConfig = McConfig(samples=100_000)
    out: str | None = None
    format: str = "csv"

    def __post_init__(self):
        for name in ("sigma2", "decimation", "magnitudes"):
            grid = getattr(self, name)
            if grid is not None and len(grid) == 0:
                raise ConfigError(f"{name} grid is empty")
        if self.sigma2 is not None and any(not (v > 0) for v in self.sigma2):
            raise ConfigError("sigma2 values must be positive")
        if any(int(k) != k or k < 1 for k in self.decimation):
            raise ConfigError("decimation factors must be integers >= 1")
        if any(not (u >= 0) for u in self.magnitudes):
            raise ConfigError("magnitudes must be nonnegative")
        if not 0 <= self.prior_null <= 1:
            raise ConfigError("prior_null must lie in [0, 1]")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown output format {self.format!r}")

    def means(self) -> list[ScenarioMean]:
        return self.scenarios.means()

    def prior_for(self, n: int) -> DiscretePrior:
        weights = self.prior if self.prior is not None else self.scenarios.priors()
        if len(weights) != n:
            raise ConfigError(f"prior has {len(weights)} weights for {n} scenarios")
        return DiscretePrior.normalized(weights)

    def sigma2_grid(self) -> tuple[float, ...]:
        return self.sigma2 if self.sigma2 is not None else DEFAULT_SIGMA2_GRID

    def fixed_sigma2(self) -> float:
        if self.sigma2 is None:
            return 1.0
        if len(self.sigma2) != 1:
            raise ConfigError("this sweep needs a single sigma2 value")
        return float(self.sigma2[0])

    def noise_for(self, scale: float) -> NoiseModel:
        if self.covariance is not None:
            return NoiseModel.full(self.covariance * scale)
        return NoiseModel.isotropic(scale)

    def digest(self) -> str:
        h = hashlib.sha256()
        doc = {
            "scenarios": self.scenarios.names,
            "sigma2": self.sigma2,
            "decimation": list(self.decimation),
            "magnitudes": list(self.magnitudes),
            "prior": self.prior,
            "prior_null": self.prior_null,
            "mc": asdict(self.mc) | {"workers": None, "chunk_size": None},
        }
        h.update(json.dumps(doc, sort_keys=True).encode())
        for m in self.means():
            h.update(m.mean.tobytes())
        for extra in (self.covariance, self.system_matrix):
            if extra is not None:
                h.update(np.ascontiguousarray(extra, dtype=float).tobytes())
        return h.hexdigest()

    def metadata(self, command: str, stochastic: bool = True) -> dict:
        meta = {"command": command, "config_hash": self.digest()}
        if stochastic:
            meta.update(seed=int(self.mc.seed), samples=int(self.mc.samples))
        return meta


def _two(cfg: ExperimentConfig):
    means = cfg.means()
    if len(means) != 2:
        raise ConfigError(f"this sweep needs exactly two scenarios, got {len(means)}")
    return means, cfg.prior_for(2)


def run_noise_sweep(cfg: ExperimentConfig) -> SweepTable:
    """Closed-form MAP success between two scenarios for each noise level."""
    (m0, m1), prior = _two(cfg)
    rows = [SweepRow.exact(s2, pairwise_success_probability(m0, m1, cfg.noise_for(s2), prior))
            for s2 in sorted(cfg.sigma2_grid())]
    return SweepTable(rows, cfg.metadata("noise-sweep", stochastic=False))


def pairwise_table(cfg: ExperimentConfig, with_mc: bool = True) -> SweepTable:
    """Closed form at each noise level, optionally followed by its Monte-Carlo cross-check."""
    (m0, m1), prior = _two(cfg)
    rows = []
    for s2 in sorted(cfg.sigma2_grid()):
        noise = cfg.noise_for(s2)
        rows.append(SweepRow.exact(s2, pairwise_success_probability(m0, m1, noise, prior)))
        if with_mc and not np.array_equal(m0.mean, m1.mean):
            est = nway_success_probability([m0, m1], prior, noise, cfg.mc)
            rows.append(SweepRow.estimated(s2, est.overall))
    return SweepTable(rows, cfg.metadata("pairwise", stochastic=with_mc))


def phase_collections(mean: ScenarioMean, factor: int) -> list[ScenarioMean]:
    if len(mean) < factor:
        raise TooShort(f"scenario {mean.label!r} has {len(mean)} samples, fewer than K={factor}")
    return [decimate_mean(mean, SamplingPlan(factor, k)) for k in range(factor)]


def rate_point(m0: ScenarioMean, m1: ScenarioMean, prior: DiscretePrior, factor: int,
               noise: NoiseModel, mc: McConfig) -> SweepRow:
    if factor == 1:
        return SweepRow.exact(1, pairwise_success_probability(m0, m1, noise, prior))
    V0 = phase_collections(m0, factor)
    V1 = phase_collections(m1, factor)
    p0, p1 = prior.weights
    members = np.concatenate([np.full(factor, p0 / factor), np.full(factor, p1 / factor)])
    est = collection_success_probability(V0, V1, DiscretePrior.normalized(members), noise, mc)
    return SweepRow.estimated(factor, est)


def run_rate_sweep(cfg: ExperimentConfig) -> SweepTable:
    """Success versus decimation factor ``K`` with an unknown starting phase.

    For ``K > 1`` each scenario becomes a collection of its ``K`` phase
    decimations under a uniform phase prior, and the collection-level Bayes
    success is estimated by simulation.
    """
    (m0, m1), prior = _two(cfg)
    if cfg.covariance is not None:
        raise ConfigError("the rate sweep uses isotropic noise; a covariance file is not supported")
    noise = NoiseModel.isotropic(cfg.fixed_sigma2())
    grid = sorted(set(int(k) for k in cfg.decimation))
    if grid[-1] > len(m0):
        raise TooShort(f"signals of length {len(m0)} cannot be decimated by K={grid[-1]}")
    rows = [rate_point(m0, m1, prior, k, noise, cfg.mc) for k in grid]
    return SweepTable(rows, cfg.metadata("rate-sweep"))


def run_nway_sweep(cfg: ExperimentConfig) -> SweepTable:
    """Per-scenario conditional MAP success and the prior-weighted total, per noise level."""
    means = cfg.means()
    if len(means) < 2:
        raise ConfigError("the device-count sweep needs at least two scenarios")
    prior = cfg.prior_for(len(means))
    names = [m.label or f"scenario{i}" for i, m in enumerate(means)]
    rows = []
    for s2 in sorted(cfg.sigma2_grid()):
        est = nway_success_probability(means, prior, cfg.noise_for(s2), cfg.mc)
        for name, cond in zip(names, est.conditional):
            if cond is not None:
                rows.append(SweepRow.estimated(s2, cond, series=name))
        rows.append(SweepRow.estimated(s2, est.overall, series="overall"))
    return SweepTable(rows, cfg.metadata("nway-sweep"))


def system_matrix(cfg: ExperimentConfig) -> np.ndarray:
    """Configured system matrix, else one column per scenario mean (unit-pulse responses)."""
    if cfg.system_matrix is not None:
        return np.asarray(cfg.system_matrix, dtype=float)
    return np.column_stack([m.mean for m in cfg.means()])


def run_magnitude_sweep(cfg: ExperimentConfig) -> SweepTable:
    """Linear-system success bound as the input magnitude limit grows."""
    if cfg.covariance is not None:
        raise ConfigError("the magnitude bound assumes isotropic noise")
    sigma_max = largest_singular_value(system_matrix(cfg))
    s2 = cfg.fixed_sigma2()
    rows = [SweepRow.exact(U, linear_system_upper_bound(
        LinearSystemBoundInput(sigma_max, float(U), s2, cfg.prior_null)))
        for U in sorted(cfg.magnitudes)]
    meta = cfg.metadata("magnitude-sweep", stochastic=False)
    meta["sigma_max"] = sigma_max
    return SweepTable(rows, meta)


def _load_matrix(value, base: Path, what: str) -> np.ndarray:
    if isinstance(value, str):
        try:
            arr = np.loadtxt(base / value, delimiter=",", ndmin=2)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read {what} from {value}: {exc}") from None
    else:
        arr = np.asarray(value, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or not np.all(np.isfinite(arr)):
        raise ConfigError(f"{what} must be a finite 2-D matrix")
    return arr


def _grid(value, cast=float) -> tuple | None:
    if value is None:
        return None
    if isinstance(value, (int, float)):
        value = [value]
    try:
        return tuple(cast(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad grid {value!r}") from None


def config_from_mapping(doc: Mapping, base_dir=".", overrides: Mapping | None = None) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from decoded JSON plus CLI overrides.

    Recognised keys: ``scenarios`` (inline document or path), ``preset``,
    ``sigma2``, ``covariance``, ``decimation``, ``magnitudes``,
    ``system_matrix``, ``prior``, ``prior_null``, ``samples``, ``seed``,
    ``confidence_level``, ``out``, ``format``.
    """
    base = Path(base_dir)
    merged = dict(doc)
    overrides = overrides or {}
    if overrides.get("preset") is not None and overrides.get("scenarios") is None:
        merged.pop("scenarios", None)
    for k, v in overrides.items():
        if v is not None:
            merged[k] = v
    known = {"scenarios", "preset", "sigma2", "covariance", "decimation", "magnitudes",
             "system_matrix", "prior", "prior_null", "samples", "seed", "confidence_level",
             "out", "format", "workers"}
    unknown = set(merged) - known
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")

    src = merged.get("scenarios")
    if isinstance(src, str):
        scenarios = load_scenarios(base / src)
    elif isinstance(src, Mapping):
        scenarios = parse_scenario_document(src, base)
    elif src is None:
        scenarios = preset_scenarios(merged.get("preset", "toaster-vs-kettle"))
    else:
        raise ConfigError("'scenarios' must be a path or an inline document")

    try:
        mc = McConfig(samples=int(merged.get("samples", 100_000)), seed=int(merged.get("seed", 0)),
                      confidence_level=float(merged.get("confidence_level", 0.95)),
                      workers=int(merged.get("workers", 1)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None

    kwargs = dict(
        scenarios=scenarios,
        sigma2=_grid(merged.get("sigma2")),
        mc=mc,
        out=merged.get("out"),
        format=merged.get("format", "csv"),
        prior=_grid(merged.get("prior")),
        prior_null=float(merged.get("prior_null", 0.5)),
    )
    if "decimation" in merged:
        kwargs["decimation"] = _grid(merged["decimation"], int)
    if "magnitudes" in merged:
        kwargs["magnitudes"] = _grid(merged["magnitudes"])
    if merged.get("covariance") is not None:
        kwargs["covariance"] = _load_matrix(merged["covariance"], base, "covariance")
    if merged.get("system_matrix") is not None:
        kwargs["system_matrix"] = _load_matrix(merged["system_matrix"], base, "system matrix")
    return ExperimentConfig(**kwargs)


def load_config(path, overrides: Mapping | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(doc, Mapping):
        raise ConfigError("config must be a JSON object")
    return config_from_mapping(doc, path.parent, overrides)

