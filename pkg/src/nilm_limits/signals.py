"""Device signals and scenario means.

A scenario mean is the noiseless aggregate ``h(v)``: the elementwise sum of
every active device's signal, each shifted to its onset and zero-padded to a
common length.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    ConfigError,
    DimensionMismatch,
    EmptySignal,
    InputError,
    LengthMismatch,
    NonMonotoneTime,
    OutOfRange,
    ParseError,
    PhaseOutOfRange,
    TooShort,
    UnknownSource,
)

DEFAULT_RATE_HZ = 12.0


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DeviceSignal:
    """Finite sampled RMS-current trace (amperes) at ``sample_rate_hz``."""

    samples: np.ndarray
    sample_rate_hz: float = DEFAULT_RATE_HZ

    def __post_init__(self):
        arr = _frozen(self.samples)
        if arr.ndim != 1:
            raise InputError("signal samples must be one-dimensional")
        if not np.all(np.isfinite(arr)):
            raise ParseError("signal contains non-finite samples")
        if not (self.sample_rate_hz > 0 and math.isfinite(self.sample_rate_hz)):
            raise InputError(f"sample rate must be positive, got {self.sample_rate_hz!r}")
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True)
class PulseSource:
    """Rectangular pulse: ``amplitude`` on ``[onset, onset + duration)``."""

    amplitude: float
    onset: int
    duration: int


@dataclass(frozen=True)
class Component:
    """One device contribution: a named library signal or an inline pulse, shifted by ``shift`` samples."""

    source: str | PulseSource
    shift: int = 0

    def __post_init__(self):
        if int(self.shift) != self.shift or self.shift < 0:
            raise OutOfRange(f"component shift must be a nonnegative integer, got {self.shift!r}")


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    components: tuple[Component, ...] = ()
    prior_weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not (self.prior_weight >= 0 and math.isfinite(self.prior_weight)):
            raise ConfigError(f"scenario {self.name!r}: prior weight must be nonnegative")


@dataclass(frozen=True, eq=False)
class ScenarioMean:
    mean: np.ndarray
    label: str = ""

    def __post_init__(self):
        arr = _frozen(self.mean)
        if arr.ndim != 1:
            raise InputError("scenario mean must be one-dimensional")
        object.__setattr__(self, "mean", arr)

    def __len__(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class SamplingPlan:
    factor: int
    phase: int = 0

    def __post_init__(self):
        if int(self.factor) != self.factor or self.factor < 1:
            raise InputError(f"decimation factor must be an integer >= 1, got {self.factor!r}")
        if int(self.phase) != self.phase or not 0 <= self.phase < self.factor:
            raise PhaseOutOfRange(f"phase {self.phase!r} not in [0, {self.factor})")


def load_signal_csv(path, rate_hz: float = DEFAULT_RATE_HZ) -> DeviceSignal:
    """Read a two-column ``t,value`` CSV into a :class:`DeviceSignal`.

    A non-numeric first line is treated as a header. The time column may be a
    sample index or a timestamp but must never decrease.
    """
    path = Path(path)
    values = []
    last_t = -math.inf
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise ParseError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            try:
                t, v = float(row[0]), float(row[1])
            except ValueError:
                if lineno == 1:
                    continue
                raise ParseError(f"{path}:{lineno}: cannot parse {row!r}") from None
            if not (math.isfinite(t) and math.isfinite(v)):
                raise ParseError(f"{path}:{lineno}: non-finite value")
            if t < last_t:
                raise NonMonotoneTime(f"{path}:{lineno}: time {t} precedes {last_t}")
            last_t = t
            values.append(v)
    if not values:
        raise EmptySignal(f"{path}: no data rows")
    return DeviceSignal(np.array(values), rate_hz)


def write_signal_csv(signal: DeviceSignal, path, header: bool = True) -> None:
    """Write ``index,value`` rows using ``repr`` so a reload is bit-identical."""
    with Path(path).open("w", newline="") as fh:
        if header:
            fh.write("t,value\n")
        for i, v in enumerate(signal.samples.tolist()):
            fh.write(f"{i},{v!r}\n")


def synth_pulse(amplitude: float, onset: int, duration: int, length: int,
                rate_hz: float = DEFAULT_RATE_HZ) -> DeviceSignal:
    if onset < 0 or duration < 0 or length < 0:
        raise OutOfRange("onset, duration and length must be nonnegative")
    if onset + duration > length:
        raise OutOfRange(f"pulse [{onset}, {onset + duration}) exceeds length {length}")
    out = np.zeros(length)
    out[onset:onset + duration] = amplitude
    return DeviceSignal(out, rate_hz)


def _resolve(component: Component, library: Mapping[str, DeviceSignal], length: int) -> np.ndarray:
    src = component.source
    if isinstance(src, PulseSource):
        return synth_pulse(src.amplitude, src.onset, src.duration, length).samples
    try:
        return library[src].samples
    except KeyError:
        raise UnknownSource(f"no signal named {src!r} in the library") from None


def compose_scenario_mean(spec: ScenarioSpec, library: Mapping[str, DeviceSignal],
                          length: int) -> ScenarioMean:
    """Sum the shifted, zero-padded component signals into a length-``length`` mean.

    A component that would extend past ``length`` raises :class:`LengthMismatch`;
    nothing is silently clipped.
    """
    mean = np.zeros(length)
    for comp in spec.components:
        x = _resolve(comp, library, length)
        end = comp.shift + x.shape[0]
        if end > length:
            raise LengthMismatch(
                f"scenario {spec.name!r}: component {comp.source!r} ends at {end} > {length}")
        mean[comp.shift:end] += x
    return ScenarioMean(mean, spec.name)


def decimate(signal: DeviceSignal, plan: SamplingPlan) -> DeviceSignal:
    """Keep samples ``phase, phase + K, ...`` of the signal truncated to a multiple of ``K``."""
    K = plan.factor
    n = len(signal)
    if n < K:
        raise TooShort(f"signal of length {n} is shorter than decimation factor {K}")
    L = n // K
    out = signal.samples[:L * K][plan.phase::K]
    return DeviceSignal(out, signal.sample_rate_hz / K)


def phase_variants(signal: DeviceSignal, factor: int) -> list[DeviceSignal]:
    """All ``factor`` decimations of ``signal``, one per starting phase."""
    return [decimate(signal, SamplingPlan(factor, k)) for k in range(factor)]


def decimate_mean(mean: ScenarioMean, plan: SamplingPlan, rate_hz: float = DEFAULT_RATE_HZ) -> ScenarioMean:
    out = decimate(DeviceSignal(mean.mean, rate_hz), plan)
    return ScenarioMean(out.samples, f"{mean.label}@K{plan.factor}p{plan.phase}")


@dataclass(frozen=True)
class ScenarioSet:
    """Scenarios sharing a common length and sample rate, with normalized priors."""

    length: int
    sample_rate_hz: float
    scenarios: tuple[ScenarioSpec, ...]
    library: Mapping[str, DeviceSignal] = field(default_factory=dict, repr=False)

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.scenarios]

    def priors(self) -> np.ndarray:
        w = np.array([s.prior_weight for s in self.scenarios], dtype=float)
        total = w.sum()
        if not total > 0:
            raise ConfigError("scenario prior weights sum to zero")
        return w / total

    def means(self) -> list[ScenarioMean]:
        return [compose_scenario_mean(s, self.library, self.length) for s in self.scenarios]


def _parse_component(raw: Mapping, base: Path, rate_hz: float,
                     library: dict[str, DeviceSignal]) -> Component:
    try:
        src = raw["source"]
    except (KeyError, TypeError):
        raise ConfigError(f"component {raw!r} lacks a 'source'") from None
    shift = raw.get("shift", 0)
    if isinstance(src, str):
        src = {"file": src}
    if "pulse" in src:
        p = src["pulse"]
        try:
            pulse = PulseSource(float(p["amplitude"]), int(p["onset"]), int(p["duration"]))
        except (KeyError, TypeError, ValueError):
            raise ConfigError(f"bad pulse definition {p!r}") from None
        return Component(pulse, shift)
    if "file" in src:
        key = str(src["file"])
        if key not in library:
            library[key] = load_signal_csv(base / key, rate_hz)
        return Component(key, shift)
    if "device" in src:
        key = str(src["device"])
        if key not in library:
            raise UnknownSource(f"no device named {key!r}")
        return Component(key, shift)
    raise ConfigError(f"component source must be 'file', 'pulse' or 'device': {src!r}")


def parse_scenario_document(doc: Mapping, base_dir=".",
                            library: Mapping[str, DeviceSignal] | None = None) -> ScenarioSet:
    """Build a :class:`ScenarioSet` from a decoded JSON document.

    The document carries ``T`` and ``sample_rate_hz`` at the top level and either
    a ``scenarios`` list or the fields of a single scenario (``name``, ``prior``,
    ``components``). Relative file sources resolve against ``base_dir``.
    """
    base = Path(base_dir)
    try:
        length = int(doc["T"])
    except (KeyError, TypeError, ValueError):
        raise ConfigError("scenario document needs an integer 'T'") from None
    if length < 1:
        raise ConfigError("'T' must be at least 1")
    rate = float(doc.get("sample_rate_hz", DEFAULT_RATE_HZ))
    lib = dict(library or {})
    raw_list = doc["scenarios"] if "scenarios" in doc else [doc]
    specs = []
    for i, raw in enumerate(raw_list):
        comps = tuple(_parse_component(c, base, rate, lib) for c in raw.get("components", ()))
        specs.append(ScenarioSpec(str(raw.get("name", f"scenario{i}")), comps,
                                  float(raw.get("prior", 1.0))))
    sset = ScenarioSet(length, rate, tuple(specs), lib)
    # surface length errors at load time
    sset.means()
    return sset


def load_scenarios(path, library: Mapping[str, DeviceSignal] | None = None) -> ScenarioSet:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from None
    return parse_scenario_document(doc, path.parent, library)


def stack_means(means: Sequence[ScenarioMean]) -> np.ndarray:
    if not means:
        return np.zeros((0, 0))
    lengths = {len(m) for m in means}
    if len(lengths) != 1:
        raise DimensionMismatch(f"scenario means have differing lengths {sorted(lengths)}")
    return np.vstack([m.mean for m in means])
