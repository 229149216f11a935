"""Sampled signals on uniform time grids.

Two norm conventions coexist here and are used deliberately:

* ``energy`` is the plain vector convention, sum of squared samples with
  no spacing weight.  It is what every downstream matrix operation uses.
* Continuous-time identities (autocorrelations, smoothness/arc-length
  shift bounds) are checked on sqrt(spacing)-scaled samples, so that
  ``spacing * energy(raw samples)`` approximates the L2 integral.

Signals may carry an analytic evaluator.  Shifting a signal with an
evaluator re-samples it exactly; shifting a tabulated signal falls back
to zero-padded Fourier interpolation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import BoundaryLeakageError, ConfigError

# Fraction of samples treated as "boundary" (split over both ends) and the
# energy fraction allowed to live there before an operation is refused.
EDGE_SAMPLE_FRACTION = 0.01
LEAKAGE_TOLERANCE = 0.01


@dataclass(frozen=True)
class SampleGrid:
    """Uniform time grid: ``count`` samples spaced ``spacing`` apart."""

    t_start: float
    spacing: float
    count: int

    def __post_init__(self):
        if not (self.spacing > 0 and np.isfinite(self.spacing)):
            raise ConfigError(f"grid spacing must be positive and finite, got {self.spacing}")
        if self.count < 2:
            raise ConfigError(f"grid needs at least 2 samples, got {self.count}")
        if not np.isfinite(self.t_start + self.count * self.spacing):
            raise ConfigError("grid end time is not finite")

    @property
    def t_end(self) -> float:
        return self.t_start + self.count * self.spacing

    def times(self) -> np.ndarray:
        return self.t_start + self.spacing * np.arange(self.count)

    @classmethod
    def over(cls, t_start: float, t_end: float, count: int) -> "SampleGrid":
        """Grid whose samples cover ``[t_start, t_end]`` inclusively."""
        if not t_end > t_start:
            raise ConfigError("t_end must exceed t_start")
        return cls(t_start, (t_end - t_start) / (count - 1), count)


@dataclass(frozen=True)
class SampledSignal:
    """Real samples on a :class:`SampleGrid`, optionally with the analytic
    function they were sampled from."""

    grid: SampleGrid
    values: np.ndarray
    analytic: Optional[Callable[[np.ndarray], np.ndarray]] = field(
        default=None, compare=False, repr=False
    )

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.shape[0] != self.grid.count:
            raise ConfigError(
                f"values length {v.shape} does not match grid count {self.grid.count}"
            )
        if not np.all(np.isfinite(v)):
            raise ConfigError("signal contains non-finite samples")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def times(self) -> np.ndarray:
        return self.grid.times()


def energy(s: SampledSignal) -> float:
    """Sum of squared samples (no spacing weight)."""
    return float(np.dot(s.values, s.values))


def _edge_energy_fraction(values: np.ndarray) -> float:
    n = values.shape[0]
    edge = max(1, int(np.ceil(0.5 * EDGE_SAMPLE_FRACTION * n)))
    total = float(np.dot(values, values))
    if total == 0.0:
        return 0.0
    tail = float(np.dot(values[:edge], values[:edge]) + np.dot(values[-edge:], values[-edge:]))
    return tail / total


def _require_contained(s: SampledSignal, what: str) -> None:
    frac = _edge_energy_fraction(s.values)
    if frac > LEAKAGE_TOLERANCE:
        raise BoundaryLeakageError(
            f"{what}: {100 * frac:.2f}% of signal energy sits in the outermost "
            f"{100 * EDGE_SAMPLE_FRACTION:.0f}% of samples (limit "
            f"{100 * LEAKAGE_TOLERANCE:.0f}%)"
        )


def sobolev_norm(s: SampledSignal) -> float:
    """Frequency-weighted energy sqrt((1/2pi) * sum xi^2 |vhat(xi)|^2 dxi).

    ``vhat`` is the spacing-weighted DFT, approximating the continuous
    transform of the signal; ``xi`` are the signed grid frequencies
    2*pi*k/(N*d).  Signals with noticeable boundary energy are rejected,
    since periodization would corrupt the spectrum.
    """
    _require_contained(s, "sobolev_norm")
    d = s.grid.spacing
    n = s.grid.count
    vhat = d * np.fft.fft(s.values)
    xi = 2.0 * np.pi * np.fft.fftfreq(n, d)
    dxi = 2.0 * np.pi / (n * d)
    return float(np.sqrt(np.sum(xi**2 * np.abs(vhat) ** 2) * dxi / (2.0 * np.pi)))


def total_variation(s: SampledSignal) -> float:
    """Sum of absolute successive differences."""
    return float(np.sum(np.abs(np.diff(s.values))))


def shift(s: SampledSignal, theta: float) -> SampledSignal:
    """Samples of ``v(t - theta)`` on the same grid.

    Signals with an analytic evaluator are re-sampled exactly; tabulated
    signals are shifted by zero-padded Fourier interpolation.  If more
    than the tolerated energy fraction is pushed off the grid the shift
    is refused.
    """
    before = energy(s)
    if s.analytic is not None:
        f = s.analytic
        values = f(s.times() - theta)
        shifted_eval = lambda t, _f=f, _th=theta: _f(t - _th)  # noqa: E731
        out = SampledSignal(s.grid, values, analytic=shifted_eval)
    else:
        out = SampledSignal(s.grid, _fourier_shift(s.values, theta / s.grid.spacing))
    after = energy(out)
    if before > 0 and after < (1.0 - LEAKAGE_TOLERANCE) * before:
        raise BoundaryLeakageError(
            f"shift by {theta} pushes {100 * (1 - after / before):.2f}% of the "
            f"signal energy outside the grid"
        )
    return out


def _fourier_shift(values: np.ndarray, shift_samples: float) -> np.ndarray:
    n = values.shape[0]
    padded = np.zeros(2 * n)
    padded[:n] = values
    spec = np.fft.rfft(padded)
    k = np.arange(spec.shape[0])
    spec *= np.exp(-2j * np.pi * k * shift_samples / (2 * n))
    return np.fft.irfft(spec, 2 * n)[:n]


# ---------------------------------------------------------------------------
# Reference pulses


def gaussian_pulse(grid: SampleGrid, sigma: float, center: float = 0.0) -> SampledSignal:
    """Unit-L2 Gaussian pulse pi^(-1/4) sigma^(-1/2) exp(-(t-c)^2 / 2 sigma^2)."""
    if sigma <= 0:
        raise ConfigError("sigma must be positive")
    amp = np.pi ** (-0.25) / np.sqrt(sigma)

    def f(t: np.ndarray) -> np.ndarray:
        return amp * np.exp(-((t - center) ** 2) / (2.0 * sigma**2))

    return SampledSignal(grid, f(grid.times()), analytic=f)


def square_pulse(grid: SampleGrid, sigma: float, center: float = 0.0) -> SampledSignal:
    """Unit-L2 square pulse of height 1/sqrt(sigma) on [c - sigma/2, c + sigma/2]."""
    if sigma <= 0:
        raise ConfigError("sigma must be positive")
    amp = 1.0 / np.sqrt(sigma)

    def f(t: np.ndarray) -> np.ndarray:
        u = t - center
        return np.where((u >= -sigma / 2) & (u <= sigma / 2), amp, 0.0)

    return SampledSignal(grid, f(grid.times()), analytic=f)


def raised_cosine_pulse(
    grid: SampleGrid,
    beta0: float = 5.0 / 128.0,
    cycles: float = 5.0,
    phase: float = np.pi / 3.0,
) -> SampledSignal:
    """Modulated raised-cosine window: (1 + cos(pi t / beta0)) carrier on |t| <= beta0.

    The carrier frequency is 2*pi*cycles/beta0 (with the defaults, 2*pi*128).
    """
    if beta0 <= 0:
        raise ConfigError("beta0 must be positive")
    omega0 = 2.0 * np.pi * cycles / beta0

    def f(t: np.ndarray) -> np.ndarray:
        window = (1.0 + np.cos(np.pi * t / beta0)) * (np.abs(t) <= beta0)
        return window * np.cos(omega0 * t + phase)

    return SampledSignal(grid, f(grid.times()), analytic=f)


# ---------------------------------------------------------------------------
# Serialization: CSV (time,value) and JSON {t_start, spacing, count, values}


def signal_to_json_dict(s: SampledSignal) -> dict:
    return {
        "t_start": s.grid.t_start,
        "spacing": s.grid.spacing,
        "count": s.grid.count,
        "values": s.values.tolist(),
    }


def signal_from_json_dict(d: dict) -> SampledSignal:
    try:
        grid = SampleGrid(float(d["t_start"]), float(d["spacing"]), int(d["count"]))
        return SampledSignal(grid, np.asarray(d["values"], dtype=float))
    except KeyError as exc:
        raise ConfigError(f"signal record is missing field {exc}") from exc


def save_signal(s: SampledSignal, path: str) -> None:
    if str(path).endswith(".json"):
        with open(path, "w") as fh:
            json.dump(signal_to_json_dict(s), fh)
    else:
        t = s.times()
        with open(path, "w", newline="\n") as fh:
            fh.write("time,value\n")
            for i in range(s.grid.count):
                fh.write(f"{t[i]:.17g},{s.values[i]:.17g}\n")


def load_signal(path: str) -> SampledSignal:
    if str(path).endswith(".json"):
        with open(path) as fh:
            return signal_from_json_dict(json.load(fh))
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] < 2:
        raise ConfigError(f"{path}: expected two columns (time,value)")
    t, v = data[:, 0], data[:, 1]
    spacing = float(np.median(np.diff(t)))
    if spacing <= 0 or np.max(np.abs(np.diff(t) - spacing)) > 1e-9 * max(spacing, 1.0):
        raise ConfigError(f"{path}: time column is not a uniform grid")
    return SampledSignal(SampleGrid(float(t[0]), spacing, t.shape[0]), v)
