"""Synthetic detector traces with a prescribed noise PSD.

Traces are generated by frequency-domain shaping: independent complex
Gaussian Fourier bins scaled by the square root of the two-sided density
times the bin width, Hermitian-symmetrized and inverse-transformed.
Tones are added as deterministic cosines (seed-derived phase, frequency
snapped to the FFT grid) whose trace variance equals their two-sided
band power ``2 * amplitude``.  Also provides Welch spectra, anti-aliased
decimation, and disjoint-window variance estimates.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import signal as _sig

from .errors import ValidationError
from .psd_model import eval_psd

__all__ = [
    "Trace",
    "PsdEstimate",
    "synthesize",
    "welch_psd",
    "decimate",
    "windowed_variance",
    "write_trace",
    "read_trace",
    "trace_from_csv",
]

_MAGIC = b"NCTRACE1"


@dataclass(frozen=True)
class Trace:
    """Finite sampled detector record.

    ``switches`` records the calibration state (local oscillator and
    signal path on/off); ``warnings`` carries synthesis caveats such as
    low-frequency truncation of diverging power laws.
    """

    samples: np.ndarray
    fs: float
    switches: dict = field(default_factory=lambda: {"lo": False, "signal": False})
    seed: int | None = None
    label: str = ""
    warnings: tuple = ()

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64)
        if x.ndim != 1 or x.size < 2:
            raise ValidationError("a trace needs at least two samples")
        if not np.all(np.isfinite(x)):
            raise ValidationError("trace samples must be finite")
        if not (self.fs > 0 and np.isfinite(self.fs)):
            raise ValidationError(f"fs must be positive, got {self.fs}")
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "warnings", tuple(self.warnings))

    @property
    def n(self):
        return self.samples.size

    @property
    def duration(self):
        return self.n / self.fs

    def variance(self, ddof=0):
        return float(np.var(self.samples, ddof=ddof))


@dataclass(frozen=True)
class PsdEstimate:
    """Two-sided spectral density estimate on a non-negative grid."""

    frequencies: np.ndarray
    densities: np.ndarray
    fs: float
    n_segments: int
    trace_duration: float


def synthesize(model, fs, n, seed, label="", switches=None):
    """Gaussian trace of length ``n`` at rate ``fs`` matching ``model``.

    Deterministic for fixed (model, fs, n, seed).  The DC bin is zeroed;
    spectral content below fs/n cannot be represented, which truncates
    diverging alpha < 0 power laws (flagged in ``Trace.warnings``).
    """
    n = int(n)
    if n < 2:
        raise ValidationError(f"n must be >= 2, got {n}")
    if fs <= 0:
        raise ValidationError(f"fs must be positive, got {fs}")
    rng = np.random.default_rng(seed)
    half = n // 2
    warnings = []

    freqs = np.arange(1, half + 1) * (fs / n)
    dens = eval_psd(model, freqs) if (any(model.power_law.coefficients()) or model.lorentzians) else np.zeros(half)
    scale = np.sqrt(n * fs * dens)
    re = rng.standard_normal(half)
    im = rng.standard_normal(half)
    spec = np.zeros(half + 1, dtype=complex)
    spec[1:] = (re + 1j * im) * (scale / np.sqrt(2.0))
    if n % 2 == 0:
        # real Nyquist bin with the full two-sided bin variance
        spec[half] = re[half - 1] * scale[half - 1]
    x = np.fft.irfft(spec, n)

    if model.power_law.h_m2 or model.power_law.h_m1:
        warnings.append(f"alpha<0 spectral content truncated below {fs / n:.3e} Hz")

    for tone in model.tones:
        k = int(round(tone.f_peak * n / fs))
        if k <= 0 or k >= half or tone.amplitude == 0.0:
            if tone.amplitude > 0.0:
                warnings.append(f"tone at {tone.f_peak:.3e} Hz outside representable band, skipped")
            phase = rng.uniform(0.0, 2.0 * np.pi)  # keep the stream position stable
            continue
        phase = rng.uniform(0.0, 2.0 * np.pi)
        amp = 2.0 * np.sqrt(tone.amplitude)
        x = x + amp * np.cos(2.0 * np.pi * k / n * np.arange(n) + phase)

    return Trace(
        samples=x,
        fs=float(fs),
        switches=dict(switches) if switches else {"lo": False, "signal": False},
        seed=None if seed is None else int(seed),
        label=label or model.label,
        warnings=tuple(warnings),
    )


def welch_psd(trace, segment=4096, overlap=0.5):
    """Averaged-periodogram density estimate (two-sided convention)."""
    segment = int(segment)
    if segment < 16:
        raise ValidationError(f"segment must be >= 16, got {segment}")
    if segment > trace.n:
        raise ValidationError(f"segment {segment} exceeds trace length {trace.n}")
    if not 0.0 <= overlap < 1.0:
        raise ValidationError(f"overlap must be in [0, 1), got {overlap}")
    noverlap = int(segment * overlap)
    freqs, dens = _sig.welch(
        trace.samples,
        fs=trace.fs,
        window="hann",
        nperseg=segment,
        noverlap=noverlap,
        detrend="constant",
        return_onesided=False,
        scaling="density",
    )
    keep = freqs >= 0
    order = np.argsort(freqs[keep])
    f = freqs[keep][order]
    d = dens[keep][order]
    step = segment - noverlap
    n_seg = 1 + (trace.n - segment) // step
    return PsdEstimate(
        frequencies=f,
        densities=d,
        fs=trace.fs,
        n_segments=int(n_seg),
        trace_duration=trace.duration,
    )


def _design_lowpass(k, taps):
    # cutoff at the new Nyquist: the amplitude-symmetric roll-off folds
    # aliased tail power back near the band edge, keeping broadband
    # variance ratios close to 1/k
    return _sig.firwin(taps, 1.0 / k, window="blackman")


def decimate(trace, k):
    """Anti-aliased decimation by an integer factor ``k``.

    Blackman-windowed sinc low-pass at the new Nyquist followed by
    k-fold downsampling; edge samples without full filter support are
    dropped.  ``k = 1`` returns the input unchanged.
    """
    k = int(k)
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if k == 1:
        return trace
    if k > trace.n // 8:
        raise ValidationError(f"decimation factor {k} too large for trace of {trace.n} samples")
    taps = 32 * k + 1
    if taps > trace.n:
        raise ValidationError(f"anti-alias filter ({taps} taps) does not fit in {trace.n} samples")
    h = _design_lowpass(k, taps)
    y = _sig.upfirdn(h, trace.samples, up=1, down=k)
    # keep only outputs whose filter window lies fully inside the input
    first = -(-(taps - 1) // k)
    last = (trace.n - 1) // k
    y = y[first : last + 1]
    if y.size < 2:
        raise ValidationError("decimated trace would have fewer than 2 samples")
    return replace(
        trace,
        samples=y,
        fs=trace.fs / k,
        warnings=trace.warnings + (f"decimated by {k}",),
    )


def windowed_variance(trace, tau):
    """Mean and standard error of disjoint-window sample variances.

    Windows of ``round(tau * fs)`` samples; each window's own mean is
    removed and the biased (1/m) variance taken, matching the band-limited
    character of a gated variance.  The standard error is the across-window
    standard deviation over sqrt(number of windows).
    """
    m = int(round(tau * trace.fs))
    if m < 2:
        raise ValidationError(f"tau*fs = {tau * trace.fs:.2f} must be >= 2")
    n_win = trace.n // m
    if n_win < 1:
        raise ValidationError(f"no full window of {m} samples fits in {trace.n}")
    x = trace.samples[: n_win * m].reshape(n_win, m)
    per_window = x.var(axis=1, ddof=0)
    mean = float(per_window.mean())
    se = float(per_window.std(ddof=1) / np.sqrt(n_win)) if n_win > 1 else float("nan")
    return mean, se


def write_trace(trace, path):
    """Serialize to the .nct container (JSON header + f64le samples)."""
    header = {
        "fs": trace.fs,
        "n": trace.n,
        "dtype": "f64le",
        "switches": {"lo": bool(trace.switches.get("lo", False)), "signal": bool(trace.switches.get("signal", False))},
        "seed": trace.seed,
        "label": trace.label,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(trace.samples.astype("<f8").tobytes())


def read_trace(path):
    """Load a .nct trace file."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _MAGIC:
            raise ValidationError(f"{path}: not a trace file (bad magic {magic!r})")
        (hlen,) = struct.unpack("<I", fh.read(4))
        try:
            header = json.loads(fh.read(hlen).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ValidationError(f"{path}: corrupt header ({exc})") from exc
        if header.get("dtype") != "f64le":
            raise ValidationError(f"{path}: unsupported dtype {header.get('dtype')!r}")
        n = int(header["n"])
        data = np.frombuffer(fh.read(n * 8), dtype="<f8")
        if data.size != n:
            raise ValidationError(f"{path}: expected {n} samples, found {data.size}")
    return Trace(
        samples=data.copy(),
        fs=float(header["fs"]),
        switches=header.get("switches", {"lo": False, "signal": False}),
        seed=header.get("seed"),
        label=header.get("label", ""),
    )


def trace_from_csv(path, fs, label=""):
    """Read one sample per line; the rate must be supplied."""
    data = np.loadtxt(path, dtype=float, ndmin=1)
    return Trace(samples=data, fs=float(fs), label=label)
