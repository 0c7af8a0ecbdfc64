"""Parametric noise power-spectral-density models.

A receiver noise spectrum is described as a sum of

* power-law terms ``h_alpha * |f|**alpha`` for ``alpha`` in -2..2,
* Dirac tones, stored as spectral weights (V^2), not densities,
* Lorentzian lines, parameterised by centre frequency, half-width and
  *peak density* (the line's height in V^2/Hz).

All densities follow the two-sided convention: the model is evaluated at
``|f|`` and every variance integral over a positive-frequency band carries
a factor two.  Densities are in V^2/Hz of raw detector output; conversion
to shot-noise units happens downstream.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ValidationError

__all__ = [
    "PowerLawSet",
    "DiracTone",
    "LorentzianLine",
    "NoisePsdModel",
    "eval_psd",
    "component_power",
    "load_model",
    "save_model",
]

ALPHAS = (-2, -1, 0, 1, 2)


def _require_finite(name, value, minimum=None, strict=False):
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    if minimum is not None:
        if strict and value <= minimum:
            raise ValidationError(f"{name} must be > {minimum}, got {value!r}")
        if not strict and value < minimum:
            raise ValidationError(f"{name} must be >= {minimum}, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class PowerLawSet:
    """Coefficients ``h_alpha`` of the power-law part, alpha in -2..2.

    Units: ``h_alpha`` carries V^2 * Hz^(-1-alpha) so that
    ``h_alpha * |f|**alpha`` is a density in V^2/Hz.
    """

    h_m2: float = 0.0
    h_m1: float = 0.0
    h0: float = 0.0
    h1: float = 0.0
    h2: float = 0.0

    def __post_init__(self):
        for name in ("h_m2", "h_m1", "h0", "h1", "h2"):
            object.__setattr__(self, name, _require_finite(name, getattr(self, name), 0.0))

    def coefficients(self):
        """Coefficients ordered by alpha = -2, -1, 0, 1, 2."""
        return (self.h_m2, self.h_m1, self.h0, self.h1, self.h2)

    def __add__(self, other):
        return PowerLawSet(*(a + b for a, b in zip(self.coefficients(), other.coefficients())))


@dataclass(frozen=True)
class DiracTone:
    """Fixed-frequency parasitic tone carrying spectral weight ``amplitude``.

    The weight is the one-sided delta mass in V^2; with the two-sided
    convention the tone contributes ``2 * amplitude`` to any band that
    contains ``f_peak``.
    """

    f_peak: float
    amplitude: float

    def __post_init__(self):
        object.__setattr__(self, "f_peak", _require_finite("f_peak", self.f_peak, 0.0, strict=True))
        object.__setattr__(self, "amplitude", _require_finite("amplitude", self.amplitude, 0.0))


@dataclass(frozen=True)
class LorentzianLine:
    """Lorentzian line, e.g. local-oscillator intensity noise.

    ``amplitude`` is the peak density in V^2/Hz (the line height at
    ``f_center``); ``gamma`` is the half-width at half-maximum in Hz.  The
    density at frequency f is ``amplitude * gamma**2 / ((|f|-f_center)**2
    + gamma**2)``, so the line integrates to ``pi * gamma * amplitude``
    over a full (untruncated) Lorentzian.
    """

    f_center: float
    amplitude: float
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "f_center", _require_finite("f_center", self.f_center, 0.0, strict=True))
        object.__setattr__(self, "amplitude", _require_finite("amplitude", self.amplitude, 0.0))
        object.__setattr__(self, "gamma", _require_finite("gamma", self.gamma, 0.0, strict=True))

    def density(self, f):
        x = np.abs(np.asarray(f, dtype=float))
        return self.amplitude * self.gamma**2 / ((x - self.f_center) ** 2 + self.gamma**2)


@dataclass(frozen=True)
class NoisePsdModel:
    """Immutable noise PSD model: power laws + tones + Lorentzian lines."""

    power_law: PowerLawSet = field(default_factory=PowerLawSet)
    tones: tuple = ()
    lorentzians: tuple = ()
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "tones", tuple(self.tones))
        object.__setattr__(self, "lorentzians", tuple(self.lorentzians))
        for t in self.tones:
            if not isinstance(t, DiracTone):
                raise ValidationError(f"tones must be DiracTone instances, got {type(t).__name__}")
        for l in self.lorentzians:
            if not isinstance(l, LorentzianLine):
                raise ValidationError(f"lorentzians must be LorentzianLine instances, got {type(l).__name__}")

    def with_label(self, label):
        return replace(self, label=label)

    def scaled_power_law(self, alpha, factor):
        """Copy of the model with one ``h_alpha`` multiplied by ``factor``."""
        if alpha not in ALPHAS:
            raise ValidationError(f"alpha must be one of {ALPHAS}, got {alpha}")
        names = {-2: "h_m2", -1: "h_m1", 0: "h0", 1: "h1", 2: "h2"}
        name = names[alpha]
        pl = replace(self.power_law, **{name: getattr(self.power_law, name) * factor})
        return replace(self, power_law=pl)

    def __add__(self, other):
        return NoisePsdModel(
            power_law=self.power_law + other.power_law,
            tones=self.tones + other.tones,
            lorentzians=self.lorentzians + other.lorentzians,
            label=self.label or other.label,
        )

    def evaluate(self, f):
        return eval_psd(self, f)


def eval_psd(model, f):
    """Continuous two-sided density of ``model`` at frequency ``f`` (Hz).

    Accepts scalars or arrays; negative frequencies fold to ``|f|``.
    Dirac tones are excluded (they carry weight, not density).

    Raises
    ------
    ValidationError
        If any requested frequency is exactly zero (the alpha < 0 power
        laws diverge there).
    """
    f = np.asarray(f, dtype=float)
    x = np.abs(f)
    if np.any(x == 0.0):
        raise ValidationError("eval_psd is undefined at f = 0")
    h = model.power_law
    out = h.h0 + x * (h.h1 + x * h.h2)
    if h.h_m1:
        out = out + h.h_m1 / x
    if h.h_m2:
        out = out + h.h_m2 / (x * x)
    for line in model.lorentzians:
        out = out + line.density(x)
    if np.isscalar(f) or f.ndim == 0:
        return float(out)
    return out


def _power_law_band_integral(pl, f_lo, f_hi):
    """Two-sided integral of the power-law density over [f_lo, f_hi]."""
    acc = 0.0
    if pl.h_m2:
        acc += pl.h_m2 * (1.0 / f_lo - 1.0 / f_hi)
    if pl.h_m1:
        acc += pl.h_m1 * math.log(f_hi / f_lo)
    acc += pl.h0 * (f_hi - f_lo)
    acc += pl.h1 * (f_hi**2 - f_lo**2) / 2.0
    acc += pl.h2 * (f_hi**3 - f_lo**3) / 3.0
    return 2.0 * acc


def component_power(part, f_lo, f_hi):
    """Two-sided variance contribution of one model component in a band.

    ``2 * integral(density, f_lo..f_hi)`` for continuous parts; a tone
    contributes ``2 * amplitude`` when ``f_lo < f_peak < f_hi`` and zero
    otherwise.
    """
    if not (0.0 < f_lo < f_hi):
        raise ValidationError(f"band must satisfy 0 < f_lo < f_hi, got [{f_lo}, {f_hi}]")
    if isinstance(part, DiracTone):
        return 2.0 * part.amplitude if f_lo < part.f_peak < f_hi else 0.0
    if isinstance(part, LorentzianLine):
        a = math.atan((f_hi - part.f_center) / part.gamma)
        b = math.atan((f_lo - part.f_center) / part.gamma)
        return 2.0 * part.amplitude * part.gamma * (a - b)
    if isinstance(part, PowerLawSet):
        return _power_law_band_integral(part, f_lo, f_hi)
    if isinstance(part, NoisePsdModel):
        total = _power_law_band_integral(part.power_law, f_lo, f_hi)
        for t in part.tones:
            total += component_power(t, f_lo, f_hi)
        for l in part.lorentzians:
            total += component_power(l, f_lo, f_hi)
        return total
    raise ValidationError(f"unsupported component type {type(part).__name__}")


def _get_number(mapping, key, context, default=None):
    if key not in mapping:
        if default is not None:
            return default
        raise ValidationError(f"missing field '{key}' in {context}")
    value = mapping[key]
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ValidationError(f"field '{key}' in {context} must be a number, got {value!r}")
    return float(value)


def model_from_dict(doc):
    """Build a model from the JSON configuration layout."""
    if not isinstance(doc, dict):
        raise ValidationError("model config must be a JSON object")
    pl_doc = doc.get("power_law", {}) or {}
    kwargs = {}
    for key in ("h_m2", "h_m1", "h0", "h1", "h2"):
        kwargs[key] = _get_number(pl_doc, key, "power_law", default=0.0)
    try:
        power_law = PowerLawSet(**kwargs)
        tones = tuple(
            DiracTone(
                f_peak=_get_number(t, "f", f"tones[{i}]"),
                amplitude=_get_number(t, "A", f"tones[{i}]"),
            )
            for i, t in enumerate(doc.get("tones", []) or [])
        )
        lorentzians = tuple(
            LorentzianLine(
                f_center=_get_number(l, "f0", f"lorentzians[{i}]"),
                amplitude=_get_number(l, "A", f"lorentzians[{i}]"),
                gamma=_get_number(l, "gamma", f"lorentzians[{i}]"),
            )
            for i, l in enumerate(doc.get("lorentzians", []) or [])
        )
    except TypeError as exc:
        raise ValidationError(str(exc)) from exc
    return NoisePsdModel(
        power_law=power_law,
        tones=tones,
        lorentzians=lorentzians,
        label=str(doc.get("label", "")),
    )


def model_to_dict(model):
    pl = model.power_law
    return {
        "label": model.label,
        "power_law": {"h_m2": pl.h_m2, "h_m1": pl.h_m1, "h0": pl.h0, "h1": pl.h1, "h2": pl.h2},
        "tones": [{"f": t.f_peak, "A": t.amplitude} for t in model.tones],
        "lorentzians": [{"f0": l.f_center, "A": l.amplitude, "gamma": l.gamma} for l in model.lorentzians],
    }


def load_model(path):
    """Load a model from a JSON config file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    return model_from_dict(doc)


def save_model(model, path):
    """Write a model as JSON; round trip through load_model is exact."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")
