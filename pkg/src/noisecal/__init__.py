"""noisecal: coherent-receiver noise spectra, time-gated variance,
shot-noise calibration schemes, and CV-QKD parameter estimation."""

from .errors import (
    AssumptionViolation,
    EstimationCollapse,
    NumericError,
    ResolutionError,
    ValidationError,
)
from .psd_model import (
    DiracTone,
    LorentzianLine,
    NoisePsdModel,
    PowerLawSet,
    component_power,
    eval_psd,
    load_model,
    model_from_dict,
    model_to_dict,
    save_model,
)
from .tgv_engine import (
    GateConfig,
    GatedSpectrum,
    TgvCurve,
    gated_psd_analytic,
    gated_psd_numeric,
    tgv,
    tgv_breakdown,
    tgv_curve,
)

__version__ = "0.1.0"
