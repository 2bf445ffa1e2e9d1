import numpy as np

from app.core.schema import ArrayModel, BaseSchema


class LossBreakdown(BaseSchema):
    """Unweighted components of the acoustic objective plus the weighted total."""

    l1: float
    ssim: float
    duration: float
    total: float


class AlignerLossBreakdown(BaseSchema):
    ctc: float
    mae: float
    total: float


class AcousticGradients(ArrayModel):
    mel: np.ndarray
    log_duration: np.ndarray
