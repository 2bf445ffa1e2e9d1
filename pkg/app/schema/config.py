from pydantic import BaseModel, ConfigDict, Field, model_validator

from config import settings


class FeatureConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    target_rate: int = Field(settings.FEATURE.target_rate, gt=0)
    n_fft: int = Field(settings.FEATURE.n_fft, gt=0)
    win_length: int = Field(settings.FEATURE.win_length, gt=0)
    hop_length: int = Field(settings.FEATURE.hop_length, gt=0)
    n_mels: int = Field(settings.FEATURE.n_mels, gt=0)
    fmin: float = Field(settings.FEATURE.fmin, ge=0)
    fmax: float = Field(settings.FEATURE.fmax, gt=0)
    log_floor: float = Field(settings.FEATURE.log_floor, gt=0)
    norm_lo: float = settings.FEATURE.norm_lo
    norm_hi: float = settings.FEATURE.norm_hi
    trim_threshold_db: float = Field(settings.FEATURE.trim_threshold_db, lt=0)

    @model_validator(mode="after")
    def check_consistency(self) -> "FeatureConfig":
        if self.win_length > self.n_fft:
            raise ValueError("win_length must not exceed n_fft")
        if self.hop_length > self.win_length:
            raise ValueError("hop_length must not exceed win_length")
        if self.fmax > self.target_rate / 2:
            raise ValueError("fmax must not exceed target_rate / 2")
        if self.fmin >= self.fmax:
            raise ValueError("fmin must be below fmax")
        if self.norm_lo >= self.norm_hi:
            raise ValueError("norm_lo must be below norm_hi")
        return self


class LossConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    lambda_l1: float = Field(settings.LOSS.lambda_l1, ge=0)
    lambda_ssim: float = Field(settings.LOSS.lambda_ssim, ge=0)
    lambda_dur: float = Field(settings.LOSS.lambda_dur, ge=0)
    ssim_window: int = Field(settings.LOSS.ssim_window, gt=0)
    ssim_sigma: float = Field(settings.LOSS.ssim_sigma, gt=0)
    dynamic_range: float = Field(settings.LOSS.dynamic_range, gt=0)
    huber_delta: float = Field(settings.LOSS.huber_delta, gt=0)
    k1: float = Field(0.01, gt=0)
    k2: float = Field(0.03, gt=0)

    @property
    def c1(self) -> float:
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.dynamic_range) ** 2


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    feature: FeatureConfig = FeatureConfig()
    loss: LossConfig = LossConfig()
    workers: int = Field(settings.WORKERS, ge=1)
