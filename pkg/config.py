from pydantic import BaseModel
from pydantic_settings import BaseSettings


class FeatureDefaults(BaseModel):
    target_rate: int = 22050
    n_fft: int = 1024
    win_length: int = 1024
    hop_length: int = 276
    n_mels: int = 100
    fmin: float = 0.0
    fmax: float = 11025.0
    log_floor: float = 1e-5
    norm_lo: float = 0.0
    norm_hi: float = 4.0
    trim_threshold_db: float = -40.0


class LossDefaults(BaseModel):
    lambda_l1: float = 1.0
    lambda_ssim: float = 1.0
    lambda_dur: float = 1.0
    ssim_window: int = 11
    ssim_sigma: float = 1.5
    dynamic_range: float = 4.0
    huber_delta: float = 1.0


class Settings(BaseSettings):
    LOG_LEVEL: str = "INFO"
    LOG_JSON: bool = False
    LOG_FILE: str = ""
    SENTRY_DSN: str = ""
    WORKERS: int = 1
    FEATURE: FeatureDefaults = FeatureDefaults()
    LOSS: LossDefaults = LossDefaults()

    class Config:
        env_file = ".env"
        env_prefix = "TTS_"
        env_nested_delimiter = "__"


settings = Settings()
