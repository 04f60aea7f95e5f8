"""
Configuration for Rabi Semiclassical Lab
"""

import os
from pydantic_settings import BaseSettings, SettingsConfigDict
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


class Settings(BaseSettings):
    """Application configuration settings"""

    # Paths
    log_dir: str = os.getenv("RABI_LOG_DIR", "logs")
    output_dir: str = os.getenv("RABI_OUTPUT_DIR", "runs")

    # Application Settings
    log_level: str = os.getenv("RABI_LOG_LEVEL", "INFO")
    default_seed: int = int(os.getenv("RABI_DEFAULT_SEED", "20240601"))
    tolerance_scale: float = 1.0  # multiplies every check tolerance
    max_workers: int = int(os.getenv("RABI_MAX_WORKERS", "4"))

    # Series control
    series_max_terms: int = 500
    series_tail_tolerance: float = 1e-17
    cutoff_tail_tolerance: float = 1e-12  # dropped Bessel harmonics
    bessel_max_argument: float = 1e5

    # Identity-check sampling
    oracle_samples: int = int(os.getenv("RABI_ORACLE_SAMPLES", "12"))

    model_config = SettingsConfigDict(
        env_prefix="RABI_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",  # Ignore extra fields from .env
    )


# Global settings instance
settings = Settings()
