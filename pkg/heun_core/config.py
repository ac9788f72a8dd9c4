import os
import logging
from pydantic_settings import BaseSettings
from dotenv import load_dotenv
import mpmath

from .exceptions import PrecisionError

load_dotenv()

logger = logging.getLogger(__name__)


class ToolkitConfig(BaseSettings):
    """Configuration for the Heun operator toolkit"""

    # Floating outputs
    precision_bits: int = int(os.getenv("HEUN_PRECISION_BITS", "53"))

    # Artifacts
    output_dir: str = os.getenv("HEUN_OUTPUT_DIR", "results")
    log_level: str = os.getenv("HEUN_LOG_LEVEL", "INFO")

    # Sweeps
    max_workers: int = int(os.getenv("HEUN_MAX_WORKERS", "4"))

    # Chaos experiments
    approximant_max_depth: int = int(os.getenv("HEUN_APPROXIMANT_MAX_DEPTH", "400"))
    density_max_period: int = int(os.getenv("HEUN_DENSITY_MAX_PERIOD", "200"))
    periodic_rescale_target: float = float(os.getenv("HEUN_PERIODIC_RESCALE_TARGET", "0.5"))

    # Randomized sweeps
    random_seed: int = int(os.getenv("HEUN_RANDOM_SEED", "20140101"))
    bound_sample_count: int = int(os.getenv("HEUN_BOUND_SAMPLE_COUNT", "1000"))

    class Config:
        env_file = ".env"
        env_prefix = "HEUN_"
        extra = "ignore"


def apply_precision(bits: int) -> None:
    """Set the mpmath working precision used by every floating output"""
    if bits < 53:
        raise PrecisionError(f"precision_bits must be at least 53, got {bits}")
    if mpmath.mp.prec != bits:
        mpmath.mp.prec = bits
        logger.debug(f"Working precision set to {bits} bits")


# Global config instance
toolkit_config = ToolkitConfig()
apply_precision(toolkit_config.precision_bits)
