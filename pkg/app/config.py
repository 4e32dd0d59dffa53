"""Application configuration loaded from environment variables."""

from pathlib import Path

from pydantic_settings import BaseSettings

# .env at the project root
_env_file = str(Path(__file__).resolve().parent.parent / ".env")


class Settings(BaseSettings):
    # Logging
    log_level: str = "INFO"
    log_format: str = "%(asctime)s %(levelname)s %(name)s: %(message)s"

    # Randomness and parallelism defaults for the CLI
    default_seed: int = 0
    default_threads: int = 1

    # Gram matrix jitter: jitter_scale * eta^2, escalated x10 up to jitter_retries times
    jitter_scale: float = 1e-8
    jitter_retries: int = 3

    # Sampler progress logging interval (sweeps)
    progress_every: int = 1000

    # Output formatting
    csv_float_format: str = "%.10g"

    model_config = {
        "env_file": _env_file,
        "env_file_encoding": "utf-8",
        "env_prefix": "SGDP_",
        "extra": "ignore",
    }

    def default_jitter(self, eta: float) -> float:
        """Diagonal inflation for a Gram matrix with scale ``eta``."""
        return self.jitter_scale * eta * eta


settings = Settings()
