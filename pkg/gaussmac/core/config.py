from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # App Config
    APP_NAME: str = "Gaussian MAC Rate Limits"
    APP_VERSION: str = "1.0.0"
    LOG_LEVEL: str = "INFO"

    # Numerical tolerances
    PHYSICALITY_TOL: float = 1e-9
    UNPHYSICAL_TOL: float = 1e-6
    SYMMETRY_TOL: float = 1e-12
    NORMALIZATION_TOL: float = 1e-12
    G_ZERO_CUTOFF: float = 1e-15

    # Region evaluation
    MAX_SENDERS: int = 16
    DEFAULT_RAYS: int = 20
    GRADIENT_STEP: float = 1e-4

    # Simplex optimizer (ray maximization)
    OPTIMIZER_STARTS: int = 5
    OPTIMIZER_MAXITER: int = 200
    OPTIMIZER_RTOL: float = 1e-8

    # Energy allocation over unravelled memory channels
    ALLOCATION_MAX_SWEEPS: int = 50
    ALLOCATION_GRID_STEP: float = 0.25

    # Fock oracle
    FOCK_TAIL_THRESHOLD: float = 1e-8

    # Output
    CSV_SIGNIFICANT_DIGITS: int = 12
    MAX_WORKERS: int = 1

    model_config = SettingsConfigDict(
        env_file=".env",
        case_sensitive=True,
        # Ignore extra attributes from .env
        extra="ignore",
    )


settings = Settings()
