"""
Configuration for the TTW toolkit.
"""
import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


def _flag(name: str, default: str) -> bool:
    return os.getenv(name, default).strip().lower() in ("1", "true", "yes", "on")


class SpectrumConfig:
    """
    Conventions and quadrature settings for eigenstates.

    The defaults are the conventions the `validate` oracle selects.
    """
    CONVENTION: str = os.getenv("TTW_SPECTRUM_CONVENTION", "Resolved")
    JACOBI_ARGUMENT: str = os.getenv("TTW_JACOBI_ARGUMENT", "cos2T")
    N_CONSTANT: str = os.getenv("TTW_N_CONSTANT", "symmetric")
    QUADRATURE_ORDER: int = int(os.getenv("TTW_QUADRATURE_ORDER", "128"))
    QUADRATURE_TOL: float = float(os.getenv("TTW_QUADRATURE_TOL", "1e-8"))
    DEGENERACY_RTOL: float = float(os.getenv("TTW_DEGENERACY_RTOL", "1e-12"))


class SeriesConfig:
    """
    Coherent-series truncation defaults.
    """
    L1_MAX: int = int(os.getenv("TTW_SERIES_L1_MAX", "24"))
    NR_MAX: int = int(os.getenv("TTW_SERIES_NR_MAX", "48"))
    TAIL_TOL: float = float(os.getenv("TTW_SERIES_TAIL_TOL", "1e-8"))


class IntegratorConfig:
    """
    Classical integrator settings.
    """
    TOL: float = float(os.getenv("TTW_INTEGRATOR_TOL", "1e-10"))
    MAX_STEPS: int = int(os.getenv("TTW_INTEGRATOR_MAX_STEPS", "2000000"))
    PROJECT_INVARIANTS: bool = _flag("TTW_INTEGRATOR_PROJECT_INVARIANTS", "true")


class OracleConfig:
    """
    Finite-difference oracle and identity-checker settings.
    """
    ANGULAR_POINTS: int = int(os.getenv("TTW_ORACLE_ANGULAR_POINTS", "400"))
    RADIAL_POINTS: int = int(os.getenv("TTW_ORACLE_RADIAL_POINTS", "800"))
    REFINEMENT_LEVELS: int = int(os.getenv("TTW_ORACLE_REFINEMENT_LEVELS", "3"))
    MATCH_RTOL: float = float(os.getenv("TTW_ORACLE_MATCH_RTOL", "1e-3"))
    ARBITRATION_P_PHI: float = float(os.getenv("TTW_ORACLE_ARBITRATION_P_PHI", "0.5"))
    ARBITRATION_P_PSI: float = float(os.getenv("TTW_ORACLE_ARBITRATION_P_PSI", "1.5"))
    IDENTITY_L1_MAX: int = int(os.getenv("TTW_ORACLE_IDENTITY_L1_MAX", "30"))
    IDENTITY_TOL: float = float(os.getenv("TTW_ORACLE_IDENTITY_TOL", "1e-8"))


class LoggingConfig:
    """
    Logging configuration.
    """
    LEVEL: str = os.getenv("TTW_LOG_LEVEL", "INFO")


class Config:
    """
    Main configuration.
    """
    SPECTRUM: SpectrumConfig = SpectrumConfig()
    SERIES: SeriesConfig = SeriesConfig()
    INTEGRATOR: IntegratorConfig = IntegratorConfig()
    ORACLE: OracleConfig = OracleConfig()
    LOGGING: LoggingConfig = LoggingConfig()


# Create a singleton instance
config = Config()
