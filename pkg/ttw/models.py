"""
Report models produced by the services.
"""
from typing import Dict, List, Optional

from pydantic import BaseModel, Field

# Re-export common models for use in other modules
from common.models import (  # noqa: F401
    ClassicalState,
    ClosureReport,
    ComplexValue,
    ConservedCharges,
    DegeneracyClass,
    EnergyLevel,
    GridSpec,
    OscillatorAmplitudes,
    PotentialParams,
    QuantumNumbers,
    RunConfig,
    SeriesTruncation,
    Trajectory,
)

INCONCLUSIVE = "inconclusive"
INDISTINGUISHABLE = "indistinguishable-symmetric"


class EigenvalueComparison(BaseModel):
    """
    Oracle eigenvalue next to its closed form.
    """
    l1: int
    oracle: float
    analytic: float
    rel_error: float


class RadialLevel(BaseModel):
    n_r: int
    oracle: float
    PaperEqE: float
    Resolved: float


class RadialComparison(BaseModel):
    l1: int
    lam_k: float = Field(..., description="k times the square root of the oracle angular eigenvalue")
    levels: List[RadialLevel]


class SpectrumArbitration(BaseModel):
    """
    Finite-difference spectrum against both closed-form conventions.
    """
    angular: List[EigenvalueComparison]
    radial: List[RadialComparison]
    max_rel_error: Dict[str, float]
    winner: str


class IdentityCase(BaseModel):
    """
    One evaluation of the Bessel-product expansion at (x, y).
    """
    x: float
    y: float
    lhs: ComplexValue
    rhs_squared_constant: ComplexValue
    rhs_symmetric_constant: ComplexValue
    residual_squared: float
    residual_symmetric: float
    residual_doubled_argument: float = Field(..., description="Doubled-argument product against the unit-scale sum as written; can only reject the doubled convention")


class TailPoint(BaseModel):
    l1_max: int
    residual: float


class IdentityCheck(BaseModel):
    """
    Arbitration of the expansion constant over several argument pairs.
    """
    p_phi: float
    p_psi: float
    l1_max: int
    tolerance: float
    cases: List[IdentityCase]
    tail: List[TailPoint]
    winner: str
    argument_scale_winner: str


class JacobiArgumentCheck(BaseModel):
    """
    Angular ODE residuals of both Jacobi argument conventions.
    """
    p_phi: float
    p_psi: float
    l1_max: int
    residual_cos2T: float
    residual_2sin2m1: float
    winner: str


class ValidationReport(BaseModel):
    params: PotentialParams
    angular: List[EigenvalueComparison]
    radial: List[RadialComparison]
    identity: IdentityCheck
    jacobi_argument: JacobiArgumentCheck
    spectrum_max_rel_error: Dict[str, float]
    spectrum_convention_winner: str
    jacobi_argument_winner: str
    n_constant_winner: str
    argument_scale_winner: str

    def inconclusive(self) -> List[str]:
        names = {
            "spectrum_convention_winner": self.spectrum_convention_winner,
            "jacobi_argument_winner": self.jacobi_argument_winner,
            "n_constant_winner": self.n_constant_winner,
        }
        return [name for name, value in names.items() if value in (INCONCLUSIVE, INDISTINGUISHABLE)]


class CoherentEvaluation(BaseModel):
    """
    Coherent-state amplitude with the size of its last retained shells.
    """
    value: ComplexValue
    last_shell_magnitude: float
    partial_norm: float
    last_radial_magnitude: Optional[float] = None
