"""
Data models shared by the services and the CLI.
"""
import math
from enum import Enum
from fractions import Fraction
from typing import Annotated, Any, Iterator, List, Optional, Tuple

import numpy as np
from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    PlainSerializer,
    WithJsonSchema,
    field_validator,
    model_validator,
)

from common.utils import parse_rational


def _to_complex(value: Any) -> complex:
    if isinstance(value, complex):
        return value
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, str):
        return complex(value.replace(" ", ""))
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if hasattr(value, "dtype"):
        return complex(value.item())
    raise ValueError(f"cannot read a complex number from {value!r}")


def _rational_to_str(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


Rational = Annotated[
    Fraction,
    BeforeValidator(parse_rational),
    PlainSerializer(_rational_to_str, return_type=str),
    WithJsonSchema({"type": "string", "pattern": r"^\d+/\d+$"}),
]

ComplexValue = Annotated[
    complex,
    BeforeValidator(_to_complex),
    PlainSerializer(lambda z: [z.real, z.imag], return_type=list),
    WithJsonSchema({"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}),
]


class SpectrumConvention(str, Enum):
    """
    Which closed-form energy formula to evaluate.
    """
    PAPER_EQ_E = "PaperEqE"
    RESOLVED = "Resolved"


class JacobiArgument(str, Enum):
    """
    Argument fed to the angular Jacobi polynomial.
    """
    COS_2T = "cos2T"
    TWO_SIN2_MINUS_1 = "2sin2m1"


class NormalizationConstant(str, Enum):
    """
    Denominator convention of the Bessel-product expansion coefficient.
    """
    SQUARED = "squared"
    SYMMETRIC = "symmetric"


class PotentialParams(BaseModel):
    """
    Physical constants of the potential: trap frequency, barrier strengths and k.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True, extra="forbid")

    omega: float = Field(default=1.0, gt=0, allow_inf_nan=False, description="Angular frequency of the trap")
    alpha: float = Field(default=0.0, ge=0, allow_inf_nan=False, description="Barrier strength paired with sin(k theta)")
    beta: float = Field(default=0.0, ge=0, allow_inf_nan=False, description="Barrier strength paired with cos(k theta)")
    k: Rational = Field(default=Fraction(1), description="Exact rational k = p/q")

    @field_validator("k")
    @classmethod
    def _positive_k(cls, value: Fraction) -> Fraction:
        if value <= 0:
            raise ValueError("k must be a positive rational p/q")
        return value

    @property
    def p_phi(self) -> float:
        return math.sqrt(self.alpha + 0.25)

    @property
    def p_psi(self) -> float:
        return math.sqrt(self.beta + 0.25)

    @property
    def k_float(self) -> float:
        return float(self.k)

    @property
    def theta_max(self) -> float:
        """Upper edge of the wedge, pi/(2k)."""
        return math.pi / (2.0 * float(self.k))


class QuantumNumbers(BaseModel):
    """
    Radial node count and angular index of an eigenstate.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_r: int = Field(default=0, ge=0, description="Radial node count")
    l1: int = Field(default=0, ge=0, description="Angular index")


class EnergyLevel(BaseModel):
    """
    One eigenvalue with its quantum numbers.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    qn: QuantumNumbers
    energy: float = Field(..., description="Energy as a double")
    energy_exact: Optional[Rational] = Field(default=None, description="Exact energy when the exponents are rational")


class DegeneracyClass(BaseModel):
    """
    A maximal set of levels sharing one energy.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    class_id: int = Field(..., ge=0, description="Index in ascending energy order")
    energy: float
    energy_exact: Optional[Rational] = None
    levels: List[EnergyLevel] = Field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.levels)


class OscillatorAmplitudes(BaseModel):
    """
    Lowering-operator eigenvalues of the four oscillators at t = 0.

    kappa1, kappa2 belong to the u-plane (paired with sin and alpha),
    lambda1, lambda2 to the v-plane (paired with cos and beta).
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True, extra="forbid")

    kappa1: ComplexValue = 0j
    kappa2: ComplexValue = 0j
    lambda1: ComplexValue = 0j
    lambda2: ComplexValue = 0j
    omega: float = Field(default=1.0, gt=0, allow_inf_nan=False)

    def as_array(self) -> np.ndarray:
        return np.array([self.kappa1, self.kappa2, self.lambda1, self.lambda2], dtype=complex)


class ConservedCharges(BaseModel):
    """
    Charges carried by a set of amplitudes.

    K0 and Lambda0 are None when their defining ratio has a vanishing denominator.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    L12: float = Field(..., description="-Im(kappa1 conj(kappa2))")
    L34: float = Field(..., description="-Im(lambda1 conj(lambda2))")
    energy_over_omega: float = Field(..., description="Half the sum of squared moduli")
    kappa_sq: ComplexValue = Field(..., description="kappa1^2 + kappa2^2 + lambda1^2 + lambda2^2")
    kappa_plane_sq: ComplexValue = Field(..., description="kappa1^2 + kappa2^2")
    lambda_plane_sq: ComplexValue = Field(..., description="lambda1^2 + lambda2^2")
    delta: float = Field(..., description="Phase delta from cot(2 delta)")
    K0: Optional[ComplexValue] = None
    Lambda0: Optional[ComplexValue] = None


class SeriesTruncation(BaseModel):
    """
    Caps and tail tolerance for the coherent double series.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    l1_max: int = Field(default=24, ge=1)
    nr_max: int = Field(default=48, ge=1)
    tail_tol: float = Field(default=1e-8, gt=0)


class ClassicalState(BaseModel):
    """
    Phase-space point (r, theta, p_r, p_theta).
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    r: float = Field(..., gt=0, allow_inf_nan=False)
    theta: float = Field(..., allow_inf_nan=False)
    p_r: float = Field(default=0.0, allow_inf_nan=False)
    p_theta: float = Field(default=0.0, allow_inf_nan=False)

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.theta, self.p_r, self.p_theta], dtype=float)

    @classmethod
    def from_array(cls, values: np.ndarray) -> "ClassicalState":
        return cls(r=float(values[0]), theta=float(values[1]), p_r=float(values[2]), p_theta=float(values[3]))


class Trajectory(BaseModel):
    """
    Sampled classical trajectory with per-sample energy and angular charge.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    times: np.ndarray
    states: np.ndarray = Field(..., description="Rows of (r, theta, p_r, p_theta)")
    energies: np.ndarray
    angular_charges: np.ndarray
    energy0: float
    angular_charge0: float

    @model_validator(mode="after")
    def _check_shapes(self) -> "Trajectory":
        n = len(self.times)
        if self.states.shape != (n, 4) or len(self.energies) != n or len(self.angular_charges) != n:
            raise ValueError("trajectory arrays have inconsistent lengths")
        if n > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("sample times must be strictly increasing")
        return self

    def samples(self) -> Iterator[Tuple[float, ClassicalState]]:
        for t, row in zip(self.times, self.states):
            yield float(t), ClassicalState.from_array(row)

    @property
    def r2(self) -> np.ndarray:
        return self.states[:, 0] ** 2

    def energy_drift(self) -> float:
        return float(np.max(np.abs(self.energies - self.energy0)) / abs(self.energy0))

    def angular_charge_drift(self) -> float:
        scale = abs(self.angular_charge0) if self.angular_charge0 != 0 else abs(self.energy0)
        return float(np.max(np.abs(self.angular_charges - self.angular_charge0)) / scale)


class ClosureReport(BaseModel):
    """
    Result of a closure search.
    """
    closure_time: Optional[float] = Field(default=None, description="Smallest return time, None when no closure")
    residual: Optional[float] = Field(default=None, description="Normalized distance at the reported return")
    best_residual: float = Field(..., description="Smallest distance seen at any section return")
    crossings: int = Field(..., ge=0, description="Section returns examined")
    radial_period: float


class GridSpec(BaseModel):
    """
    Uniform grid for the finite-difference oracle.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_points: int = Field(default=400, ge=64)
    domain: Tuple[float, float] = Field(default=(0.0, math.pi / 2))
    refinement_levels: int = Field(default=3, ge=2)

    @field_validator("domain")
    @classmethod
    def _ordered(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        lo, hi = value
        if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
            raise ValueError("grid domain must satisfy lo < hi")
        return value


class SpectrumOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")

    e_max: float = Field(default=20.0, allow_inf_nan=False)
    convention: Optional[SpectrumConvention] = None


class EigenstateOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_r: int = Field(default=0, ge=0)
    l1: int = Field(default=0, ge=0)
    r_max: Optional[float] = Field(default=None, gt=0)
    n_r_points: int = Field(default=101, ge=3)
    n_theta_points: int = Field(default=61, ge=3)


class CoherentOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")

    energy: float = Field(default=8.0, gt=0, description="Target energy; energy_over_omega = energy/omega")
    split: float = Field(default=0.5, gt=0, lt=1, description="Share of the energy carried by the u-plane")
    phase_u: float = 0.0
    phase_v: float = 0.0
    t_end: Optional[float] = Field(default=None, ge=0)
    n_times: int = Field(default=65, ge=1)
    l1_max: Optional[int] = Field(default=None, ge=1)
    nr_max: Optional[int] = Field(default=None, ge=1)
    tail_tol: Optional[float] = Field(default=None, gt=0)
    snapshots: int = Field(default=0, ge=0)
    snapshot_points: int = Field(default=41, ge=3)


class ClassicalOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")

    r0: float = Field(default=1.0, gt=0)
    theta0: Optional[float] = None
    p_r0: float = 0.5
    p_theta0: float = 0.3
    periods: float = Field(default=2.0, gt=0, description="Radial periods to sample")
    n_samples: int = Field(default=401, ge=2)
    tol: Optional[float] = Field(default=None, ge=1e-12, le=1e-6)
    max_radial_periods: int = Field(default=40, ge=1)
    closure_tol: float = Field(default=1e-6, gt=0)


class ValidateOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")

    l1_max: int = Field(default=2, ge=0)
    n_levels: int = Field(default=5, ge=1)
    angular_levels: int = Field(default=5, ge=1)
    p_phi: Optional[float] = Field(default=None, ge=0.5)
    p_psi: Optional[float] = Field(default=None, ge=0.5)
    identity_pairs: List[Tuple[float, float]] = Field(default_factory=lambda: [(0.5, 1.0), (1.5, 2.0), (2.0, 4.0)])
    identity_l1_max: Optional[int] = Field(default=None, ge=1, le=40)
    angular_points: Optional[int] = Field(default=None, ge=64)
    radial_points: Optional[int] = Field(default=None, ge=64)
    refinement_levels: Optional[int] = Field(default=None, ge=2)


class RunConfig(BaseModel):
    """
    Everything a CLI run depends on. Serializes to and from the --config JSON file.
    """
    model_config = ConfigDict(extra="forbid")

    params: PotentialParams = Field(default_factory=PotentialParams)
    out: str = Field(default="out", description="Output directory")
    spectrum: SpectrumOptions = Field(default_factory=SpectrumOptions)
    eigenstate: EigenstateOptions = Field(default_factory=EigenstateOptions)
    coherent: CoherentOptions = Field(default_factory=CoherentOptions)
    classical: ClassicalOptions = Field(default_factory=ClassicalOptions)
    validation: ValidateOptions = Field(default_factory=ValidateOptions)
