"""Critical exponents of the semilinear heat equation and the singular steady state.

The three thresholds below organize every other computation in the package:

    p_sg = N / (N - 2)                     (Serrin)
    p_S  = (N + 2) / (N - 2)               (Sobolev)
    p_JL = ((N-2)^2 - 4N + 8 sqrt(N-1)) / ((N-2)(N-10))   (Joseph-Lundgren)

each taken as +inf in the dimensions where the formula does not apply.
"""
import enum
import functools
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from src.config import config
from src.errors import DomainError, RegimeError


@functools.total_ordering
class ExtendedReal:
    """A positive real number or positive infinity.

    Infinity is a dedicated state (``value is None``) rather than ``float("inf")`` so that comparisons
    stay exact. Instances compare against plain numbers and against each other.
    """

    __slots__ = ("value",)

    def __init__(self, value: Optional[float] = None):
        if value is not None:
            value = float(value)
            if not math.isfinite(value) or value <= 0.0:
                raise DomainError(f"ExtendedReal must be finite and positive, got {value}")
        self.value = value

    @classmethod
    def infinity(cls) -> "ExtendedReal":
        return cls(None)

    @property
    def is_finite(self) -> bool:
        return self.value is not None

    def __float__(self) -> float:
        return math.inf if self.value is None else self.value

    @staticmethod
    def _key(other: Union["ExtendedReal", float, int]) -> float:
        if isinstance(other, ExtendedReal):
            return float(other)
        if isinstance(other, (int, float, np.floating, np.integer)):
            return float(other)
        return NotImplemented

    def __eq__(self, other) -> bool:
        key = self._key(other)
        if key is NotImplemented:
            return NotImplemented
        return float(self) == key

    def __lt__(self, other) -> bool:
        key = self._key(other)
        if key is NotImplemented:
            return NotImplemented
        return float(self) < key

    def __hash__(self) -> int:
        return hash(float(self))

    def __repr__(self) -> str:
        return "ExtendedReal(inf)" if self.value is None else f"ExtendedReal({self.value!r})"

    def to_json(self) -> Union[float, str]:
        return "inf" if self.value is None else self.value


@dataclass(frozen=True)
class ProblemParams:
    """Dimension ``N`` and exponent ``p`` of u_t = Δu + |u|^{p-1}u."""

    N: int
    p: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"dimension must be an integer >= 1, got N={self.N}")
        if not math.isfinite(self.p) or self.p <= 1.0:
            raise DomainError(f"exponent must be a real number > 1, got p={self.p}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "p", float(self.p))

    @property
    def self_similar_exponent(self) -> float:
        """m = 2/(p-1), the decay exponent of the singular steady state."""
        return 2.0 / (self.p - 1.0)


@dataclass(frozen=True)
class ExponentTable:
    N: int
    p_sg: ExtendedReal
    p_S: ExtendedReal
    p_JL: ExtendedReal

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "p_sg": self.p_sg.to_json(),
            "p_S": self.p_S.to_json(),
            "p_JL": self.p_JL.to_json(),
        }


class Regime(str, enum.Enum):
    BELOW_SERRIN = "below_serrin"
    SERRIN_TO_SOBOLEV = "serrin_to_sobolev"
    CRITICAL = "critical"
    SOBOLEV_TO_JL = "sobolev_to_jl"
    AT_OR_ABOVE_JL = "at_or_above_jl"


def _check_dimension(N: int) -> None:
    if int(N) != N or N < 1:
        raise DomainError(f"dimension must be an integer >= 1, got N={N}")


def serrin_exponent(N: int) -> ExtendedReal:
    _check_dimension(N)
    if N <= 2:
        return ExtendedReal.infinity()
    return ExtendedReal(N / (N - 2))


def sobolev_exponent(N: int) -> ExtendedReal:
    _check_dimension(N)
    if N <= 2:
        return ExtendedReal.infinity()
    return ExtendedReal((N + 2) / (N - 2))


def joseph_lundgren_exponent(N: int) -> ExtendedReal:
    _check_dimension(N)
    if N <= 10:
        return ExtendedReal.infinity()
    numerator = (N - 2) ** 2 - 4 * N + 8 * math.sqrt(N - 1)
    return ExtendedReal(numerator / ((N - 2) * (N - 10)))


def exponent_table(N: int) -> ExponentTable:
    return ExponentTable(
        N=N,
        p_sg=serrin_exponent(N),
        p_S=sobolev_exponent(N),
        p_JL=joseph_lundgren_exponent(N),
    )


def is_critical(params: ProblemParams, rel_tol: Optional[float] = None) -> bool:
    """Whether p equals the Sobolev exponent up to a relative tolerance.

    Exponents entered as decimals (e.g. ``7/3`` typed as ``2.3333333333333``) are routed to the
    critical code paths this way. Defaults to ``config.exponents.critical_rel_tol``.
    """
    if rel_tol is None:
        rel_tol = config.exponents.critical_rel_tol
    p_S = sobolev_exponent(params.N)
    if not p_S.is_finite:
        return False
    return abs(params.p - p_S.value) <= rel_tol * p_S.value


def classify_regime(params: ProblemParams, rel_tol: Optional[float] = None) -> Regime:
    table = exponent_table(params.N)
    if is_critical(params, rel_tol):
        return Regime.CRITICAL
    if params.p <= table.p_sg:
        return Regime.BELOW_SERRIN
    if params.p < table.p_S:
        return Regime.SERRIN_TO_SOBOLEV
    if params.p < table.p_JL:
        return Regime.SOBOLEV_TO_JL
    return Regime.AT_OR_ABOVE_JL


def singular_amplitude(params: ProblemParams) -> float:
    """L with L^{p-1} = m (N - 2 - m), m = 2/(p-1).

    Raises:
        RegimeError: for p <= p_sg(N), where no singular steady state exists.
    """
    m = params.self_similar_exponent
    inner = m * (params.N - 2 - m)
    if params.p <= serrin_exponent(params.N) or inner <= 0.0:
        raise RegimeError(
            f"no singular steady state for N={params.N}, p={params.p}: p must exceed the Serrin exponent"
        )
    return inner ** (1.0 / (params.p - 1.0))


def phi_infinity(params: ProblemParams, r):
    """The singular steady state L r^{-2/(p-1)}; accepts scalars or arrays."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0.0):
        raise DomainError("phi_infinity is singular at r = 0; radii must be positive")
    value = singular_amplitude(params) * r_arr ** (-params.self_similar_exponent)
    return float(value) if np.ndim(value) == 0 else value


def phi_infinity_derivative(params: ProblemParams, r):
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0.0):
        raise DomainError("phi_infinity is singular at r = 0; radii must be positive")
    m = params.self_similar_exponent
    value = -m * singular_amplitude(params) * r_arr ** (-m - 1.0)
    return float(value) if np.ndim(value) == 0 else value
