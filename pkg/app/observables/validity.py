"""
Two-mode validity criteria

The two-mode truncation holds while the interaction energy and the thermal energy are small
compared to the trap phonon energy:

    N << a0 / a_s,        T << 0.94 N^{1/3} hbar omega0 / k_B
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
from scipy import constants

THERMAL_PREFACTOR = 0.94


@dataclass(frozen=True)
class ValidityReport:
    n_bosons: int
    n_bound: float
    temperature_bound: float  # kelvin
    temperature: Optional[float] = None

    @property
    def n_margin(self) -> float:
        """N relative to its bound; the criterion needs this well below 1"""
        return self.n_bosons / self.n_bound if np.isfinite(self.n_bound) else 0.0

    @property
    def temperature_margin(self) -> Optional[float]:
        if self.temperature is None:
            return None
        return self.temperature / self.temperature_bound

    @property
    def n_unbounded(self) -> bool:
        return not np.isfinite(self.n_bound)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "n_bosons": self.n_bosons,
            "n_bound": None if self.n_unbounded else self.n_bound,
            "n_unbounded": self.n_unbounded,
            "n_margin": self.n_margin,
            "temperature_bound_nK": self.temperature_bound * 1e9,
            "temperature_nK": None if self.temperature is None else self.temperature * 1e9,
            "temperature_margin": self.temperature_margin,
        }


def validity_check(
    n_bosons: int,
    temperature: Optional[float],
    oscillator_length: float,
    scattering_length: float,
    omega0: float,
) -> ValidityReport:
    """SI inputs: kelvin, metres, metres, rad/s"""
    n_bound = oscillator_length / scattering_length if scattering_length > 0 else float("inf")
    phonon = constants.hbar * omega0 / constants.k
    temperature_bound = THERMAL_PREFACTOR * n_bosons ** (1.0 / 3.0) * phonon
    return ValidityReport(
        n_bosons=n_bosons,
        n_bound=n_bound,
        temperature_bound=temperature_bound,
        temperature=temperature,
    )
