"""Closed-form mean-field energies and dissipated heat for sudden quenches.

All quantities are per unit of J = N/2 and exact in the thermodynamic limit;
at finite N the exact-diagonalization values approach them as O(1/J).  The
expressions hold in the superradiant regime (couplings above lambda_c).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidParamsError


class DomainError(InvalidParamsError):
    """Coupling outside the superradiant domain of a closed-form expression."""


def _lambda_c(omega: float, omega0: float) -> float:
    return math.sqrt(omega * omega0) / 2.0


def mf_final_energy(lambda_i: float, lambda_f: float, omega: float = 1.0, omega0: float = 1.0) -> float:
    """Post-quench mean energy per J for lambda_i -> lambda_f.

    E/J = 2 li (li - 2 lf) / omega + (2 lf - 3 li) omega omega0^2 / (8 li^3);
    equals the coherent-state expectation <mu,nu| H(lambda_f) |mu,nu> per J
    with the variational parameters taken at lambda_i.  Valid for
    lambda_i > lambda_c.
    """
    if lambda_i <= _lambda_c(omega, omega0):
        raise DomainError(f"mf_final_energy needs lambda_i > lambda_c, got {lambda_i}")
    return (
        2.0 * lambda_i * (lambda_i - 2.0 * lambda_f) / omega
        + (2.0 * lambda_f - 3.0 * lambda_i) * omega * omega0**2 / (8.0 * lambda_i**3)
    )


def mf_ground_energy(lambda_f: float, omega: float = 1.0, omega0: float = 1.0) -> float:
    """Mean-field ground energy per J of the final Hamiltonian.

    E0/J = -omega0 * (omega omega0 / 4 lf^2) - (2/omega)(16 lf^4 - omega^2 omega0^2)/(16 lf^2),
    which simplifies to -2 lf^2/omega - omega omega0^2/(8 lf^2).  Valid for
    lambda_f > lambda_c; consistent with mf_final_energy at zero quench.
    """
    if lambda_f <= _lambda_c(omega, omega0):
        raise DomainError(f"mf_ground_energy needs lambda_f > lambda_c, got {lambda_f}")
    return (
        -omega0 * omega * omega0 / (4.0 * lambda_f**2)
        - (2.0 / omega) * (16.0 * lambda_f**4 - omega**2 * omega0**2) / (16.0 * lambda_f**2)
    )


def heat_general(lambda_i: float, lambda_f: float, omega: float = 1.0, omega0: float = 1.0) -> float:
    """Dissipated heat per J for a quench lambda_i -> lambda_f, general frequencies.

    Q/J = (li - lf)^2/(8 omega) * [16 + (2 lf + li) omega0^2 omega^2 / (lf^2 li^3)].
    """
    if lambda_f <= _lambda_c(omega, omega0):
        raise DomainError(f"heat_general needs lambda_f > lambda_c, got {lambda_f}")
    if lambda_i <= _lambda_c(omega, omega0):
        raise DomainError(f"heat_general needs lambda_i > lambda_c, got {lambda_i}")
    x = lambda_i - lambda_f
    return (x * x / (8.0 * omega)) * (
        16.0 + (2.0 * lambda_f + lambda_i) * omega0**2 * omega**2 / (lambda_f**2 * lambda_i**3)
    )


def heat_unit_frequencies(x: float, lambda_f: float) -> float:
    """Specialization Q/J = 2 x^2 + (x^2/8)(3 lf + x)/(lf^2 (lf + x)^3) at omega = omega0 = 1."""
    if lambda_f <= 0.5:
        raise DomainError(f"heat_unit_frequencies needs lambda_f > 1/2, got {lambda_f}")
    if x < 0:
        raise DomainError(f"quench size x must be >= 0, got {x}")
    return 2.0 * x * x + (x * x / 8.0) * (3.0 * lambda_f + x) / (lambda_f**2 * (lambda_f + x) ** 3)


@dataclass(frozen=True)
class MeanFieldLedger:
    """Per-J mean-field energy bookkeeping for one quench.

    q_over_j = e_final_over_j - e0_over_j and
    q_over_j = q_leading_over_j + correction_over_j hold identically.
    """

    e_final_over_j: float
    e0_over_j: float
    q_over_j: float
    q_leading_over_j: float
    correction_over_j: float


def mf_heat(x: float, lambda_f: float, omega: float = 1.0, omega0: float = 1.0) -> MeanFieldLedger:
    """Heat ledger for a downward quench of size x = lambda_i - lambda_f.

    The leading trend is 2 x^2 / omega; the remainder is a small correction,
    negligible at medium and large quench sizes.
    """
    if x < 0:
        raise DomainError(f"quench size x must be >= 0, got {x}")
    lambda_i = lambda_f + x
    e_final = mf_final_energy(lambda_i, lambda_f, omega, omega0)
    e0 = mf_ground_energy(lambda_f, omega, omega0)
    q = heat_general(lambda_i, lambda_f, omega, omega0)
    q_leading = 2.0 * x * x / omega
    return MeanFieldLedger(e_final, e0, q, q_leading, q - q_leading)
