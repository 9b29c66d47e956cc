"""Polynomial modulating-function families and their grid evaluations.

The family on [0, L1] is phi_n(x) = x^(N+b+1-n) * (L1-x)^(b+n) for
n = 1..N.  Every member and its first derivative vanish at both endpoints
(with margin: the vanishing orders are N+b+1-n >= b+2 at 0 and b+n >= b+1
at L1), and the minimal monomial power exceeds 2, so fractional derivatives
of order up to 2 and their order-sensitivities are regular on [0, L1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fracpoly import Polynomial, rl_derivative, rl_alpha_sensitivity


@dataclass(frozen=True)
class ModulatingFamily:
    n_funcs: int
    b: int
    L1: float
    members: tuple[Polynomial, ...]
    #: factored powers (a_n, c_n) with phi_n = x^a_n (L1-x)^c_n
    powers: tuple[tuple[int, int], ...]

    @property
    def degree(self) -> int:
        return self.n_funcs + 2 * self.b + 1


@dataclass(frozen=True)
class GridEval:
    """Samples of each family member and its derivatives on a uniform grid."""

    x: np.ndarray
    alpha: float
    phi: np.ndarray                # (N, M)
    dphi_dx: np.ndarray            # (N, M)
    dalpha_phi: np.ndarray         # (N, M), D^alpha phi_n
    dalpha_dalpha_phi: np.ndarray  # (N, M), d/dalpha of D^alpha phi_n

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])


def build_family(N: int, b: int, L1: float) -> ModulatingFamily:
    """Construct the N-member polynomial modulating family on [0, L1]."""
    if N < 2:
        raise ValueError(f"need at least 2 modulating functions, got N={N}")
    if b < 2:
        raise ValueError(f"order offset b must be >= 2, got b={b}")
    if L1 <= 0:
        raise ValueError(f"interval length must be positive, got L1={L1}")
    L1 = float(L1)
    right = Polynomial((L1, -1.0))
    members = []
    powers = []
    for n in range(1, N + 1):
        a, c = N + b + 1 - n, b + n
        members.append(Polynomial.monomial(a) * right ** c)
        powers.append((a, c))
    return ModulatingFamily(N, b, L1, tuple(members), tuple(powers))


def evaluate_on_grid(fam: ModulatingFamily, alpha: float, M: int) -> GridEval:
    """Sample phi_n, phi_n', D^alpha phi_n and its alpha-sensitivity at
    x_j = j * L1/(M-1), j = 0..M-1."""
    if M < 3:
        raise ValueError(f"grid needs at least 3 points, got M={M}")
    alpha = float(alpha)
    if not 1.0 < alpha <= 2.0:
        raise ValueError(f"alpha must be in (1, 2], got {alpha}")
    x = np.linspace(0.0, fam.L1, M)
    L1 = fam.L1
    N = fam.n_funcs
    phi = np.empty((N, M))
    dphi = np.empty((N, M))
    dap = np.empty((N, M))
    ddap = np.empty((N, M))
    y = L1 - x
    for i, (member, (a, c)) in enumerate(zip(fam.members, fam.powers)):
        # factored forms are exact at the endpoints (no cancellation)
        phi[i] = x**a * y**c
        dphi[i] = x ** (a - 1) * y ** (c - 1) * (a * y - c * x)
        dap[i] = rl_derivative(member, alpha)(x)
        ddap[i] = rl_alpha_sensitivity(member, alpha)(x)
    return GridEval(x, alpha, phi, dphi, dap, ddap)
