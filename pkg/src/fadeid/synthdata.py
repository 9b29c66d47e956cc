"""Synthetic measurement generation for the fractional advection-dispersion model.

The benchmark problem on [0, L] has the closed-form solution
c(x, t) = cos(-t) * x(L-x), flux dc/dt = sin(-t) * x(L-x).  The source
term is defined as the residual closure

    r = dc/dt + nu * dc/dx - d * D^alpha c,

evaluated in closed form via the polynomial fractional-derivative algebra,
so the transport equation holds exactly for any parameter choice.  r is
singular like x^(1-alpha) at the origin; the sample stored at x = 0 is 0
by convention (the singularity is integrable and every integrand that
touches it carries a vanishing modulating factor).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .fracpoly import Polynomial, rl_derivative


@dataclass(frozen=True)
class TrueModel:
    """Ground-truth transport parameters used to synthesize measurements."""

    nu: float = 0.2
    d: float = 1.0
    alpha: float = 1.8
    L: float = 9.0
    T: float = 1.0

    def __post_init__(self):
        if not 1.0 < self.alpha <= 2.0:
            raise ValueError(f"alpha must be in (1, 2], got {self.alpha}")
        if self.L <= 0:
            raise ValueError(f"domain length must be positive, got L={self.L}")
        if self.d <= 0:
            raise ValueError(f"dispersion coefficient must be positive, got d={self.d}")

    def spatial_factor(self) -> Polynomial:
        """The x(L-x) factor of the closed-form solution."""
        return Polynomial((0.0, self.L, -1.0))


@dataclass(frozen=True)
class MeasurementSet:
    """Final-time samples of concentration, flux and source on a uniform grid.

    ``c`` / ``dcdt`` are the clean signals; ``c_noisy`` / ``dcdt_noisy``
    carry the measured (possibly noise-corrupted) channels and equal the
    clean ones when ``noise_level`` is 0.
    """

    x: np.ndarray
    c: np.ndarray
    dcdt: np.ndarray
    r: np.ndarray
    c_noisy: np.ndarray
    dcdt_noisy: np.ndarray
    noise_level: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        n = len(self.x)
        for name in ("c", "dcdt", "r", "c_noisy", "dcdt_noisy"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"array length mismatch on '{name}'")

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])


def exact_solution(model: TrueModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form (c, dc/dt) at time model.T on the given grid."""
    x = np.asarray(x, dtype=float)
    p = model.spatial_factor()(x)
    return math.cos(-model.T) * p, math.sin(-model.T) * p


def source_term(model: TrueModel, x: np.ndarray) -> np.ndarray:
    """Residual-closure source r = dc/dt + nu dc/dx - d D^alpha c; r(0) = 0."""
    x = np.asarray(x, dtype=float)
    p = model.spatial_factor()
    ct, st = math.cos(-model.T), math.sin(-model.T)
    frac = rl_derivative(p, model.alpha)
    out = np.zeros_like(x)
    pos = x > 0.0
    xp = x[pos]
    out[pos] = st * p(xp) + model.nu * ct * p.derivative()(xp) - model.d * ct * frac(xp)
    return out


def synthesize(
    model: TrueModel, M: int, noise_level: float = 0.0, seed: int = 0
) -> MeasurementSet:
    """Generate a measurement set on M uniform points spanning [0, L]."""
    if M < 3:
        raise ValueError(f"grid needs at least 3 points, got M={M}")
    x = np.linspace(0.0, model.L, M)
    c, dcdt = exact_solution(model, x)
    r = source_term(model, x)
    ms = MeasurementSet(x, c, dcdt, r, c, dcdt, 0.0, seed)
    if noise_level > 0.0:
        ms = add_noise(ms, noise_level, seed)
    return ms


def add_noise(ms: MeasurementSet, level: float, seed: int) -> MeasurementSet:
    """Additive white Gaussian noise with sigma = level * RMS(clean signal).

    Applied independently to the concentration and flux channels from one
    seeded numpy PCG64 generator (concentration draws first).  level = 0
    returns the input unchanged.
    """
    if level < 0:
        raise ValueError(f"noise level must be non-negative, got {level}")
    if level == 0:
        return ms
    rng = np.random.default_rng(seed)
    sig_c = level * float(np.sqrt(np.mean(ms.c**2)))
    sig_f = level * float(np.sqrt(np.mean(ms.dcdt**2)))
    c_noisy = ms.c + sig_c * rng.standard_normal(len(ms.c))
    dcdt_noisy = ms.dcdt + sig_f * rng.standard_normal(len(ms.dcdt))
    return replace(
        ms, c_noisy=c_noisy, dcdt_noisy=dcdt_noisy, noise_level=level, seed=seed
    )


def restrict(ms: MeasurementSet, L1: float) -> MeasurementSet:
    """Restriction to [0, L1] with L1 snapped to the nearest grid node."""
    j = int(round(L1 / ms.dx))
    if j < 2 or j >= len(ms.x):
        raise ValueError(f"L1={L1} does not leave a usable sub-grid")
    sl = slice(0, j + 1)
    return replace(
        ms,
        x=ms.x[sl],
        c=ms.c[sl],
        dcdt=ms.dcdt[sl],
        r=ms.r[sl],
        c_noisy=ms.c_noisy[sl],
        dcdt_noisy=ms.dcdt_noisy[sl],
    )


CSV_HEADER = ["x", "c", "dcdt", "r", "c_noisy", "dcdt_noisy"]


def to_csv(ms: MeasurementSet, path) -> None:
    """Write one row per grid point at full double precision."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for row in zip(ms.x, ms.c, ms.dcdt, ms.r, ms.c_noisy, ms.dcdt_noisy):
            w.writerow([f"{v:.17g}" for v in row])


def from_csv(path) -> MeasurementSet:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        cols = np.array([[float(v) for v in row] for row in reader]).T
    return MeasurementSet(*cols)
