"""Free massless Dirac equation in flat 1+1D spacetime: i d_t phi = -i sigma_x d_x phi.

Right movers carry the sigma_x eigenvalue +1 spinor (1, 1)/sqrt(2), left
movers (1, -1)/sqrt(2).  A Gaussian built on (1, 1) translates rigidly in +x
at unit speed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from diracmap.errors import GridError, WraparoundWarning
from diracmap.fields import EvolutionRecord, GridSpec, SpinorField

U_POS = np.array([1.0, 1.0]) / math.sqrt(2.0)
U_NEG = -np.array([1.0, 1.0]) / math.sqrt(2.0)
RIGHT_MOVER = U_POS
LEFT_MOVER = np.array([1.0, -1.0]) / math.sqrt(2.0)

CONTAINMENT = 1e-8


@dataclass(frozen=True)
class GaussianPacket:
    """phi(x, 0) = N**-0.5 * exp(-(x - x0)**2 / sigma**2) * spinor, N = sqrt(2 pi sigma**2).

    With the default spinor (1, 1) the total probability is exactly one.
    """

    x0: float
    sigma: float
    spinor: tuple = (1.0, 1.0)

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise GridError(f"packet width sigma must be positive, got {self.sigma!r}")
        if not math.isfinite(self.x0):
            raise GridError(f"packet centre x0 must be finite, got {self.x0!r}")

    @property
    def normalization(self) -> float:
        return math.sqrt(2.0 * math.pi * self.sigma**2)

    @property
    def peak_amplitude(self) -> float:
        return self.normalization**-0.5

    def envelope(self, x, center=None):
        c = self.x0 if center is None else center
        return self.peak_amplitude * np.exp(-((np.asarray(x) - c) ** 2) / self.sigma**2)

    def check_support(self, grid: GridSpec, center: float):
        """Raise if the envelope is clipped by the grid ends (> 1e-8 of peak)."""
        for edge in (grid.x_min, grid.x_max):
            rel = math.exp(-((edge - center) ** 2) / self.sigma**2)
            if rel > CONTAINMENT:
                raise GridError(
                    f"grid [{grid.x_min:g}, {grid.x_max:g}] clips the packet centred at {center:g} "
                    f"(edge amplitude {rel:.2e} of peak)"
                )


def gaussian_initial(packet: GaussianPacket, grid: GridSpec) -> SpinorField:
    packet.check_support(grid, packet.x0)
    env = packet.envelope(grid.x)
    su, sd = packet.spinor
    return SpinorField(grid, su * env, sd * env, 0.0)


def evolve_gaussian_closed_form(packet: GaussianPacket, grid: GridSpec, t: float) -> SpinorField:
    """Exact free evolution of a (1, 1) Gaussian: rigid translation by +t."""
    if t < 0:
        raise ValueError(f"closed form is stated for t >= 0, got t={t}")
    if tuple(packet.spinor) != (1.0, 1.0):
        raise ValueError("closed form covers the (1, 1) spinor only; use evolve_spectral")
    packet.check_support(grid, packet.x0 + t)
    env = packet.envelope(grid.x, center=packet.x0 + t)
    return SpinorField(grid, env, env.copy(), t)


def _edge_fraction(field: SpinorField) -> float:
    pn = field.pointwise_norm()
    peak = pn.max()
    if peak == 0:
        return 0.0
    return max(pn[0], pn[-1]) / peak


def evolve_spectral(initial: SpinorField, t: float) -> SpinorField:
    """Evolve arbitrary spinor data exactly in time, Fourier-spectrally in space.

    Each Fourier mode of chi_plus picks up exp(-i k t) (transport to +x) and
    each mode of chi_minus exp(+i k t).
    """
    grid = initial.grid
    if not grid.is_power_of_two:
        raise GridError(f"spectral evolution needs a power-of-two grid, got n={grid.n}")
    if _edge_fraction(initial) > CONTAINMENT:
        warnings.warn("initial data does not decay at the grid ends", WraparoundWarning, stacklevel=2)
    k = grid.wavenumbers()
    chi_p, chi_m = initial.chirality
    chi_p = np.fft.ifft(np.fft.fft(chi_p) * np.exp(-1j * k * t))
    chi_m = np.fft.ifft(np.fft.fft(chi_m) * np.exp(1j * k * t))
    s = math.sqrt(0.5)
    out = SpinorField(grid, s * (chi_p + chi_m), s * (chi_p - chi_m), initial.time + t)
    if _edge_fraction(out) > CONTAINMENT:
        warnings.warn(f"evolved support reached the periodic seam at t={out.time:g}", WraparoundWarning, stacklevel=2)
    return out


def flat_record(packet: GaussianPacket, grid: GridSpec, times, method: str = "closed") -> EvolutionRecord:
    """Sample the free packet at ``times`` with the closed form or the spectral evolver."""
    if method == "closed":
        fields = [evolve_gaussian_closed_form(packet, grid, float(t)) for t in times]
        return EvolutionRecord(fields, provenance="closed-form")
    if method == "spectral":
        init = gaussian_initial(packet, grid)
        fields = [evolve_spectral(init, float(t)) for t in times]
        return EvolutionRecord(fields, provenance="spectral")
    raise ValueError(f"unknown method {method!r}; expected 'closed' or 'spectral'")
