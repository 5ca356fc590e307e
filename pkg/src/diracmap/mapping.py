"""Flat <-> curved map psi = Omega**-0.5 * phi and the induced density relation.

The multiplier is real, so the map rescales amplitudes without touching the
complex phase.  Grid points within the exclusion radius of a singular point
are masked: the curved field stores 0 there and the mask records it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from diracmap.fields import GridSpec, SpinorField
from diracmap.metric import ConformalFactor


@dataclass(frozen=True)
class MappedSolution:
    flat: SpinorField
    curved: SpinorField
    conformal: ConformalFactor
    mask: np.ndarray


def _omega_on(cf: ConformalFactor, x: np.ndarray, mask: np.ndarray) -> np.ndarray:
    om = np.ones_like(x)
    if (~mask).any():
        om[~mask] = cf.omega(x[~mask])
    return om


def amplitude_factor(cf: ConformalFactor, grid: GridSpec):
    """(Omega**-0.5 on the grid with 0 at masked points, mask)."""
    x = grid.x
    mask = cf.singular_mask(x)
    factor = np.zeros_like(x)
    factor[~mask] = _omega_on(cf, x, mask)[~mask] ** -0.5
    return factor, mask


def map_to_curved(flat: SpinorField, cf: ConformalFactor) -> MappedSolution:
    factor, mask = amplitude_factor(cf, flat.grid)
    grid = flat.grid.excluding(cf)
    curved = SpinorField(grid, factor * flat.up, factor * flat.down, flat.time)
    return MappedSolution(flat=flat, curved=curved, conformal=cf, mask=mask)


def map_to_flat(curved: SpinorField, cf: ConformalFactor) -> SpinorField:
    """phi = Omega**0.5 * psi; masked points stay zero."""
    x = curved.grid.x
    mask = cf.singular_mask(x)
    factor = np.zeros_like(x)
    factor[~mask] = np.sqrt(_omega_on(cf, x, mask)[~mask])
    return SpinorField(curved.grid.excluding(cf), factor * curved.up, factor * curved.down, curved.time)


def curved_density(flat_density, cf: ConformalFactor, grid: GridSpec) -> np.ma.MaskedArray:
    """|psi|^2 = |phi|^2 / Omega as a masked array (masked near singular points)."""
    rho = np.asarray(flat_density, dtype=float)
    x = grid.x
    mask = cf.singular_mask(x)
    out = np.zeros_like(rho)
    out[..., ~mask] = rho[..., ~mask] / _omega_on(cf, x, mask)[~mask]
    return np.ma.MaskedArray(out, mask=np.broadcast_to(mask, rho.shape))


def density_ratio(cf: ConformalFactor, grid: GridSpec) -> np.ma.MaskedArray:
    """Pointwise curved/flat density ratio 1/Omega; for the wormhole sqrt(b0^2 + x^2)/|x|."""
    return curved_density(np.ones(grid.n), cf, grid)
