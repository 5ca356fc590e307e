"""Static conformal metrics ds^2 = Omega(x)^2 (dt^2 - dx^2).

A :class:`ConformalFactor` is the only carrier of spacetime information in
the package.  The traversable-wormhole family with shape function
b(r) = b0^2/r has the closed form Omega(x) = |x| / sqrt(x^2 + b0^2) with a
single singular point at the throat x = 0.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from diracmap.errors import ConfigError, QuadratureError, SingularityError

EXCLUSION_FACTOR = 1e-9

QUAD_ATOL = 1e-10
QUAD_RTOL = 1e-10
QUAD_MAX_PANELS = 2**20
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class ConformalFactor:
    """An evaluable static profile Omega(x) and its derivative.

    ``omega`` and ``omega_prime`` accept scalars or numpy arrays.
    ``log_omega`` is an optional closed form for log Omega; when absent,
    :func:`phase_integral` falls back to adaptive quadrature.
    """

    omega: Callable
    omega_prime: Callable
    singular_points: tuple = ()
    label: str = "custom"
    length_scale: float = 1.0
    log_omega: Optional[Callable] = field(default=None, compare=False)
    log_derivative: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        pts = tuple(float(p) for p in self.singular_points)
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ConfigError(f"singular points must be strictly ascending: {pts}")
        object.__setattr__(self, "singular_points", pts)

    @property
    def exclusion_radius(self) -> float:
        return EXCLUSION_FACTOR * max(1.0, self.length_scale)

    def nearest_singular(self, x):
        """Singular point within the exclusion radius of scalar ``x``, or None."""
        pts = self.singular_points
        if not pts:
            return None
        i = bisect.bisect_left(pts, x)
        for p in pts[max(i - 1, 0): i + 1]:
            if abs(x - p) <= self.exclusion_radius:
                return p
        return None

    def singular_mask(self, x) -> np.ndarray:
        """Boolean mask of positions inside the exclusion radius of any singular point."""
        x = np.asarray(x, dtype=float)
        mask = np.zeros(x.shape, dtype=bool)
        for p in self.singular_points:
            mask |= np.abs(x - p) <= self.exclusion_radius
        return mask

    def check_regular(self, x):
        """Raise :class:`SingularityError` if any of ``x`` is too close to a singular point."""
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        if not self.singular_points:
            return
        bad = self.singular_mask(arr)
        if bad.any():
            xb = float(arr[bad][0])
            raise SingularityError(xb, self.nearest_singular(xb))

    def branch(self, x: float) -> tuple:
        """Open interval between consecutive singular points that contains ``x``."""
        pts = self.singular_points
        i = bisect.bisect_right(pts, x)
        lo = pts[i - 1] if i > 0 else -math.inf
        hi = pts[i] if i < len(pts) else math.inf
        return lo, hi


@dataclass(frozen=True)
class WormholeMetric:
    """Traversable wormhole with shape function b(r) = b0**2 / r."""

    b0: float

    def __post_init__(self):
        if not (self.b0 > 0 and math.isfinite(self.b0)):
            raise ConfigError(f"throat radius b0 must be positive and finite, got {self.b0!r}")

    def shape_function(self, r):
        return self.b0**2 / np.asarray(r, dtype=float)

    def conformal_factor(self) -> ConformalFactor:
        return wormhole_conformal_factor(self.b0)


def _scalar_or_array(func):
    def wrapped(x):
        out = func(np.asarray(x, dtype=float))
        return float(out) if np.ndim(out) == 0 else out

    wrapped.__name__ = func.__name__
    return wrapped


def wormhole_conformal_factor(b0: float) -> ConformalFactor:
    """Omega(x) = |x| / sqrt(x^2 + b0^2), the positive root of Omega^2 = 1 - b0^2/(x^2 + b0^2)."""
    if not (b0 > 0 and math.isfinite(b0)):
        raise ConfigError(f"throat radius b0 must be positive and finite, got {b0!r}")
    b2 = float(b0) ** 2

    @_scalar_or_array
    def omega(x):
        return np.abs(x) / np.sqrt(x * x + b2)

    @_scalar_or_array
    def omega_prime(x):
        return np.sign(x) * b2 / (x * x + b2) ** 1.5

    @_scalar_or_array
    def log_omega(x):
        # 0.5*log(x^2/(b0^2+x^2)), written to stay accurate for |x| >> b0
        with np.errstate(divide="ignore"):
            return -0.5 * np.log1p(b2 / (x * x))

    @_scalar_or_array
    def log_derivative(x):
        return b2 / (x * (b2 + x * x))

    return ConformalFactor(
        omega=omega,
        omega_prime=omega_prime,
        singular_points=(0.0,),
        label=f"wormhole(b0={b0:g})",
        length_scale=float(b0),
        log_omega=log_omega,
        log_derivative=log_derivative,
    )


def flat_conformal_factor() -> ConformalFactor:
    """Minkowski space, Omega = 1."""

    @_scalar_or_array
    def omega(x):
        return np.ones_like(x)

    @_scalar_or_array
    def omega_prime(x):
        return np.zeros_like(x)

    return ConformalFactor(
        omega=omega,
        omega_prime=omega_prime,
        label="flat",
        log_omega=_scalar_or_array(lambda x: np.zeros_like(x)),
        log_derivative=omega_prime,
    )


def effective_potential(cf: ConformalFactor, x):
    """Non-hermitian potential V(x) = -i Omega'/(2 Omega)."""
    cf.check_regular(x)
    v = -0.5j * (np.asarray(cf.omega_prime(x)) / np.asarray(cf.omega(x)))
    return complex(v) if np.ndim(v) == 0 else v


def log_derivative(cf: ConformalFactor, x):
    """Omega'(x)/Omega(x)."""
    cf.check_regular(x)
    if cf.log_derivative is not None:
        return cf.log_derivative(x)
    out = np.asarray(cf.omega_prime(x)) / np.asarray(cf.omega(x))
    return float(out) if np.ndim(out) == 0 else out


def _gauss_legendre(f, a, b, panels):
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = np.asarray(f(nodes.ravel()), dtype=float).reshape(nodes.shape)
    return float(np.sum(half * (vals @ _GL_WEIGHTS)))


def integrate(f, a, b, atol=QUAD_ATOL, rtol=QUAD_RTOL, max_panels=QUAD_MAX_PANELS):
    """Composite 8-point Gauss-Legendre with panel doubling until successive estimates agree.

    ``f`` must accept numpy arrays.
    """
    if a == b:
        return 0.0
    panels = 1
    prev = _gauss_legendre(f, a, b, panels)
    while panels < max_panels:
        panels *= 2
        cur = _gauss_legendre(f, a, b, panels)
        if abs(cur - prev) <= max(atol, rtol * abs(cur)):
            return cur
        prev = cur
    raise QuadratureError(
        f"quadrature over [{a:g}, {b:g}] did not converge within {max_panels} panels "
        f"(last change {abs(cur - prev):.3e})"
    )


def default_reference(cf: ConformalFactor, x: float) -> float:
    """A regular point on the same branch as ``x`` used to anchor the quadrature."""
    lo, hi = cf.branch(x)
    if math.isfinite(lo) and math.isfinite(hi):
        return 0.5 * (lo + hi)
    scale = max(1.0, cf.length_scale)
    if math.isfinite(lo):
        return lo + scale
    if math.isfinite(hi):
        return hi - scale
    return 0.0


def phase_integral(cf: ConformalFactor, x, reference: Optional[float] = None, quadrature: bool = False):
    """Antiderivative of Omega'/Omega normalised so that it equals log Omega(x).

    Uses the closed form when the factor provides one.  Otherwise (or when
    ``quadrature`` is set) integrates Omega'/Omega from ``reference`` on the
    same branch and adds log Omega(reference).
    """
    cf.check_regular(x)
    if cf.log_omega is not None and not quadrature:
        return cf.log_omega(x)
    if np.ndim(x) != 0:
        return np.array([phase_integral(cf, xi, reference, quadrature) for xi in np.asarray(x, dtype=float)])
    x = float(x)
    ref = default_reference(cf, x) if reference is None else float(reference)
    cf.check_regular(ref)
    if cf.branch(ref) != cf.branch(x):
        raise ConfigError(f"reference point {ref} is not on the same branch as x={x}")

    def integrand(s):
        return np.asarray(cf.omega_prime(s)) / np.asarray(cf.omega(s))

    return math.log(cf.omega(ref)) + integrate(integrand, ref, x)


def radius_to_x(b0: float, r: float, branch: int = 1) -> float:
    """Tortoise-like coordinate x = branch * sqrt(r^2 - b0^2)."""
    if branch not in (1, -1):
        raise ConfigError(f"branch must be +1 or -1, got {branch!r}")
    if not b0 > 0:
        raise ConfigError(f"throat radius b0 must be positive, got {b0!r}")
    if r < b0:
        raise ConfigError(f"radius r={r!r} lies inside the throat b0={b0!r}")
    return branch * math.sqrt((r - b0) * (r + b0))


def x_to_radius(b0: float, x):
    """Inverse of :func:`radius_to_x`: r = sqrt(x^2 + b0^2)."""
    return np.hypot(x, b0) if np.ndim(x) else math.hypot(x, b0)
