"""Map free massless 1+1D Dirac solutions onto static curved spacetimes.

psi = Omega(x)**-0.5 * phi turns any solution phi of the flat equation into a
solution psi of i d_t psi = (-i sigma_x d_x + V sigma_x) psi with the
non-hermitian potential V = -i Omega'/(2 Omega).
"""

from diracmap.errors import (CFLError, ConfigError, ContainmentError, DiracMapError, DomainStraddleError,
                             GridError, PositivityError, QuadratureError, SingularityError, WraparoundWarning)
from diracmap.fields import EvolutionRecord, GridSpec, SpinorField, density, max_norm, total_probability
from diracmap.flat import (U_NEG, U_POS, GaussianPacket, evolve_gaussian_closed_form, evolve_spectral,
                           gaussian_initial)
from diracmap.mapping import MappedSolution, curved_density, map_to_curved, map_to_flat
from diracmap.metric import (ConformalFactor, WormholeMetric, effective_potential, flat_conformal_factor,
                             log_derivative, phase_integral, radius_to_x, wormhole_conformal_factor, x_to_radius)
from diracmap.oracle import SolverConfig, evolve_curved, residual, rhs, weighted_norm

__version__ = "0.1.0"
