"""Hierarchical equations of motion for a dissipative Aharonov-Bohm ring.

The package integrates the hierarchy of auxiliary Wigner functions for a
charged particle on a ring threaded by magnetic flux and coupled to Drude
baths, with the Caldeira-Leggett model as a reference.  See the README for a
tour of the modules.
"""

from .bath import (BathSpec, KernelSample, PadeDecomposition, drude_sdf, kernel,
                   matsubara_kernel, pade_decompose)
from .cl import (CLField, CLGenerator, CLGrid, CLStack, cl_heom_equilibrium,
                 cl_heom_rhs, cl_markovian_equilibrium, cl_markovian_rhs, make_cl_grid)
from .config import RunConfig, load_config
from .grid import (RingGrid, RingParams, WignerField, delta_p, dtheta_deriv, make_grid,
                   trace)
from .hierarchy import HierarchySpace, enumerate_hierarchy
from .integrate import (implicit_steady_state, relax_to_steady_state,
                        rkf45_propagate)
from .observables import (boltzmann_current, byers_yang_current, eigenenergy,
                          gaussian_reference, linear_response, momentum_distribution,
                          persistent_current, spectrum, transition_energy)
from .risb import (ADOStack, PotentialSpec, RISBGenerator, effective_beta, flux_shift,
                   heom_rhs, liouvillian_apply, markovian_equilibrium, markovian_rhs)
from .symmetric import SymmetricHierarchy
from .units import HBAR

__version__ = "0.1.0"
