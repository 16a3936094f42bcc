"""Natural units used throughout the package.

Energies are measured in units of the ring's rotational quantum, frequencies
and inverse times in units of ``omega0`` and momenta in units of ``HBAR``.
"""

HBAR = 1.0
