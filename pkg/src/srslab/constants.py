"""Physical constants (SI, CODATA via scipy)."""

from scipy import constants as _c

HBAR = _c.hbar
C = _c.c
EPS0 = _c.epsilon_0
E_CHARGE = _c.e
A0 = _c.physical_constants["Bohr radius"][0]
AMU = _c.physical_constants["atomic mass constant"][0]

#: dipole unit used by the species files, e * a0 in C m
EA0 = E_CHARGE * A0

TWO_PI = 2.0 * _c.pi
