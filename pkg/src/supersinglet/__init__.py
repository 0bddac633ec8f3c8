"""Numerical checks for self-testing of multiqudit Slater (supersinglet) states.

The modules build projector families with a scalar sum and the Slater state
measured with them, then certify the algebraic facts the self-testing
argument relies on.
"""

__version__ = "0.1.0"

DEFAULT_TOL = 1e-10
