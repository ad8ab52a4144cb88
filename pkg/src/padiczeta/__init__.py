"""Exact p-adic computations for GL_N over Q_p at small rank, prime and depth.

Everything here is exact: matrix entries are rationals, character values are
cyclotomic integers with rational coefficients, Haar integrals over compact
open sets are finite sums with rational weights, and volumes carrying square
roots are tracked symbolically.  There is no floating point anywhere in the
verification paths.
"""

__version__ = "0.1.0"
