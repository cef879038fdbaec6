"""Xi-functions of rank 1 and 2: hypergeometric evaluation, quadrature oracles,
identity checks and the partial relaxation operators they generate."""

__version__ = "0.1.0"
