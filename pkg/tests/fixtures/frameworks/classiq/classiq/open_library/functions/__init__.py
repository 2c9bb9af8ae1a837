from .transforms import conjugate_flip, fourier_basis_swap
from .state_prep import uniform_fanout

__all__ = ["fourier_basis_swap", "conjugate_flip", "uniform_fanout", "missing_symbol"]
