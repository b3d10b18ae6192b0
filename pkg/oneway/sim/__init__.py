"""Dense linear-algebra kernel: operators, kets and density matrices."""

from .statevec import DensityMatrix, Ket, StateError, ZeroProbabilityError

__all__ = ["DensityMatrix", "Ket", "StateError", "ZeroProbabilityError"]
