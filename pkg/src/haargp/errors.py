"""Exception types shared across the package."""


class HaarGPError(Exception):
    """Base class for all package errors."""


class OrderMismatchError(HaarGPError, ValueError):
    """Two combinatorial objects of different order were combined."""


class InvalidOrderError(HaarGPError, ValueError):
    """An order k is not admissible for the requested operation."""


class CapacityError(HaarGPError, ValueError):
    """A requested size exceeds a configured limit."""

    def __init__(self, what: str, requested: int, limit: int):
        self.what = what
        self.requested = requested
        self.limit = limit
        super().__init__(
            f"{what}: requested k={requested} exceeds k_max={limit} "
            f"(raise the limit explicitly to override)"
        )


class SingularGramError(HaarGPError, ArithmeticError):
    """The Gram matrix of the commutant basis is singular."""

    def __init__(self, k: int, d: int, group: str, rank: int, size: int):
        self.k = k
        self.d = d
        self.group = group
        self.rank = rank
        self.size = size
        super().__init__(
            f"singular Gram matrix for group={group}, k={k}, d={d} "
            f"(rank {rank} of {size})"
        )


class RealStatesRequiredError(HaarGPError, ValueError):
    """The orthogonal group was requested with complex data."""


class DomainError(HaarGPError, ValueError):
    """An argument lies outside the domain of a formula."""


class MemoryGuardError(HaarGPError, MemoryError):
    """A request would allocate more memory than the configured guard."""


class UnsupportedError(HaarGPError, ValueError):
    """A combination of options is not supported."""


class SingularKernelError(HaarGPError, ArithmeticError):
    """A noiseless kernel matrix is singular and no pseudo-inverse was allowed."""
