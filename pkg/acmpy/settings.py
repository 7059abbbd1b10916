import multiprocessing
from dataclasses import dataclass, replace
from typing import Literal, Optional

CONTEXTS = ("spawn", "fork", "forkserver")


@dataclass(frozen=True)
class Settings(object):
    """
    Numerical tolerances and resource limits shared across acmpy.

    Attributes
    ----------
    construction_tol : float (default: 1e-9)
        Tolerance for unitarity and relation checks of constructed tuples.

    spectral_tol : float (default: 1e-6)
        Tolerance for eigenvalue clustering and spectral round trips.

    max_den_factor : int (default: 720)
        The default denominator cap used when snapping commutator angles is
        ``m * max_den_factor``.

    enumeration_cap : int (default: 10**7)
        Largest number of elements any exhaustive enumeration may visit.

    n_proc : int, optional
        The number of worker processes. If :obj:`None`, ``cpu_count() - 1`` is used.

    context : Literal["spawn", "fork", "forkserver"] (default: "spawn")
        The context used for starting worker processes.

    seed : int (default: 0)
        Seed for every randomized routine.
    """

    construction_tol: float = 1e-9
    spectral_tol: float = 1e-6
    max_den_factor: int = 720
    enumeration_cap: int = 10**7
    n_proc: Optional[int] = None
    context: Literal["spawn", "fork", "forkserver"] = "spawn"
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("construction_tol", "spectral_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}.")
        if self.max_den_factor < 1:
            raise ValueError(f"max_den_factor must be >= 1, got {self.max_den_factor}.")
        if self.enumeration_cap < 1:
            raise ValueError(f"enumeration_cap must be >= 1, got {self.enumeration_cap}.")
        if self.n_proc is not None and self.n_proc < 1:
            raise ValueError(f"n_proc must be >= 1, got {self.n_proc}.")
        if self.context not in CONTEXTS:
            raise ValueError("context must be one of '{}'.".format("', '".join(CONTEXTS)))

    def replace(self, **kwargs) -> "Settings":
        """Return a copy with the given fields overridden."""
        return replace(self, **kwargs)

    def max_den(self, m: int) -> int:
        return m * self.max_den_factor

    @property
    def workers(self) -> int:
        if self.n_proc is None:
            return max(multiprocessing.cpu_count() - 1, 1)
        return self.n_proc


DEFAULTS = Settings()
