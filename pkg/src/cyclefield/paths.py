"""Agent states and uniformly sampled agent paths."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from cyclefield.errors import DomainError, ShapeError


@dataclass(frozen=True)
class AgentState:
    """A single (consumption, capital, technology) point."""

    C: float  # consumption level
    K: float  # capital stock
    A: float  # technology level

    def __post_init__(self):
        for name in ("C", "K", "A"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise DomainError(f"{name} must be a real number, got {v!r}")
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v!r}")
            if v < 0.0:
                raise DomainError(f"{name} must be >= 0, got {v}")
            object.__setattr__(self, name, float(v))

    def as_array(self) -> np.ndarray:
        return np.array([self.C, self.K, self.A], dtype=float)


class AgentPath:
    """A path of :class:`AgentState` samples on a uniform time grid.

    Parameters
    ----------
    C, K, A : array_like
        Coordinate samples, one per grid point (at least two).
    dt : float
        Grid spacing, strictly positive.
    t0 : float, optional
        Time of the first sample.
    """

    __slots__ = ("C", "K", "A", "dt", "t0")

    def __init__(self, C, K, A, dt: float, t0: float = 0.0):
        C = np.asarray(C, dtype=float)
        K = np.asarray(K, dtype=float)
        A = np.asarray(A, dtype=float)
        if C.ndim != 1 or K.ndim != 1 or A.ndim != 1:
            raise ShapeError("path coordinates must be one-dimensional arrays")
        if not (C.shape == K.shape == A.shape):
            raise ShapeError(
                f"coordinate arrays must share a length, got {C.shape}, {K.shape}, {A.shape}"
            )
        if C.size < 2:
            raise ShapeError(f"a path needs at least 2 samples, got {C.size}")
        if not (isinstance(dt, (int, float)) and math.isfinite(dt) and dt > 0):
            raise ShapeError(f"dt must be a finite positive number, got {dt!r}")
        for name, arr in (("C", C), ("K", K), ("A", A)):
            if not np.all(np.isfinite(arr)):
                raise DomainError(f"path coordinate {name} contains non-finite values")
        self.C = C
        self.K = K
        self.A = A
        self.dt = float(dt)
        self.t0 = float(t0)

    def __len__(self) -> int:
        return self.C.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.C.size)

    @property
    def duration(self) -> float:
        """Total time span (n - 1) * dt."""
        return (self.C.size - 1) * self.dt

    def state(self, i: int) -> AgentState:
        return AgentState(C=self.C[i], K=self.K[i], A=self.A[i])

    def as_arrays(self):
        """Return (t, C, K, A) arrays."""
        return self.times, self.C, self.K, self.A

    # -- CSV round trip -----------------------------------------------------

    CSV_HEADER = "t,C,K,A"

    def to_csv(self) -> str:
        """Serialize to CSV with header ``t,C,K,A`` and %.17g floats."""
        lines = [self.CSV_HEADER]
        for t, c, k, a in zip(self.times, self.C, self.K, self.A):
            lines.append(f"{t:.17g},{c:.17g},{k:.17g},{a:.17g}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "AgentPath":
        """Parse a path from CSV text with header ``t,C,K,A``.

        The time column must be uniformly spaced (relative tolerance 1e-9).
        """
        rows = np.genfromtxt(io.StringIO(text), delimiter=",", names=True)
        if rows.dtype.names is None or tuple(rows.dtype.names) != ("t", "C", "K", "A"):
            raise ShapeError(
                f"path CSV must have header '{cls.CSV_HEADER}', got {rows.dtype.names}"
            )
        rows = np.atleast_1d(rows)
        t = rows["t"]
        if t.size < 2:
            raise ShapeError(f"a path needs at least 2 samples, got {t.size}")
        steps = np.diff(t)
        dt = steps[0]
        if dt <= 0 or not np.allclose(steps, dt, rtol=1e-9, atol=1e-12):
            raise ShapeError("path CSV time grid is not uniformly increasing")
        return cls(rows["C"], rows["K"], rows["A"], dt=float(dt), t0=float(t[0]))
