"""Dense linear algebra primitives and the transform vocabulary.

Everything here is immutable after construction. ``SpdMatrix`` caches its
Cholesky factor so repeated solves and norms are cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from cobi.errors import (
    DimensionError,
    InvalidRotationError,
    InvalidSpectrumError,
    TransformDomainError,
    ValidationError,
)

SYMMETRY_TOL = 1e-12
ORTHOGONALITY_TOL = 1e-10


def as_point(x, n: int | None = None, name: str = "x") -> np.ndarray:
    """Return ``x`` as a finite float vector, optionally checking its length."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be a vector, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise DimensionError(f"{name} has length {arr.shape[0]}, expected {n}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} has non-finite entries")
    return arr


class SpdMatrix:
    """Symmetric positive definite matrix with a cached Cholesky factor.

    Construction fails with :class:`ValidationError` if the matrix is not
    symmetric within ``1e-12 * max(1, |a_ij|)`` or if the factorization
    breaks down.
    """

    __slots__ = ("_a", "_factor")

    def __init__(self, entries, name: str = "matrix"):
        a = np.array(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise DimensionError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValidationError(f"{name} has non-finite entries")
        asym = np.abs(a - a.T)
        if np.any(asym > SYMMETRY_TOL * np.maximum(1.0, np.abs(a))):
            raise ValidationError(f"{name} is not symmetric")
        try:
            factor = np.linalg.cholesky(a)
        except np.linalg.LinAlgError as exc:
            raise ValidationError(f"{name} is not positive definite") from exc
        if not np.all(np.diag(factor) > 0):
            raise ValidationError(f"{name} is not positive definite")
        a.setflags(write=False)
        factor.setflags(write=False)
        self._a = a
        self._factor = factor

    @property
    def entries(self) -> np.ndarray:
        return self._a

    @property
    def factor(self) -> np.ndarray:
        """Lower-triangular ``L`` with ``A = L L^T``."""
        return self._factor

    @property
    def n(self) -> int:
        return self._a.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self._a)

    def condition_number(self) -> float:
        ev = self.eigenvalues()
        return float(ev[-1] / ev[0])

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self._a, dtype=dtype)

    def __eq__(self, other):
        return isinstance(other, SpdMatrix) and np.array_equal(self._a, other._a)

    def __hash__(self):
        return hash(self._a.tobytes())

    def __repr__(self):
        return f"SpdMatrix({self._a.tolist()!r})"


def spd_from_spectrum(eigenvalues, rotation) -> SpdMatrix:
    """Build ``R diag(eigenvalues) R^T`` (symmetrized)."""
    lam = np.asarray(eigenvalues, dtype=float)
    r = np.asarray(rotation, dtype=float)
    if lam.ndim != 1 or r.shape != (lam.size, lam.size):
        raise DimensionError(f"spectrum of size {lam.size} does not match rotation shape {r.shape}")
    if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
        raise InvalidSpectrumError("eigenvalues must be finite and strictly positive")
    if np.max(np.abs(r.T @ r - np.eye(lam.size))) > ORTHOGONALITY_TOL:
        raise InvalidRotationError("rotation is not orthogonal to 1e-10")
    a = (r * lam) @ r.T
    return SpdMatrix(0.5 * (a + a.T))


def random_rotation(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix via sign-corrected QR of a Gaussian matrix."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def log_spaced_spectrum(n: int, condition: float) -> np.ndarray:
    """Eigenvalues ``condition**(i/(n-1))``, i.e. log-uniformly spaced in [1, condition]."""
    if condition < 1:
        raise InvalidSpectrumError(f"condition number must be >= 1, got {condition}")
    if n == 1:
        return np.ones(1)
    return condition ** (np.arange(n) / (n - 1))


def norm_a(x, a: SpdMatrix) -> float:
    """``sqrt(x^T A x)``, computed as the Euclidean norm of ``L^T x``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (a.n,):
        raise DimensionError(f"vector of shape {x.shape} does not match matrix of size {a.n}")
    return float(np.linalg.norm(a.factor.T @ x))


def spd_solve(a: SpdMatrix, rhs) -> np.ndarray:
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != a.n:
        raise DimensionError(f"rhs of shape {rhs.shape} does not match matrix of size {a.n}")
    return linalg.cho_solve((a.factor, True), rhs, check_finite=False)


# -- transforms -------------------------------------------------------------

_MONOTONE_KINDS = {"identity": 0, "power": 1, "log1p": 1, "affine": 2}
_SIGN_KINDS = {"identity": 0, "scale": 1, "step": 0, "signed_power": 1}


@dataclass(frozen=True)
class MonotoneTransform:
    """Strictly increasing scalar map applied to objective values.

    Kinds and parameters:

    * ``identity``
    * ``power(alpha)``: ``u**alpha``, ``alpha > 0``, defined for ``u >= 0``
    * ``log1p(a)``: ``log(1 + a*u)``, ``a > 0``, defined for ``u > -1/a``
    * ``affine(slope, intercept)``: ``slope*u + intercept``, ``slope > 0``
    """

    kind: str = "identity"
    params: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in _MONOTONE_KINDS:
            raise ValidationError(f"unknown monotone transform {self.kind!r}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if len(self.params) != _MONOTONE_KINDS[self.kind]:
            raise ValidationError(
                f"{self.kind} takes {_MONOTONE_KINDS[self.kind]} parameter(s), got {len(self.params)}"
            )
        if self.kind in ("power", "log1p", "affine") and not self.params[0] > 0:
            raise ValidationError(f"{self.kind} requires a positive first parameter")

    @classmethod
    def power(cls, alpha: float) -> MonotoneTransform:
        return cls("power", (alpha,))

    @property
    def is_identity(self) -> bool:
        return self.kind == "identity"

    @property
    def domain_min(self) -> float:
        """Infimum of the admissible input domain."""
        if self.kind == "power":
            return 0.0
        if self.kind == "log1p":
            return -1.0 / self.params[0]
        return -math.inf

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "identity":
            return u
        if self.kind == "power":
            if np.any(u < 0):
                raise TransformDomainError(f"power transform needs nonnegative input, got {np.min(u)}")
            return u ** self.params[0]
        if self.kind == "log1p":
            a = self.params[0]
            if np.any(a * u <= -1):
                raise TransformDomainError(f"log1p transform needs input > {-1 / a}")
            return np.log1p(a * u)
        slope, intercept = self.params
        return slope * u + intercept

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": list(self.params)}

    @classmethod
    def from_dict(cls, d: dict | None) -> MonotoneTransform:
        if d is None:
            return cls()
        return cls(d["kind"], tuple(d.get("params", ())))


@dataclass(frozen=True)
class SignPreservingTransform:
    """Map ``T`` with ``T(x) > 0`` iff ``x > 0``, applied to constraint values.

    Kinds: ``identity``, ``scale(gamma)`` with ``gamma > 0``, ``step``
    (1 above zero, else 0) and ``signed_power(beta)`` giving
    ``sign(x)*|x|**beta``.
    """

    kind: str = "identity"
    params: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in _SIGN_KINDS:
            raise ValidationError(f"unknown sign-preserving transform {self.kind!r}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if len(self.params) != _SIGN_KINDS[self.kind]:
            raise ValidationError(
                f"{self.kind} takes {_SIGN_KINDS[self.kind]} parameter(s), got {len(self.params)}"
            )
        if self.params and not self.params[0] > 0:
            raise ValidationError(f"{self.kind} requires a positive parameter")

    @property
    def is_identity(self) -> bool:
        return self.kind == "identity"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "identity":
            return x
        if self.kind == "scale":
            return self.params[0] * x
        if self.kind == "step":
            return np.where(x > 0, 1.0, 0.0)
        return np.sign(x) * np.abs(x) ** self.params[0]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": list(self.params)}

    @classmethod
    def from_dict(cls, d: dict | None) -> SignPreservingTransform:
        if d is None:
            return cls()
        return cls(d["kind"], tuple(d.get("params", ())))


IDENTITY = MonotoneTransform()
SIGN_IDENTITY = SignPreservingTransform()
