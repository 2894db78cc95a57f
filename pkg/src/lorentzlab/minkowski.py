"""Flat Minkowski-space linear algebra in dimension 1+n (n <= 3).

Signature convention is fixed to ``eta = diag(-1, +1, ..., +1)`` and every
other module imports :func:`eta` from here.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field

import numpy as np

#: Imaginary parts below this (relative to the spectral scale) are truncated.
IMAG_TOL = 1e-8


class CausalityError(ValueError):
    """Raised for boosts with speed >= 1."""


class NullVectorError(ValueError):
    """Raised when the Minkowski norm of a null vector is requested."""


def eta(n: int) -> np.ndarray:
    """Minkowski metric ``diag(-1, 1, ..., 1)`` of size ``n + 1``.

    The metric is its own inverse, so this is both ``eta`` and ``eta^{-1}``.
    """
    m = np.eye(n + 1)
    m[0, 0] = -1.0
    return m


def _as_vector(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or not 2 <= a.size <= 4:
        raise ValueError(f"expected a 1+n vector with n in 1..3, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("Minkowski vector has non-finite entries")
    return a


@dataclass(frozen=True)
class MinkVector:
    """A space-time vector ``(xi_0, xi_hat)``."""

    time_component: float
    spatial_components: tuple[float, ...]

    def __post_init__(self):
        comps = (self.time_component, *self.spatial_components)
        if not 1 <= len(self.spatial_components) <= 3:
            raise ValueError("spatial dimension must be 1, 2 or 3")
        if not all(math.isfinite(c) for c in comps):
            raise ValueError("Minkowski vector has non-finite entries")

    @classmethod
    def from_array(cls, a) -> "MinkVector":
        a = _as_vector(a)
        return cls(float(a[0]), tuple(float(x) for x in a[1:]))

    def __array__(self, dtype=None, copy=None):
        return np.array((self.time_component, *self.spatial_components), dtype=dtype)

    @property
    def n(self) -> int:
        return len(self.spatial_components)


def mink_inner(a, b) -> float:
    """``<a, b>_m = -a0 b0 + sum_i ai bi``."""
    a = _as_vector(a)
    b = _as_vector(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.size} vs {b.size}")
    return float(-a[0] * b[0] + a[1:] @ b[1:])


def mink_norm(a) -> float:
    """Signed Minkowski length ``<a,a>_m / |<a,a>_m|^{1/2}``.

    Undefined on null vectors; raises :class:`NullVectorError` there.
    """
    q = mink_inner(a, a)
    if q == 0.0:
        raise NullVectorError("the Minkowski norm is undefined on null vectors")
    return q / math.sqrt(abs(q))


class CausalClass(enum.Enum):
    SpaceLike = "space-like"
    TimeLike = "time-like"
    Null = "null"


def causal_classify(a, tol_null: float = 1e-12) -> CausalClass:
    """Classify by the sign of ``<a,a>_m``.

    ``tol_null`` is relative to the euclidean norm squared of ``a``.
    """
    if tol_null < 0:
        raise ValueError("tol_null must be non-negative")
    a = _as_vector(a)
    q = mink_inner(a, a)
    thresh = tol_null * float(a @ a)
    if q > thresh:
        return CausalClass.SpaceLike
    if q < -thresh:
        return CausalClass.TimeLike
    return CausalClass.Null


@dataclass(frozen=True)
class LorentzBoost:
    velocity: np.ndarray
    gamma: float
    matrix: np.ndarray = field(repr=False)

    def __call__(self, a) -> np.ndarray:
        return self.matrix @ _as_vector(a)


def boost(v) -> LorentzBoost:
    """Pure boost with velocity ``v`` (euclidean speed < 1).

    Along the ``(t, v_hat)`` plane the matrix is ``[[g, -g|v|], [-g|v|, g]]``;
    it is the identity on the spatial complement of ``v``.
    """
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.ndim != 1 or not 1 <= v.size <= 3:
        raise ValueError("velocity must have 1..3 components")
    speed2 = float(v @ v)
    if not speed2 < 1.0:
        raise CausalityError(f"boost speed {math.sqrt(speed2)} >= 1")
    gamma = 1.0 / math.sqrt(1.0 - speed2)
    n = v.size
    L = np.eye(n + 1)
    L[0, 0] = gamma
    L[0, 1:] = -gamma * v
    L[1:, 0] = -gamma * v
    if speed2 > 0.0:
        L[1:, 1:] += (gamma - 1.0) * np.outer(v, v) / speed2
    L.setflags(write=False)
    v = v.copy()
    v.setflags(write=False)
    return LorentzBoost(v, gamma, L)


class SymTensor:
    """Symmetric (n+1)x(n+1) tensor with packed upper-triangular storage."""

    __slots__ = ("n", "_packed")

    def __init__(self, entries):
        a = np.asarray(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or not 2 <= a.shape[0] <= 4:
            raise ValueError(f"expected a square (n+1)x(n+1) matrix, got {a.shape}")
        if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(a).max())):
            raise ValueError("tensor is not symmetric")
        self.n = a.shape[0] - 1
        self._packed = a[np.triu_indices(self.n + 1)].copy()

    @property
    def entries(self) -> np.ndarray:
        m = np.zeros((self.n + 1, self.n + 1))
        iu = np.triu_indices(self.n + 1)
        m[iu] = self._packed
        m.T[iu] = self._packed
        return m

    def __array__(self, dtype=None, copy=None):
        return self.entries.astype(dtype) if dtype else self.entries

    def __repr__(self):
        return f"SymTensor({self.entries.tolist()!r})"


@dataclass(frozen=True)
class EtaSpectrum:
    """Eigenvalues of ``eta A`` sorted descending.

    ``real`` is False when some eigenvalue kept an imaginary part above
    tolerance; ``values`` then holds the real parts only.
    """

    values: np.ndarray
    real: bool
    max_imag: float


def eig_eta_selfadjoint(A, imag_tol: float = IMAG_TOL) -> EtaSpectrum:
    """Spectrum of ``eta A`` for symmetric ``A``.

    Computed with a Hessenberg-QR eigensolver; :func:`charpoly_roots` is the
    closed-form route, kept as an independent check. Non-real spectra are
    flagged, not raised.
    """
    a = np.asarray(A, dtype=float)
    if isinstance(A, SymTensor):
        a = A.entries
    n = a.shape[0] - 1
    if a.shape != (n + 1, n + 1) or n > 3:
        raise ValueError("only (n+1) <= 4 supported")
    M = eta(n) @ a
    lam = np.linalg.eigvals(M)
    scale = max(1.0, float(np.abs(M).max()))
    max_imag = float(np.abs(lam.imag).max())
    values = np.sort(lam.real)[::-1]
    return EtaSpectrum(values, max_imag <= imag_tol * scale, max_imag)


# --- closed-form characteristic polynomial roots -------------------------


def charpoly(M) -> np.ndarray:
    """Monic characteristic polynomial coefficients (Faddeev-LeVerrier).

    Returns ``c`` with ``det(lambda I - M) = sum c[j] lambda^(d-j)``.
    """
    M = np.asarray(M, dtype=float)
    d = M.shape[0]
    c = np.zeros(d + 1)
    c[0] = 1.0
    Mk = np.zeros_like(M)
    eye = np.eye(d)
    for k in range(1, d + 1):
        Mk = M @ (Mk + c[k - 1] * eye)
        c[k] = -np.trace(Mk) / k
    return c


def _quadratic(b, c):
    disc = cmath.sqrt(b * b - 4 * c)
    # avoid cancellation
    q = -0.5 * (b + disc) if (b.real if isinstance(b, complex) else b) >= 0 else -0.5 * (b - disc)
    if q == 0:
        return [0j, 0j]
    return [q, c / q]


def _cubic(a, b, c):
    """Roots of x^3 + a x^2 + b x + c."""
    p = b - a * a / 3.0
    q = 2 * a ** 3 / 27.0 - a * b / 3.0 + c
    shift = -a / 3.0
    if abs(p) < 1e-300 and abs(q) < 1e-300:
        return [shift + 0j] * 3
    disc = (q / 2) ** 2 + (p / 3) ** 3
    if isinstance(disc, float) and disc <= 0 and p < 0:
        # three real roots: trigonometric form
        r = 2 * math.sqrt(-p / 3)
        arg = max(-1.0, min(1.0, 3 * q / (p * r)))
        phi = math.acos(arg) / 3
        return [complex(shift + r * math.cos(phi - 2 * math.pi * j / 3)) for j in range(3)]
    s = cmath.sqrt(disc)
    u = -q / 2 + s if abs(-q / 2 + s) >= abs(-q / 2 - s) else -q / 2 - s
    u = u ** (1 / 3) if u != 0 else 0j
    omega = complex(-0.5, math.sqrt(3) / 2)
    roots = []
    for j in range(3):
        uj = u * omega ** j
        vj = -p / (3 * uj) if uj != 0 else 0j
        roots.append(shift + uj + vj)
    return roots


def _quartic(a, b, c, d):
    """Roots of x^4 + a x^3 + b x^2 + c x + d (Ferrari)."""
    shift = -a / 4.0
    p = b - 3 * a * a / 8.0
    q = c - a * b / 2.0 + a ** 3 / 8.0
    r = d - a * c / 4.0 + a * a * b / 16.0 - 3 * a ** 4 / 256.0
    if abs(q) < 1e-14 * max(1.0, abs(p), abs(r)):
        # biquadratic
        ys = _quadratic(p, r)
        out = []
        for y in ys:
            s = cmath.sqrt(y)
            out += [shift + s, shift - s]
        return out
    # resolvent cubic m^3 + p m^2 + (p^2/4 - r) m - q^2/8 = 0, pick m != 0
    ms = _cubic(p, p * p / 4.0 - r, -q * q / 8.0)
    m = max(ms, key=abs)
    s = cmath.sqrt(2 * m)
    out = []
    for sign in (1, -1):
        # y^2 -/+ s y + (p/2 + m +/- q/(2s)) = 0
        out += _quadratic(-sign * s, p / 2 + m + sign * q / (2 * s))
    return [shift + y for y in out]


def charpoly_roots(M) -> np.ndarray:
    """Eigenvalues of a <= 4x4 matrix from closed-form polynomial roots."""
    c = charpoly(M)
    d = len(c) - 1
    if d == 1:
        roots = [complex(-c[1])]
    elif d == 2:
        roots = _quadratic(c[1], c[2])
    elif d == 3:
        roots = _cubic(c[1], c[2], c[3])
    elif d == 4:
        roots = _quartic(c[1], c[2], c[3], c[4])
    else:
        raise ValueError("degree must be <= 4")
    return np.array(roots, dtype=complex)
