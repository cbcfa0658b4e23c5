"""L1, orthogonal (DOC), and complementary (DCC) convolution kernels.

The L1 rows a^(n) discretize the Caputo derivative on a nonuniform mesh.  The
orthogonal kernels theta^(n) invert them in the convolution sense,

    sum_{j=k}^n theta^(n)_{n-j} a^(j)_{j-k} = delta_{nk},

so acting with theta on the L1 operator recovers plain increments.  Their
level-wise partial sums p^(n) are complementary to the L1 rows,

    sum_{j=k}^n p^(n)_{n-j} a^(j)_{j-k} = 1,

and play the role of a discrete fractional-integral quadrature; they weight
the memory part of the variational energy.

Two interchangeable engines compute the triangular recursions: a compiled
Cython core and a numpy/LAPACK fallback, selected at import (overridable per
workspace or via TFAC_KERNEL_BACKEND).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from tfac import _pykernels
from tfac.mesh import TimeMesh

try:
    from tfac import _ckernels
except ImportError:  # pure-python install, no compiled core
    _ckernels = None

HAVE_COMPILED = _ckernels is not None

__all__ = [
    "HAVE_COMPILED",
    "default_backend",
    "omega",
    "FracWeight",
    "L1Row",
    "DocRow",
    "DccRow",
    "IdentityReport",
    "KernelWorkspace",
    "l1_row",
    "doc_row",
    "dcc_row",
    "check_identities",
    "doc_transform",
    "quadratic_bound_check",
]

#: default max-abs identity residual treated as acceptable
DEFAULT_TOL = 1e-11


def default_backend() -> str:
    env = os.environ.get("TFAC_KERNEL_BACKEND", "").strip().lower()
    if env:
        return env
    return "compiled" if HAVE_COMPILED else "numpy"


def _make_engine(alpha: float, backend: str):
    if backend == "auto":
        backend = default_backend()
    if backend == "compiled":
        if _ckernels is None:
            raise RuntimeError("compiled kernel engine not built; install with the extension or use backend='numpy'")
        return _ckernels.KernelEngine(alpha)
    if backend in ("numpy", "python"):
        return _pykernels.KernelEngine(alpha)
    raise ValueError(f"unknown kernel backend {backend!r}")


def omega(beta: float, t: float) -> float:
    """Power kernel omega_beta(t) = t^(beta-1) / Gamma(beta)."""
    if beta <= 0.0:
        raise ValueError("omega needs beta > 0")
    if t <= 0.0:
        raise ValueError("omega needs t > 0")
    return float(t ** (beta - 1.0) / gamma_fn(beta))


@dataclass(frozen=True)
class FracWeight:
    """Callable power kernel of fixed order beta."""

    beta: float

    def __post_init__(self):
        if self.beta <= 0.0:
            raise ValueError("FracWeight needs beta > 0")

    def __call__(self, t: float) -> float:
        return omega(self.beta, t)


@dataclass(frozen=True)
class L1Row:
    """L1 kernel row at one level: coeffs[j] = a^(n)_j, units 1/time^alpha."""

    level: int
    coeffs: np.ndarray


@dataclass(frozen=True)
class DocRow:
    """Orthogonal kernel row: coeffs[j] = theta^(n)_j, units time^alpha."""

    level: int
    coeffs: np.ndarray


@dataclass(frozen=True)
class DccRow:
    """Complementary kernel row: coeffs[j] = p^(n)_j, units time^alpha."""

    level: int
    coeffs: np.ndarray


@dataclass(frozen=True)
class IdentityReport:
    """Max-abs residuals of the kernel identities at one level."""

    level: int
    orthogonality: float
    mutual: float
    complementarity: float

    @property
    def max_residual(self) -> float:
        return max(self.orthogonality, self.mutual, self.complementarity)

    def ok(self, tol: float) -> bool:
        return self.max_residual < tol


class KernelWorkspace:
    """Append-only store of L1/DOC/DCC rows over a growing time mesh.

    Single-writer: one owner appends levels; completed rows are immutable.
    The DOC/DCC triangles are built lazily on first access, so lean runs that
    only step the scheme never pay for them.
    """

    def __init__(self, alpha: float, tol: float = DEFAULT_TOL, backend: str = "auto"):
        self._engine = _make_engine(alpha, backend)
        self.alpha = alpha
        self.tol = tol

    @classmethod
    def from_mesh(cls, mesh: TimeMesh, alpha: float, tol: float = DEFAULT_TOL,
                  backend: str = "auto") -> "KernelWorkspace":
        ws = cls(alpha, tol=tol, backend=backend)
        for t in mesh.nodes[1:]:
            ws.append_time(float(t))
        return ws

    @property
    def backend(self) -> str:
        return self._engine.backend

    @property
    def n(self) -> int:
        """Number of completed levels."""
        return self._engine.n

    @property
    def nodes(self) -> np.ndarray:
        return np.asarray(self._engine.nodes)

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)

    def append_time(self, t: float) -> int:
        return self._engine.append_node(t)

    # -- rows -----------------------------------------------------------------

    def a_coeffs(self, n: int) -> np.ndarray:
        return np.asarray(self._engine.a_row(n))

    def theta_coeffs(self, n: int) -> np.ndarray:
        return np.asarray(self._engine.theta_row(n))

    def p_coeffs(self, n: int) -> np.ndarray:
        return np.asarray(self._engine.p_row(n))

    def a_row(self, n: int) -> L1Row:
        return L1Row(n, self.a_coeffs(n).copy())

    def doc_row(self, n: int) -> DocRow:
        return DocRow(n, self.theta_coeffs(n).copy())

    def dcc_row(self, n: int) -> DccRow:
        return DccRow(n, self.p_coeffs(n).copy())

    def zeta_coeffs(self, n: int) -> np.ndarray:
        """Auxiliary kernels zeta^(n)_{n-k} = sum_{j=k}^n theta^(n)_{n-j} (partial row sums)."""
        return np.cumsum(self.theta_coeffs(n))

    # -- identities -------------------------------------------------------------

    def check_identities(self, n: int) -> IdentityReport:
        r_orth, r_mut, r_comp = self._engine.residuals(n)
        return IdentityReport(n, r_orth, r_mut, r_comp)

    def assert_identities(self, n: int) -> IdentityReport:
        report = self.check_identities(n)
        if not report.ok(self.tol):
            raise ArithmeticError(
                f"kernel identity residual {report.max_residual:.3e} exceeds "
                f"tolerance {self.tol:.1e} at level {n}"
            )
        return report

    # -- convolution transforms ---------------------------------------------------

    def l1_apply(self, values) -> np.ndarray:
        """L1 fractional derivative of the sequence v^0..v^N (scalars or fields).

        out[n-1] = sum_{k=1}^n a^(n)_{n-k} (v^k - v^{k-1}).
        """
        values = np.asarray(values, dtype=np.float64)
        if values.shape[0] != self.n + 1:
            raise ValueError(f"need {self.n + 1} values v^0..v^N, got {values.shape[0]}")
        inc = np.diff(values, axis=0)
        out = np.empty_like(inc)
        for n in range(1, self.n + 1):
            out[n - 1] = np.tensordot(self.a_coeffs(n), inc[n - 1 :: -1], axes=1)
        return out

    def doc_transform(self, values) -> np.ndarray:
        """Apply sum_j theta^(n)_{n-j} v^j at each level to the sequence v^1..v^N.

        Composed with `l1_apply` this returns the raw increments of the input.
        """
        values = np.asarray(values, dtype=np.float64)
        if values.shape[0] != self.n:
            raise ValueError(f"need {self.n} values v^1..v^N, got {values.shape[0]}")
        out = np.empty_like(values)
        for n in range(1, self.n + 1):
            out[n - 1] = np.tensordot(self.theta_coeffs(n), values[n - 1 :: -1], axes=1)
        return out

    def rl_derivative(self, values) -> np.ndarray:
        """Indirect Riemann-Liouville derivative: doc_transform scaled by 1/tau_n."""
        out = self.doc_transform(values)
        tau = self.steps.reshape((-1,) + (1,) * (out.ndim - 1))
        return out / tau

    # -- quadratic form bound ---------------------------------------------------

    def quadratic_bound_check(self, w, n: int | None = None) -> float:
        """Slack of the kernel quadratic-form inequality (>= 0 up to rounding).

        2 w_n sum_k theta^(n)_{n-k} w_k
            - [ sum_k p^(n)_{n-k} w_k^2 - sum_k p^(n-1)_{n-k-1} w_k^2
                + (sum_k theta^(n)_{n-k} w_k)^2 / theta^(n)_0 ]
        """
        w = np.asarray(w, dtype=np.float64)
        if n is None:
            n = w.size
        if w.size < n:
            raise ValueError(f"need at least {n} sequence entries, got {w.size}")
        w = w[:n]
        theta = self.theta_coeffs(n)
        conv = float(np.dot(theta, w[::-1]))
        lhs = 2.0 * float(w[-1]) * conv
        wsq = w * w
        rhs = float(np.dot(self.p_coeffs(n), wsq[::-1])) + conv * conv / float(theta[0])
        if n >= 2:
            rhs -= float(np.dot(self.p_coeffs(n - 1), wsq[-2::-1]))
        return lhs - rhs

    # -- diagnostics --------------------------------------------------------------

    def dump_csv(self, path, n_max: int | None = None) -> None:
        """Columns (n, j, a, theta, p) through level n_max (default: all)."""
        n_max = self.n if n_max is None else n_max
        with open(path, "w") as f:
            f.write("n,j,a,theta,p\n")
            for n in range(1, n_max + 1):
                a = self.a_coeffs(n)
                th = self.theta_coeffs(n)
                p = self.p_coeffs(n)
                for j in range(n):
                    f.write("%d,%d,%.17g,%.17g,%.17g\n" % (n, j, a[j], th[j], p[j]))


# -- spec-shaped convenience wrappers ----------------------------------------

def l1_row(mesh: TimeMesh, n: int, alpha: float) -> L1Row:
    """Standalone L1 row on a mesh (no workspace needed)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("fractional order must lie strictly inside (0,1)")
    if not 1 <= n <= mesh.N:
        raise ValueError(f"level must satisfy 1 <= n <= {mesh.N}")
    return L1Row(n, _pykernels.l1_coefficients(mesh.nodes, n, alpha))


def doc_row(workspace: KernelWorkspace, n: int) -> DocRow:
    return workspace.doc_row(n)


def dcc_row(workspace: KernelWorkspace, n: int) -> DccRow:
    return workspace.dcc_row(n)


def check_identities(workspace: KernelWorkspace, n: int) -> IdentityReport:
    return workspace.check_identities(n)


def doc_transform(workspace: KernelWorkspace, values) -> np.ndarray:
    return workspace.doc_transform(values)


def quadratic_bound_check(workspace: KernelWorkspace, w, n: int | None = None) -> float:
    return workspace.quadratic_bound_check(w, n)
