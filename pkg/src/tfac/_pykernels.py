"""Pure numpy/LAPACK kernel engine.

Fallback lane used when the compiled extension is unavailable (and the
reference lane for backend cross-checks).  Rows of all three kernel families
live in flat lower-triangular buffers; level n occupies the slice
[n(n-1)/2, n(n+1)/2) with entry j holding the coefficient of subscript j.

The orthogonal-kernel rows are obtained by back-substitution on the identity
sum_{j=k}^n theta^(n)_{n-j} a^(j)_{j-k} = delta_{nk}, performed by LAPACK on
an incrementally maintained upper-triangular matrix; this is the same
decreasing-k recursion as the defining procedure, just evaluated by dtrsv.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import gamma as gamma_fn


def _tri_off(n: int) -> int:
    return n * (n - 1) // 2


def l1_coefficients(nodes: np.ndarray, n: int, alpha: float) -> np.ndarray:
    """Row a^(n)_j, j = 0..n-1, of the nonuniform L1 kernels.

    a^(n)_{n-k} = ((t_n - t_{k-1})^(1-a) - (t_n - t_k)^(1-a)) / (tau_k * Gamma(2-a)).
    The raw power difference cancels (worst when tau_k << t_n - t_k or when
    1 - alpha is small), and on strongly graded meshes even recovering tau_k
    from the two differences t_n - t_{k-1} and t_n - t_k underflows.  So tau_k
    is always the exact adjacent-node difference and every k < n uses the
    equivalent form centered on the smaller argument y = t_n - t_k,

        x^b - y^b = y^b * expm1(b * log1p(tau_k / y)),

    which is uniformly accurate for y > 0 (t_n - t_{k-1} is never formed);
    only the newest subinterval (y = 0, nothing to cancel) takes the plain
    power of tau_n.
    """
    beta = 1.0 - alpha
    t = nodes[: n + 1]
    tau = np.diff(t)
    y = t[n] - t[1:]  # y[k-1] = t_n - t_k; zero at k = n
    y_safe = np.where(y > 0.0, y, 1.0)
    stable = y_safe**beta * np.expm1(beta * np.log1p(tau / y_safe))
    diff = np.where(y > 0.0, stable, tau**beta)
    row = diff / tau * (1.0 / gamma_fn(2.0 - alpha))
    return row[::-1].copy()  # index j = n - k


class _Triangle:
    """Growable flat triangular store; row n has n entries."""

    def __init__(self, capacity_levels: int = 8):
        self._buf = np.zeros(_tri_off(capacity_levels + 1))
        self.levels = 0

    def _reserve(self, n: int) -> None:
        need = _tri_off(n + 1)
        if need > self._buf.size:
            grown = np.zeros(max(need, 2 * self._buf.size))
            grown[: self._buf.size] = self._buf
            self._buf = grown

    def append(self, row: np.ndarray) -> None:
        n = self.levels + 1
        self._reserve(n)
        self._buf[_tri_off(n) : _tri_off(n) + n] = row
        self.levels = n

    def row(self, n: int) -> np.ndarray:
        if not 1 <= n <= self.levels:
            raise IndexError(f"level {n} not computed (have {self.levels})")
        return self._buf[_tri_off(n) : _tri_off(n) + n]


class KernelEngine:
    """numpy lane: L1 rows, orthogonal (theta) and complementary (p) rows."""

    backend = "numpy"

    def __init__(self, alpha: float):
        if not 0.0 < alpha < 1.0:
            raise ValueError("fractional order must lie strictly inside (0,1)")
        self.alpha = alpha
        self._nodes = np.zeros(64)
        self.n = 0  # completed levels; nodes filled through index n
        self._a = _Triangle()
        self._th = _Triangle()
        self._p = _Triangle()
        # U[k, j] = a^(j)_{j-k}, V[k, j] = theta^(j)_{j-k}; columns appended
        # as rows arrive, used for the dtrsv solve and the identity residuals
        self._U = None
        self._V = None

    @property
    def nodes(self) -> np.ndarray:
        return self._nodes[: self.n + 1]

    def append_node(self, t: float) -> int:
        if t <= self._nodes[self.n]:
            raise ValueError("nodes must be appended in strictly increasing order")
        if self.n + 1 >= self._nodes.size:
            self._nodes = np.concatenate([self._nodes, np.zeros(self._nodes.size)])
        self._nodes[self.n + 1] = t
        n = self.n + 1
        self._a.append(l1_coefficients(self._nodes, n, self.alpha))
        self.n = n
        if self._U is not None:
            self._push_u_column(n)
        return n

    # -- row access -----------------------------------------------------------

    def a_row(self, n: int) -> np.ndarray:
        return self._a.row(n)

    def theta_row(self, n: int) -> np.ndarray:
        self._ensure_doc(n)
        return self._th.row(n)

    def p_row(self, n: int) -> np.ndarray:
        self._ensure_doc(n)
        return self._p.row(n)

    # -- DOC/DCC construction ---------------------------------------------------

    def _grow_square(self, mat: np.ndarray | None, need: int) -> np.ndarray:
        size = 16
        if mat is not None:
            size = mat.shape[0]
        while size < need:
            size *= 2
        if mat is None:
            return np.zeros((size, size))
        if size == mat.shape[0]:
            return mat
        grown = np.zeros((size, size))
        grown[: mat.shape[0], : mat.shape[0]] = mat
        return grown

    def _push_u_column(self, j: int) -> None:
        self._U = self._grow_square(self._U, j + 1)
        self._U[1 : j + 1, j] = self._a.row(j)[::-1]

    def _push_v_column(self, j: int) -> None:
        self._V = self._grow_square(self._V, j + 1)
        self._V[1 : j + 1, j] = self._th.row(j)[::-1]

    def _ensure_doc(self, n: int) -> None:
        if n > self.n:
            raise IndexError(f"level {n} beyond current mesh level {self.n}")
        if self._U is None:
            self._U = self._grow_square(None, self.n + 1)
            for j in range(1, self.n + 1):
                self._push_u_column(j)
        while self._th.levels < n:
            m = self._th.levels + 1
            e = np.zeros(m)
            e[-1] = 1.0
            x = solve_triangular(
                self._U[1 : m + 1, 1 : m + 1], e, lower=False, check_finite=False
            )
            theta = x[::-1].copy()  # x_j = theta^(m)_{m-j}
            self._th.append(theta)
            self._push_v_column(m)
            p = theta.copy()
            if m >= 2:
                p[1:] += self._p.row(m - 1)
            self._p.append(p)

    # -- identity residuals -----------------------------------------------------

    def residuals(self, n: int) -> tuple[float, float, float]:
        """(orthogonality, mutual orthogonality, complementarity) max-abs at level n."""
        self._ensure_doc(n)
        e = np.zeros(n)
        e[-1] = 1.0
        U = self._U[1 : n + 1, 1 : n + 1]
        r_orth = U @ self._th.row(n)[::-1] - e
        r_mut = self._V[1 : n + 1, 1 : n + 1] @ self._a.row(n)[::-1] - e
        r_comp = U @ self._p.row(n)[::-1] - 1.0
        return (
            float(np.abs(r_orth).max()),
            float(np.abs(r_mut).max()),
            float(np.abs(r_comp).max()),
        )
