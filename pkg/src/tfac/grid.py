"""2D periodic grid with second-order central differences and an FFT Helmholtz solve.

Fields are plain (M, M) float arrays with v[i, j] ~ v(i*h, j*h) and periodic
index wrap.  The forward-difference gradient pairing is chosen so the discrete
Green's formula <-lap(v), w> = <grad v, grad w> holds to rounding, which the
discrete energy law relies on.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = ["Grid2D", "write_snapshot", "read_snapshot"]


@dataclass(frozen=True)
class Grid2D:
    """Uniform square grid on (0, L)^2 with M points per dimension, h = L/M."""

    M: int
    L: float = 2.0 * math.pi

    def __post_init__(self):
        if self.M < 4:
            raise ValueError("grid needs M >= 4")
        if self.L <= 0:
            raise ValueError("domain edge length must be positive")

    @property
    def h(self) -> float:
        return self.L / self.M

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid arrays X[i,j] = i*h, Y[i,j] = j*h."""
        x = self.h * np.arange(self.M)
        return np.meshgrid(x, x, indexing="ij")

    @cached_property
    def _laplacian_symbol(self) -> np.ndarray:
        # -lap_h eigenvalues in rfft2 layout: (4/h^2)(sin^2(pi p/M) + sin^2(pi q/M))
        M = self.M
        s = np.sin(np.pi * np.arange(M) / M) ** 2
        lam = (4.0 / self.h**2) * (s[:, None] + s[None, : M // 2 + 1])
        lam.setflags(write=False)
        return lam

    def _check(self, v: np.ndarray) -> None:
        if v.shape != (self.M, self.M):
            raise ValueError(f"field shape {v.shape} does not match grid M = {self.M}")

    # -- inner products and norms ------------------------------------------

    def inner(self, v: np.ndarray, w: np.ndarray) -> float:
        """<v, w> = h^2 * sum(v*w)."""
        self._check(v)
        self._check(w)
        return self.h**2 * float(np.dot(v.ravel(), w.ravel()))

    def norm(self, v: np.ndarray) -> float:
        self._check(v)
        return self.h * float(np.linalg.norm(v.ravel()))

    def norm_lp(self, v: np.ndarray, p) -> float:
        """(h^2 sum |v|^p)^(1/p) for p in {2, 4, 6}; max|v| for p = inf."""
        self._check(v)
        if p == math.inf:
            return float(np.abs(v).max())
        if p not in (2, 4, 6):
            raise ValueError(f"unsupported p = {p!r}")
        return float((self.h**2 * np.abs(v) ** p).sum() ** (1.0 / p))

    # -- difference operators ----------------------------------------------

    def laplacian(self, v: np.ndarray) -> np.ndarray:
        """Five-point stencil (v_E + v_W + v_N + v_S - 4v)/h^2 with periodic wrap."""
        self._check(v)
        out = np.roll(v, -1, axis=0) + np.roll(v, 1, axis=0)
        out += np.roll(v, -1, axis=1) + np.roll(v, 1, axis=1)
        out -= 4.0 * v
        out /= self.h**2
        return out

    def grad_inner(self, v: np.ndarray, w: np.ndarray) -> float:
        """<grad_h v, grad_h w> with forward differences (exact Green pairing)."""
        self._check(v)
        self._check(w)
        dvx = np.roll(v, -1, axis=0) - v
        dwx = np.roll(w, -1, axis=0) - w
        dvy = np.roll(v, -1, axis=1) - v
        dwy = np.roll(w, -1, axis=1) - w
        # h^2 * sum((dv/h)*(dw/h)) = sum(dv*dw)
        return float(np.dot(dvx.ravel(), dwx.ravel()) + np.dot(dvy.ravel(), dwy.ravel()))

    def grad_norm_sq(self, v: np.ndarray) -> float:
        self._check(v)
        dx = np.roll(v, -1, axis=0) - v
        dy = np.roll(v, -1, axis=1) - v
        return float(np.dot(dx.ravel(), dx.ravel()) + np.dot(dy.ravel(), dy.ravel()))

    # -- spectral solve ------------------------------------------------------

    def helmholtz_solve(self, a0: float, c: float, rhs: np.ndarray) -> np.ndarray:
        """Solve a0*u - c*lap_h(u) = rhs by dividing rfft2 modes by a0 + c*lam."""
        self._check(rhs)
        if a0 <= 0:
            raise ValueError("helmholtz solve needs a0 > 0")
        if c < 0:
            raise ValueError("helmholtz solve needs c >= 0")
        rhs_hat = np.fft.rfft2(rhs)
        rhs_hat /= a0 + c * self._laplacian_symbol
        return np.fft.irfft2(rhs_hat, s=(self.M, self.M))


# -- snapshot files ---------------------------------------------------------

def write_snapshot(path, t: float, grid: Grid2D, v: np.ndarray) -> None:
    """Plain-text field dump; line i holds v(x, y_i) across x, 17 significant digits."""
    grid._check(v)
    if not np.all(np.isfinite(v)):
        raise ValueError("refusing to write a non-finite field")
    with open(path, "w") as f:
        f.write("# t=%.17g M=%d L=%.17g\n" % (t, grid.M, grid.L))
        for row in v.T:  # fixed y index per line
            f.write(" ".join("%.17g" % x for x in row))
            f.write("\n")


def read_snapshot(path) -> tuple[float, Grid2D, np.ndarray]:
    with open(path) as f:
        header = f.readline()
        m = re.match(r"# t=(\S+) M=(\d+) L=(\S+)\s*$", header)
        if m is None:
            raise ValueError(f"malformed snapshot header: {header!r}")
        t, M, L = float(m.group(1)), int(m.group(2)), float(m.group(3))
        data = np.loadtxt(f, ndmin=2)
    if data.shape != (M, M):
        raise ValueError(f"snapshot body {data.shape} does not match M = {M}")
    return t, Grid2D(M=M, L=L), np.ascontiguousarray(data.T)
