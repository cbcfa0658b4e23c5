# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernel engine for the hot triangular recursions.

Same storage contract as the numpy lane (`tfac._pykernels`): flat triangular
buffers, level n at [n(n-1)/2, n(n+1)/2).  The orthogonal-kernel row is the
literal decreasing-k recursion; complementary rows accumulate incrementally.
"""

import numpy as np
from scipy.special import gamma as gamma_fn

cimport numpy as cnp
from libc.math cimport expm1, log1p, pow

cnp.import_array()


cdef inline Py_ssize_t tri_off(Py_ssize_t n) noexcept:
    return n * (n - 1) // 2


cdef class KernelEngine:
    """Compiled lane: L1 rows, orthogonal (theta) and complementary (p) rows."""

    cdef public double alpha
    cdef double beta
    cdef double inv_g2ma
    cdef public Py_ssize_t n
    cdef cnp.ndarray _nodes, _a, _th, _p
    cdef Py_ssize_t _doc_levels

    def __init__(self, double alpha):
        if not 0.0 < alpha < 1.0:
            raise ValueError("fractional order must lie strictly inside (0,1)")
        self.alpha = alpha
        self.beta = 1.0 - alpha
        self.inv_g2ma = 1.0 / gamma_fn(2.0 - alpha)
        self.n = 0
        self._doc_levels = 0
        self._nodes = np.zeros(64)
        self._a = np.zeros(tri_off(65))
        self._th = np.zeros(tri_off(65))
        self._p = np.zeros(tri_off(65))

    @property
    def backend(self):
        return "compiled"

    @property
    def nodes(self):
        return self._nodes[: self.n + 1]

    cdef cnp.ndarray _grow(self, cnp.ndarray buf, Py_ssize_t need):
        cdef Py_ssize_t size = buf.shape[0]
        if need <= size:
            return buf
        while size < need:
            size *= 2
        grown = np.zeros(size)
        grown[: buf.shape[0]] = buf
        return grown

    def append_node(self, double t):
        cdef Py_ssize_t n = self.n + 1
        cdef Py_ssize_t k, off
        cdef double y, tau, diff
        cdef double[::1] old_nodes = self._nodes
        if t <= old_nodes[self.n]:
            raise ValueError("nodes must be appended in strictly increasing order")
        self._nodes = self._grow(self._nodes, n + 1)
        self._a = self._grow(self._a, tri_off(n + 1))
        self._th = self._grow(self._th, tri_off(n + 1))
        self._p = self._grow(self._p, tri_off(n + 1))
        cdef double[::1] nodes = self._nodes
        cdef double[::1] a = self._a
        nodes[n] = t
        off = tri_off(n)
        for k in range(1, n + 1):
            # tau from adjacent nodes; t - t_{k-1} is never formed (it loses
            # tau entirely once t_k << t on strongly graded meshes)
            tau = nodes[k] - nodes[k - 1]
            y = t - nodes[k]
            if y > 0.0:
                # stable difference of powers, centered on the smaller argument
                diff = pow(y, self.beta) * expm1(self.beta * log1p(tau / y))
            else:
                diff = pow(tau, self.beta)
            a[off + (n - k)] = diff / tau * self.inv_g2ma
        self.n = n
        return n

    def a_row(self, Py_ssize_t n):
        self._check_level(n)
        return self._a[tri_off(n) : tri_off(n) + n]

    def theta_row(self, Py_ssize_t n):
        self._check_level(n)
        self._ensure_doc(n)
        return self._th[tri_off(n) : tri_off(n) + n]

    def p_row(self, Py_ssize_t n):
        self._check_level(n)
        self._ensure_doc(n)
        return self._p[tri_off(n) : tri_off(n) + n]

    cdef _check_level(self, Py_ssize_t n):
        if n < 1 or n > self.n:
            raise IndexError(f"level {n} not computed (have {self.n})")

    cdef void _ensure_doc(self, Py_ssize_t n):
        cdef double[::1] a = self._a
        cdef double[::1] th = self._th
        cdef double[::1] p = self._p
        cdef Py_ssize_t m, i, mm, off_m, off_prev
        cdef double s
        while self._doc_levels < n:
            m = self._doc_levels + 1
            off_m = tri_off(m)
            th[off_m] = 1.0 / a[off_m]
            for i in range(1, m):
                s = 0.0
                for mm in range(i):
                    # a^(m-mm)_{i-mm}: diagonal walk across earlier rows
                    s += th[off_m + mm] * a[tri_off(m - mm) + (i - mm)]
                th[off_m + i] = -s / a[tri_off(m - i)]
            p[off_m] = th[off_m]
            off_prev = tri_off(m - 1)
            for i in range(1, m):
                p[off_m + i] = th[off_m + i] + p[off_prev + i - 1]
            self._doc_levels = m

    def residuals(self, Py_ssize_t n):
        """(orthogonality, mutual orthogonality, complementarity) max-abs at level n."""
        self._check_level(n)
        self._ensure_doc(n)
        cdef double[::1] a = self._a
        cdef double[::1] th = self._th
        cdef double[::1] p = self._p
        cdef Py_ssize_t k, j, off_n = tri_off(n)
        cdef double s1, s2, s3, r1 = 0.0, r2 = 0.0, r3 = 0.0
        for k in range(1, n + 1):
            s1 = 0.0
            s2 = 0.0
            s3 = 0.0
            for j in range(k, n + 1):
                s1 += th[off_n + (n - j)] * a[tri_off(j) + (j - k)]
                s2 += a[off_n + (n - j)] * th[tri_off(j) + (j - k)]
                s3 += p[off_n + (n - j)] * a[tri_off(j) + (j - k)]
            if k == n:
                s1 -= 1.0
                s2 -= 1.0
            s3 -= 1.0
            if s1 < 0: s1 = -s1
            if s2 < 0: s2 = -s2
            if s3 < 0: s3 = -s3
            if s1 > r1: r1 = s1
            if s2 > r2: r2 = s2
            if s3 > r3: r3 = s3
        return r1, r2, r3
