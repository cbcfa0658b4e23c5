"""High-precision and brute-force reference routes used only by the tests.

Everything here recomputes kernel quantities independently of the library's
code paths: 50-digit mpmath arithmetic for the rows, direct quadrature for the
defining integral, an explicitly assembled triangular system for the
orthogonal kernels, and partial-sum definitions for the complementary rows.
"""

import mpmath as mp
import numpy as np


def mp_l1_rows(nodes, alpha, dps=50):
    """All L1 rows via mpmath power differences; rows[n][j] = a^(n)_j."""
    with mp.workdps(dps):
        t = [mp.mpf(float(x)) for x in nodes]
        a = mp.mpf(float(alpha))
        beta = 1 - a
        g = mp.gamma(2 - a)
        rows = {}
        for n in range(1, len(t)):
            row = [mp.mpf(0)] * n
            for k in range(1, n + 1):
                x = t[n] - t[k - 1]
                y = t[n] - t[k]
                row[n - k] = (x**beta - y**beta) / ((t[k] - t[k - 1]) * g)
            rows[n] = row
        return rows


def mp_l1_row_quadrature(nodes, n, alpha, dps=40):
    """One L1 row via adaptive quadrature of the defining kernel integral.

    The newest subinterval touches the u^(-alpha) endpoint singularity; the
    fixed substitution u = v^8 softens it to an exponent above -1 so tanh-sinh
    converges, while the quadrature still does real numerical work.
    """
    with mp.workdps(dps):
        t = [mp.mpf(float(x)) for x in nodes[: n + 1]]
        a = mp.mpf(float(alpha))
        g1ma = mp.gamma(1 - a)
        row = [mp.mpf(0)] * n
        for k in range(1, n + 1):
            # substitute u = t_n - s
            lo, hi = t[n] - t[k], t[n] - t[k - 1]
            if lo == 0:
                m = 8
                integral = m * mp.quad(
                    lambda v: v ** (m * (1 - a) - 1), [0, hi ** (mp.mpf(1) / m)]
                )
            else:
                integral = mp.quad(lambda u: u ** (-a), [lo, hi])
            row[n - k] = integral / (g1ma * (t[k] - t[k - 1]))
        return [float(x) for x in row]


def mp_doc_rows(a_rows, dps=50):
    """Orthogonal rows by the literal recursion in mpmath; rows[n][i] = theta^(n)_i."""
    with mp.workdps(dps):
        rows = {}
        for n in sorted(a_rows):
            th = [mp.mpf(0)] * n
            th[0] = 1 / a_rows[n][0]
            for i in range(1, n):
                s = mp.mpf(0)
                for m in range(i):
                    s += th[m] * a_rows[n - m][i - m]
                th[i] = -s / a_rows[n - i][0]
            rows[n] = th
        return rows


def mp_dcc_rows(theta_rows, dps=50):
    """Complementary rows straight from the partial-sum definition:
    p^(n)_{n-k} = sum_{j=k}^n theta^(j)_{j-k}."""
    with mp.workdps(dps):
        rows = {}
        for n in sorted(theta_rows):
            p = [mp.mpf(0)] * n
            for k in range(1, n + 1):
                p[n - k] = mp.fsum(theta_rows[j][j - k] for j in range(k, n + 1))
            rows[n] = p
        return rows


def to_float(rows):
    return {n: np.array([float(x) for x in row]) for n, row in rows.items()}


def doc_by_triangular_solve(a_rows):
    """Orthogonal rows via numpy lstsq-free dense solve of the identity system.

    Row n solves sum_{j=k}^n x_j a^(j)_{j-k} = delta_{nk} with x_j = theta^(n)_{n-j};
    the matrix is assembled explicitly, independent of the library's storage.
    """
    out = {}
    for n in sorted(a_rows):
        A = np.zeros((n, n))
        for k in range(1, n + 1):
            for j in range(k, n + 1):
                A[k - 1, j - 1] = a_rows[j][j - k]
        e = np.zeros(n)
        e[-1] = 1.0
        x = np.linalg.solve(A, e)
        out[n] = x[::-1].copy()
    return out


def brute_l1_apply(a_rows, values):
    """(d_tau^alpha v)^n by explicit double loop."""
    values = np.asarray(values, dtype=np.float64)
    N = len(a_rows)
    out = np.zeros(N)
    for n in range(1, N + 1):
        s = 0.0
        for k in range(1, n + 1):
            s += a_rows[n][n - k] * (values[k] - values[k - 1])
        out[n - 1] = s
    return out


def brute_doc_transform(theta_rows, seq):
    """sum_j theta^(n)_{n-j} s^j by explicit double loop."""
    seq = np.asarray(seq, dtype=np.float64)
    N = len(theta_rows)
    out = np.zeros(N)
    for n in range(1, N + 1):
        s = 0.0
        for j in range(1, n + 1):
            s += theta_rows[n][n - j] * seq[j - 1]
        out[n - 1] = s
    return out


def mp_caputo_of_power(sigma, alpha, t, dps=40):
    """Caputo derivative of t^sigma/Gamma(1+sigma) at time t by quadrature."""
    with mp.workdps(dps):
        sig = mp.mpf(float(sigma))
        a = mp.mpf(float(alpha))
        tt = mp.mpf(float(t))

        def integrand(s):
            # d/ds [s^sigma/Gamma(1+sigma)] = s^(sigma-1)/Gamma(sigma)
            return (tt - s) ** (-a) / mp.gamma(1 - a) * s ** (sig - 1) / mp.gamma(sig)

        return float(mp.quad(integrand, [0, tt / 2, tt]))
