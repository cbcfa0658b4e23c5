"""Time meshes: uniform, graded, composite graded+random, and adaptive step control.

Graded meshes t_k = T0*(k/N0)^gamma concentrate steps near t=0 to resolve the
weak initial singularity of Caputo-type problems; the composite mesh glues a
graded prefix to a normalized-random tail.  The solvability cap bounds the
step size so that the implicit L1 step stays uniquely solvable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

__all__ = [
    "MeshError",
    "TimeMesh",
    "MeshSpec",
    "AdaptiveConfig",
    "uniform_mesh",
    "graded_mesh",
    "example1_mesh",
    "random_mesh",
    "ag_check",
    "solvability_cap",
    "adaptive_next_tau",
]

# float slack for the non-strict AG comparisons (equality holds exactly on
# uniform meshes, up to rounding on graded ones)
_AG_RTOL = 1e-12


class MeshError(ValueError):
    """Invalid mesh parameters or an inconsistent node sequence."""


@dataclass(frozen=True)
class TimeMesh:
    """Nonuniform time grid 0 = t_0 < t_1 < ... < t_N.

    Immutable after construction; step sizes and ratios are derived views.
    """

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.ascontiguousarray(np.asarray(self.nodes, dtype=np.float64))
        if nodes.ndim != 1 or nodes.size < 2:
            raise MeshError("mesh needs at least two nodes")
        if nodes[0] != 0.0:
            raise MeshError("mesh must start at t_0 = 0")
        if not np.all(np.diff(nodes) > 0.0):
            raise MeshError("mesh nodes must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def N(self) -> int:
        return self.nodes.size - 1

    @property
    def T(self) -> float:
        return float(self.nodes[-1])

    @property
    def steps(self) -> np.ndarray:
        """tau_k = t_k - t_{k-1}, k = 1..N (index k-1)."""
        return np.diff(self.nodes)

    @property
    def ratios(self) -> np.ndarray:
        """r_k = tau_k / tau_{k-1}, k = 2..N (index k-2)."""
        tau = self.steps
        return tau[1:] / tau[:-1]

    @property
    def tau_max(self) -> float:
        return float(self.steps.max())

    def dump_csv(self, path) -> None:
        """Columns (k, t_k, tau_k, r_k); tau/r blank where undefined."""
        tau = self.steps
        with open(path, "w") as f:
            f.write("k,t_k,tau_k,r_k\n")
            f.write("0,%.17g,,\n" % self.nodes[0])
            for k in range(1, self.N + 1):
                r = "%.17g" % (tau[k - 1] / tau[k - 2]) if k >= 2 else ""
                f.write("%d,%.17g,%.17g,%s\n" % (k, self.nodes[k], tau[k - 1], r))


def uniform_mesh(T: float, N: int) -> TimeMesh:
    if T <= 0 or N < 1:
        raise MeshError("uniform mesh needs T > 0 and N >= 1")
    return TimeMesh(np.linspace(0.0, T, N + 1))


def graded_mesh(T0: float, N0: int, gamma: float) -> TimeMesh:
    """t_k = T0*(k/N0)^gamma for k = 0..N0."""
    if T0 <= 0:
        raise MeshError("graded mesh needs T0 > 0")
    if N0 < 1:
        raise MeshError("graded mesh needs N0 >= 1")
    if gamma < 1:
        raise MeshError("grading exponent must satisfy gamma >= 1")
    k = np.arange(N0 + 1, dtype=np.float64)
    return TimeMesh(T0 * (k / N0) ** gamma)


def example1_mesh(N: int, gamma: float, T: float, seed: int) -> TimeMesh:
    """Composite accuracy-test mesh: graded prefix on [0, T0], random tail on [T0, T].

    T0 = min(1/gamma, T) and N0 = ceil(N / (T + 1 - 1/gamma)); the remaining
    N1 = N - N0 steps are tau_{N0+k} = (T - T0) * eps_k / sum(eps), with eps_k
    uniform in (0,1) from a seeded PCG64 stream.  The final node is pinned to
    T exactly.
    """
    if N < 2:
        raise MeshError("composite mesh needs N >= 2")
    if gamma < 1:
        raise MeshError("grading exponent must satisfy gamma >= 1")
    if T <= 0:
        raise MeshError("composite mesh needs T > 0")
    T0 = min(1.0 / gamma, T)
    # ceil(N / (T + 1 - 1/gamma)) computed without the 1/gamma rounding, which
    # can push an exact integer quotient just above it
    N0 = math.ceil(N * gamma / ((T + 1.0) * gamma - 1.0))
    N1 = N - N0
    if N1 < 1:
        raise MeshError(
            f"no room for the random tail: N0 = {N0} >= N = {N} "
            f"(gamma = {gamma}, T = {T})"
        )
    prefix = graded_mesh(T0, N0, gamma).nodes
    rng = np.random.Generator(np.random.PCG64(seed))
    eps = rng.random(N1)
    while np.any(eps == 0.0):  # random() is [0,1); eps must be positive
        eps[eps == 0.0] = rng.random(np.count_nonzero(eps == 0.0))
    tail_tau = (T - T0) * eps / eps.sum()
    nodes = np.concatenate([prefix, T0 + np.cumsum(tail_tau)])
    nodes[-1] = T
    return TimeMesh(nodes)


def random_mesh(rng: np.random.Generator, N_max: int, N: int | None = None) -> TimeMesh:
    """Random nonuniform mesh on [0,1] with log-uniform steps (ratios up to ~1e3).

    Fuzzing utility for the kernel property checks; not a production mesh.
    """
    if N is None:
        N = int(rng.integers(2, N_max + 1))
    steps = np.exp(rng.uniform(math.log(1e-3), 0.0, size=N))
    nodes = np.concatenate([[0.0], np.cumsum(steps / steps.sum())])
    nodes[-1] = 1.0
    return TimeMesh(nodes)


def ag_check(mesh: TimeMesh, gamma: float, C_gamma: float) -> tuple[bool, int | None]:
    """Graded-like mesh validator.

    Passes iff tau_k <= tau * min(1, C_gamma * t_k^(1-1/gamma)) for all k and
    t_k <= C_gamma * t_{k-1} for k >= 2.  Returns (ok, first violating k).
    """
    t = mesh.nodes
    tau = mesh.steps
    tau_bar = mesh.tau_max
    for k in range(1, mesh.N + 1):
        bound = tau_bar * min(1.0, C_gamma * t[k] ** (1.0 - 1.0 / gamma))
        if tau[k - 1] > bound * (1.0 + _AG_RTOL):
            return False, k
        if k >= 2 and t[k] > C_gamma * t[k - 1] * (1.0 + _AG_RTOL):
            return False, k
    return True, None


def solvability_cap(alpha: float, kappa: float) -> float:
    """Largest step with a_0^(n) >= kappa: tau = (kappa*Gamma(2-alpha))^(-1/alpha)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("fractional order must lie in (0,1)")
    if kappa <= 0:
        raise ValueError("mobility must be positive")
    return float((kappa * gamma_fn(2.0 - alpha)) ** (-1.0 / alpha))


@dataclass(frozen=True)
class AdaptiveConfig:
    """Step controller parameters: tau in [tau_min, tau_max], damping eta."""

    tau_max: float
    tau_min: float
    eta: float
    enforce_cap: bool = True

    def __post_init__(self):
        if not 0.0 < self.tau_min <= self.tau_max:
            raise MeshError("need 0 < tau_min <= tau_max")
        if self.eta < 0:
            raise MeshError("eta must be nonnegative")


def adaptive_next_tau(update_norm: float, cfg: AdaptiveConfig, cap: float = math.inf) -> float:
    """min(cap, max(tau_min, tau_max / sqrt(1 + eta*update_norm^2)))."""
    tau = cfg.tau_max / math.sqrt(1.0 + cfg.eta * update_norm**2)
    return min(cap, max(cfg.tau_min, tau))


@dataclass(frozen=True)
class MeshSpec:
    """Flat-config description of a time mesh."""

    kind: str  # uniform | graded | composite_random | adaptive
    T: float
    N: int = 0
    gamma: float = 1.0
    T0: float = 0.0
    N0: int = 0
    seed: int = 0
    C_gamma: float = 0.0  # AG validation only

    _KINDS = ("uniform", "graded", "composite_random", "adaptive")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise MeshError(f"unknown mesh kind {self.kind!r}")
        if self.kind != "adaptive" and self.N < 1:
            raise MeshError("mesh spec needs N >= 1")

    def build(self) -> TimeMesh:
        if self.kind == "uniform":
            return uniform_mesh(self.T, self.N)
        if self.kind == "graded":
            return graded_mesh(self.T, self.N, self.gamma)
        if self.kind == "composite_random":
            return example1_mesh(self.N, self.gamma, self.T, self.seed)
        raise MeshError("adaptive meshes are built during the run, not up front")
