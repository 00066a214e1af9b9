"""Radial momentum grids, quadrature weights, and discrete Sobolev metrics."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError


@dataclass(frozen=True)
class RadialGrid:
    """Quadrature nodes/weights for radial momentum integrals Int_0^inf . dp.

    ``domain`` is the momentum interval the quadrature rule represents:
    (0, inf) for the rational map, a finite (p_lo, p_hi) window for the
    log-panel grid.  Kernel assembly restricts its singularity-subtraction
    integrals to this domain so that the discrete quadratic form is a
    restriction of the continuum one.
    """

    nodes: np.ndarray
    weights: np.ndarray
    mapping_scale: float
    kind: str = "rational"
    domain: tuple = (0.0, np.inf)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise ConfigurationError("nodes and weights must be matching 1-d arrays")
        if np.any(nodes <= 0) or np.any(np.diff(nodes) <= 0):
            raise ConfigurationError("grid nodes must be positive and strictly increasing")
        if np.any(weights <= 0):
            raise ConfigurationError("grid weights must be positive")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def n(self):
        return self.nodes.size

    @property
    def l2_weights(self):
        """Discrete L^2 measure w_i p_i^2 (radial functions, q^2 dq pairing)."""
        return self.weights * self.nodes**2

    def integrate(self, values):
        """Quadrature of Int f(p) dp for f sampled on the nodes."""
        return np.dot(self.weights, np.asarray(values))

    def l2_inner(self, f, g):
        """Discrete radial L^2 inner product Int conj(f) g p^2 dp."""
        return np.dot(np.conj(f) * self.l2_weights, g)

    def l2_norm(self, f):
        return np.sqrt(np.real(self.l2_inner(f, f)))


def build_grid(n, s):
    """Mapped Gauss-Legendre grid on (0, inf): p = s (1+t)/(1-t).

    The rational map sends the GL nodes t on (-1, 1) to (0, inf) with
    weights transformed by dp/dt = 2 s / (1-t)^2.  Half the nodes fall
    below p = s.
    """
    n = int(n)
    if n < 16:
        raise ConfigurationError(f"grid size must satisfy n >= 16, got {n}")
    if not s > 0:
        raise ConfigurationError(f"mapping scale must be positive, got {s}")
    t, wt = np.polynomial.legendre.leggauss(n)
    nodes = s * (1 + t) / (1 - t)
    weights = wt * 2 * s / (1 - t) ** 2
    return RadialGrid(nodes, weights, mapping_scale=float(s), kind="rational",
                      domain=(0.0, np.inf))


def build_log_grid(n, p_lo, p_hi, nodes_per_panel=10):
    """Composite Gauss-Legendre grid, panels uniform in log p on [p_lo, p_hi].

    Uniform resolution per decade; the quadrature represents exactly the
    window [p_lo, p_hi], which is recorded as the grid domain.  Used by the
    scale-invariant experiments (sharp-constant checks, critical-coupling
    scan) where the rational map's stretched tail would under-resolve.
    """
    n = int(n)
    if n < 16:
        raise ConfigurationError(f"grid size must satisfy n >= 16, got {n}")
    if not (0 < p_lo < p_hi):
        raise ConfigurationError(f"need 0 < p_lo < p_hi, got ({p_lo}, {p_hi})")
    npan = max(2, n // nodes_per_panel)
    edges = np.exp(np.linspace(np.log(p_lo), np.log(p_hi), npan + 1))
    t, wt = np.polynomial.legendre.leggauss(nodes_per_panel)
    ps, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        ua, ub = np.log(a), np.log(b)
        u = 0.5 * (ub - ua) * t + 0.5 * (ua + ub)
        p = np.exp(u)
        ps.append(p)
        ws.append(0.5 * (ub - ua) * wt * p)
    return RadialGrid(np.concatenate(ps), np.concatenate(ws),
                      mapping_scale=float(np.sqrt(p_lo * p_hi)), kind="log",
                      domain=(float(p_lo), float(p_hi)))


@dataclass(frozen=True)
class MetricH12:
    """Diagonal discrete H^{1/2} metric (1 + p_i) w_i p_i^2."""

    diagonal: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diagonal, dtype=float)
        if np.any(d <= 0):
            raise ConfigurationError("H^{1/2} metric entries must be positive")
        object.__setattr__(self, "diagonal", d)

    def norm(self, f):
        return np.sqrt(np.real(np.dot(np.conj(f) * self.diagonal, f)))


def assemble_h12_metric(grid: RadialGrid) -> MetricH12:
    """Discrete metric of Int (1 + |p|) |f(p)|^2 p^2 dp on the grid."""
    return MetricH12((1.0 + grid.nodes) * grid.l2_weights)


def operator_norm_h12(A, metric: MetricH12):
    """Operator norm of A as a map of the weighted space onto itself.

    Largest singular value of D^{1/2} A D^{-1/2} with D the metric diagonal.
    A may act on k stacked channel copies of the grid (size k * n).
    """
    A = np.asarray(A)
    d = metric.diagonal
    if A.shape[0] != A.shape[1] or A.shape[0] % d.size != 0:
        raise DomainError(f"operator shape {A.shape} incompatible with metric size {d.size}")
    reps = A.shape[0] // d.size
    dr = np.sqrt(np.tile(d, reps))
    return np.linalg.norm(A * dr[:, None] / dr[None, :], 2)
