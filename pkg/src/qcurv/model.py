"""Parameters, radial grids, radial fields and report records."""
from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .quadrature import GREGORY_ORDER, segment_weights


class DomainError(ValueError):
    """An argument lies outside the admissible range of the model."""


class QuadratureError(RuntimeError):
    """An adaptive quadrature did not reach its target accuracy."""


def sphere_area(k):
    """Surface measure |S^k| of the unit k-sphere in R^(k+1)."""
    return 2.0 * math.pi ** ((k + 1) / 2.0) / math.gamma((k + 1) / 2.0)


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModelParams:
    """Dimension, singular exponent and the derived constants.

    ``gamma_n`` is the strength of the fundamental solution of
    (-Delta)^(n/2) for log(1/|x|); ``lambda_1`` is the total volume of the
    round sphere, twice ``gamma_n``; ``omega`` is |S^(n-1)|.
    """

    n: int
    alpha: float
    gamma_n: float
    lambda_1: float
    omega: float

    @property
    def quantized_volume(self):
        """Lambda_1 (1 + alpha): the volume of every Q = 1 normal solution."""
        return self.lambda_1 * (1.0 + self.alpha)


def make_params(n, alpha):
    if int(n) != n or n < 2:
        raise DomainError(f"dimension must be an integer n >= 2, got n={n}")
    if not alpha > -1.0:
        raise DomainError(f"singular exponent must satisfy alpha > -1, got alpha={alpha}")
    n = int(n)
    s_n = sphere_area(n)
    gamma_n = math.factorial(n - 1) / 2.0 * s_n
    lambda_1 = math.factorial(n - 1) * s_n
    return ModelParams(n=n, alpha=float(alpha), gamma_n=gamma_n, lambda_1=lambda_1,
                       omega=sphere_area(n - 1))


#: minimum resolution of the geometric grid
MIN_NODES_PER_DECADE = 8


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Geometric radial grid with weights for int_0^r_max f(s) s^(n-1) ds.

    Nodes are uniform in ``log r`` with spacing ``log_step``.  The first
    panel [0, r_1] is integrated in closed form assuming the integrand is
    a constant multiple of s^(n alpha) there, which absorbs the singular
    weight of the density.
    """

    nodes: np.ndarray
    weights: np.ndarray
    log_step: float
    alpha: float
    n: int
    order: int = GREGORY_ORDER

    @property
    def m(self):
        return self.nodes.size

    @property
    def r_max(self):
        return float(self.nodes[-1])

    @property
    def origin_panel(self):
        """Weight of the closed-form panel [0, r_1]."""
        return self.nodes[0] ** self.n / (self.n * (1.0 + self.alpha))

    def segment(self, a, b):
        """Weights for the integral over [r_a, r_b] (node indices, inclusive)."""
        seg = segment_weights(self.m, a, b, self.order)
        return self.log_step * seg * self.nodes ** self.n

    def split_weights(self, i):
        """Weights for int_0^r_max with the interval split at node ``i``.

        Integrands with a derivative jump at r_i (the log kernel at
        s = r_i) keep the full order of the rule on each side.
        """
        w = self.segment(0, i) + self.segment(i, self.m - 1)
        w[0] += self.origin_panel
        return w

    def scaled(self, factor):
        """Grid for r -> r / factor; weights pick up factor^-n."""
        return RadialGrid(nodes=_readonly(self.nodes / factor),
                          weights=_readonly(self.weights / factor ** self.n),
                          log_step=self.log_step, alpha=self.alpha, n=self.n,
                          order=self.order)

    def digest(self):
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.nodes, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.weights, dtype="<f8").tobytes())
        h.update(f"{self.n}:{self.alpha!r}:{self.order}".encode())
        return h.digest()


def make_grid(m=2048, r_min=1e-7, r_max=1e4, alpha=0.0, n=2):
    """Geometric grid of ``m`` nodes on [r_min, r_max]."""
    if not 0.0 < r_min < r_max:
        raise DomainError(f"need 0 < r_min < r_max, got r_min={r_min}, r_max={r_max}")
    if not alpha > -1.0:
        raise DomainError(f"singular exponent must satisfy alpha > -1, got alpha={alpha}")
    decades = math.log10(r_max / r_min)
    if m < 16 or (m - 1) / decades < MIN_NODES_PER_DECADE:
        raise DomainError(
            f"grid too coarse: m={m} over {decades:.2f} decades "
            f"(need m >= 16 and {MIN_NODES_PER_DECADE} nodes per decade)")
    x = np.linspace(math.log(r_min), math.log(r_max), int(m))
    h = float(x[1] - x[0])
    nodes = np.exp(x)
    weights = h * segment_weights(nodes.size, 0, nodes.size - 1) * nodes ** n
    weights[0] += nodes[0] ** n / (n * (1.0 + alpha))
    return RadialGrid(nodes=_readonly(nodes), weights=_readonly(weights), log_step=h,
                      alpha=float(alpha), n=int(n))


@dataclass(frozen=True, eq=False)
class RadialField:
    """Samples of a radial function on grid nodes.

    ``u0`` is the value at the origin and ``tail_slope`` the far-field
    log coefficient: u(r) ~ u(r_M) - tail_slope * log(r / r_M) beyond the
    last node.
    """

    values: np.ndarray
    u0: float
    tail_slope: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))
        object.__setattr__(self, "u0", float(self.u0))
        object.__setattr__(self, "tail_slope", float(self.tail_slope))

    def shifted(self, c):
        return RadialField(self.values + c, self.u0 + c, self.tail_slope)


@dataclass(frozen=True)
class CutoffConfig:
    """Cut-offs of the approximate problems.

    ``eps`` multiplies the curvature by psi_eps(r) = 1 - phi(eps r);
    ``delta`` switches on phi_delta(r) = phi(r / delta) in the self-scaled
    curvature; ``p`` is the exponent of its e^(-n p u(0)) prefactor.  Zero
    disables a cut-off.  The Gaussian regulariser e^(-eps r^2) lives in
    ``SolverOptions.gaussian_eps``.
    """

    eps: float = 0.0
    delta: float = 0.0
    p: float = 0.5

    def __post_init__(self):
        if self.eps < 0 or self.delta < 0:
            raise DomainError("cut-off parameters must be nonnegative")
        if not 0.0 < self.p < 1.0:
            raise DomainError(f"self-scaling exponent must lie in (0, 1), got p={self.p}")


def ramp(t):
    """Piecewise-linear cut-off: 0 on [0,1), t-1 on [1,2), 1 on [2,inf)."""
    return np.clip(np.abs(t) - 1.0, 0.0, 1.0)


class BolVerdict(str, enum.Enum):
    LOWER_BOUND_HOLDS = "LowerBoundHolds"
    UPPER_BOUND_HOLDS = "UpperBoundHolds"
    EQUALITY_HOLDS = "EqualityHolds"
    NOT_APPLICABLE = "NotApplicable"
    VIOLATED = "Violated"


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    residual: float
    c: float
    lambda_vol: float = math.nan
    lambda_star: float = math.nan
    beta: float = math.nan
    beta_fit: float = math.nan
    pohozaev_lhs: float = math.nan
    pohozaev_rhs: float = math.nan
    pohozaev_residual: float = math.nan
    verdict: BolVerdict = BolVerdict.NOT_APPLICABLE
    cause: str = ""
    flags: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def bol_verdict(self):
        return self.verdict

    def to_dict(self):
        d = asdict(self)
        d["verdict"] = self.verdict.value
        return d
