"""Fixed-point equilibria of the opinion dynamics and their shifts.

Both solvers use plain Richardson iteration on the update map. The
unmediated map x -> lam * x0 + (1 - lam) * W x contracts in the
infinity norm with factor max(1 - lam); the linear mediated map
contracts with factor rho = m * max(1 - lam). No factorization is ever
formed, so memory stays linear in the edge count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, ConvergenceError, ValidityError
from .graph import InfluenceMatrix, validate_doubly_stochastic
from .transform import make_linear, one_off_bias

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10**6

# Below this magnitude the one-off bias counts as zero and amplification
# ratios are reported as NaN instead of blowing up.
RATIO_BIAS_FLOOR = 1e-14

# Verified bound on the internal identity residual; exceeding the looser
# threshold raises ConsistencyError.
SHIFT_RESIDUAL_BOUND = 1e-8
SHIFT_RESIDUAL_FATAL = 1e-6


@dataclass(frozen=True, eq=False)
class EquilibriumResult:
    """Solver output: the point, iteration count, and final residual.

    residual is the infinity norm of x - G(x) for the returned x and is
    at most the requested tolerance on success.
    """

    x: np.ndarray
    iterations: int
    residual: float


@dataclass(frozen=True, eq=False)
class ShiftReport:
    """Per-node and average equilibrium shift caused by a linear transform.

    amplification_ratio is avg_shift / one_off_bias, NaN (with
    ratio_defined False) when the bias is zero within RATIO_BIAS_FLOOR.
    scaling_factor is the uniform-stubbornness closed form and None when
    stubbornness varies across nodes.
    """

    shift: np.ndarray
    avg_shift: float
    one_off_bias: float
    amplification_ratio: float
    ratio_defined: bool
    identity_residual: float
    scaling_factor: float | None

    def to_json(self, include_shift_vector: bool = False) -> dict:
        out = {
            "avg_shift": self.avg_shift,
            "one_off_bias": self.one_off_bias,
            "amplification_ratio": self.amplification_ratio if self.ratio_defined else None,
            "ratio_defined": self.ratio_defined,
            "scaling_factor_closed_form": self.scaling_factor,
        }
        if include_shift_vector:
            out["shift_vector"] = [float(v) for v in self.shift]
        return out


@dataclass(frozen=True)
class ClosedFormShift:
    """Uniform-stubbornness average shift and its scaling factor.

    amplifies is True exactly when m * (1 - lam) > lam, the regime where
    the network compounds the transform's one-off bias.
    """

    average_shift: float
    scaling_factor: float
    amplifies: bool


def _as_stubbornness(lam, n: int) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if lam.ndim == 0:
        lam = np.full(n, float(lam))
    if lam.shape != (n,):
        raise ValidityError(f"stubbornness shape {lam.shape} does not match {n} nodes")
    if lam.size and (lam.min() <= 0.0 or lam.max() >= 1.0):
        raise ValidityError("stubbornness must lie strictly inside (0, 1)")
    return lam


def _as_opinions(x0, n: int) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (n,):
        raise ValidityError(f"opinion vector shape {x0.shape} does not match {n} nodes")
    if x0.size and (x0.min() < 0.0 or x0.max() > 1.0):
        raise ValidityError("opinions must lie in [0, 1]")
    return x0


def _fixed_point(apply_map, x_start: np.ndarray, tol: float, max_iter: int,
                 label: str) -> EquilibriumResult:
    if not tol > 0:
        raise ValidityError(f"tolerance must be positive, got {tol!r}")
    if max_iter < 1:
        raise ValidityError(f"max_iter must be >= 1, got {max_iter}")
    x = x_start.copy()
    resid = np.inf
    for iterations in range(max_iter + 1):
        g = apply_map(x)
        resid = float(np.max(np.abs(g - x))) if x.size else 0.0
        if resid <= tol:
            return EquilibriumResult(x=x, iterations=iterations, residual=resid)
        x = g
    raise ConvergenceError(
        f"{label} did not converge within {max_iter} iterations "
        f"(residual {resid:.3e}, tolerance {tol:.3e})",
        residual=resid,
    )


def fj_equilibrium(
    W: InfluenceMatrix,
    lam,
    x0,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> EquilibriumResult:
    """Equilibrium of the unmediated dynamics x = lam*x0 + (1-lam)*W x."""
    n = W.n
    lam = _as_stubbornness(lam, n)
    x0 = _as_opinions(x0, n)
    anchor = lam * x0
    social = 1.0 - lam

    def apply_map(x):
        return anchor + social * W.dot(x)

    return _fixed_point(apply_map, x0, tol, max_iter, "unmediated equilibrium solve")


def mediated_equilibrium_linear(
    W: InfluenceMatrix,
    lam,
    x0,
    m: float,
    b: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> EquilibriumResult:
    """Equilibrium when every node's expressed opinion passes through
    the linear transform f(x) = m*x + b.

    Solves (I - mC) x = lam*x0 + (1-m)*nu*(1-lam) with C = (I-Lam)W by
    iterating the contraction x -> lam*x0 + (1-m)*nu*(1-lam) + m*(1-lam)*W x,
    whose rate is rho = m * max(1 - lam) < 1.
    """
    n = W.n
    lam = _as_stubbornness(lam, n)
    x0 = _as_opinions(x0, n)
    f = make_linear(m, b)
    social = 1.0 - lam
    const = lam * x0 + (1.0 - f.slope) * f.neutral_point * social

    def apply_map(x):
        return const + f.slope * social * W.dot(x)

    return _fixed_point(apply_map, x0, tol, max_iter, "mediated equilibrium solve")


def convergence_rate_bound(lam, m: float) -> float:
    """Contraction rate rho = m * max(1 - lam) of the mediated map."""
    if not 0.0 < m < 1.0:
        raise ValidityError(f"slope m must lie in the open interval (0, 1), got {m!r}")
    lam = np.asarray(lam, dtype=float)
    if lam.size == 0:
        raise ValidityError("stubbornness vector must be nonempty")
    if lam.min() <= 0.0 or lam.max() >= 1.0:
        raise ValidityError("stubbornness must lie strictly inside (0, 1)")
    return float(m * np.max(1.0 - lam))


def equilibrium_shift(
    W: InfluenceMatrix,
    lam,
    x0,
    m: float,
    b: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> ShiftReport:
    """Shift between the mediated and unmediated equilibria.

    Computes both equilibria, then verifies the closed-form identity
    (I - mC)(shift) = (1-m)(I-Lam)(nu*1 - W x*) before reporting. A
    residual above SHIFT_RESIDUAL_FATAL raises ConsistencyError; the
    verified bound SHIFT_RESIDUAL_BOUND is what the solvers achieve at
    default tolerance.
    """
    n = W.n
    lam = _as_stubbornness(lam, n)
    x0 = _as_opinions(x0, n)
    f = make_linear(m, b)

    base = fj_equilibrium(W, lam, x0, tol=tol, max_iter=max_iter)
    mediated = mediated_equilibrium_linear(W, lam, x0, m, b, tol=tol, max_iter=max_iter)
    shift = mediated.x - base.x

    social = 1.0 - lam
    lhs = shift - f.slope * social * W.dot(shift)
    rhs = (1.0 - f.slope) * social * (f.neutral_point - W.dot(base.x))
    residual = float(np.max(np.abs(lhs - rhs))) if n else 0.0
    if residual > SHIFT_RESIDUAL_FATAL:
        raise ConsistencyError(
            f"equilibrium shift identity residual {residual:.3e} exceeds "
            f"{SHIFT_RESIDUAL_FATAL:.0e}; solver tolerances are inconsistent"
        )

    bias = one_off_bias(f, x0)
    avg_shift = float(shift.mean())
    defined = abs(bias) >= RATIO_BIAS_FLOOR
    ratio = avg_shift / bias if defined else float("nan")

    scaling = None
    if np.ptp(lam) == 0.0:
        scaling = average_shift_closed_form(float(lam[0]), m, b, float(x0.mean())).scaling_factor

    return ShiftReport(
        shift=shift,
        avg_shift=avg_shift,
        one_off_bias=bias,
        amplification_ratio=ratio,
        ratio_defined=defined,
        identity_residual=residual,
        scaling_factor=scaling,
    )


def average_shift_closed_form(lam: float, m: float, b: float, mean_x0: float) -> ClosedFormShift:
    """Average equilibrium shift for uniform stubbornness on a doubly
    stochastic network.

    scaling = (1 - lam) / (lam + (1 - lam)(1 - m)); the average shift is
    scaling times the one-off bias (1 - m)(nu - mean_x0). The shift
    exceeds the one-off bias exactly when m(1 - lam) > lam.
    """
    if not 0.0 < lam < 1.0:
        raise ValidityError(f"uniform stubbornness must lie in (0, 1), got {lam!r}")
    if not 0.0 <= mean_x0 <= 1.0:
        raise ValidityError(f"mean innate opinion must lie in [0, 1], got {mean_x0!r}")
    f = make_linear(m, b)
    scaling = (1.0 - lam) / (lam + (1.0 - lam) * (1.0 - f.slope))
    bias = (1.0 - f.slope) * (f.neutral_point - mean_x0)
    return ClosedFormShift(
        average_shift=scaling * bias,
        scaling_factor=scaling,
        amplifies=bool(f.slope * (1.0 - lam) > lam),
    )


def neumann_identity_check(
    W: InfluenceMatrix,
    alpha: float,
    tol: float = 1e-9,
    max_iter: int = DEFAULT_MAX_ITER,
) -> bool:
    """Check the column identity z.T (I - alpha W) = 1.T, z = 1/(1-alpha) * 1.

    The identity holds exactly for doubly stochastic W; anything else is
    rejected up front. z is solved iteratively (z <- 1 + alpha W.T z)
    and compared against the closed form within tol.
    """
    if not 0.0 < alpha < 1.0:
        raise ValidityError(f"alpha must lie in (0, 1), got {alpha!r}")
    if not tol > 0:
        raise ValidityError(f"tolerance must be positive, got {tol!r}")
    if not validate_doubly_stochastic(W):
        raise ValidityError("neumann identity requires a doubly stochastic matrix")

    n = W.n
    ones = np.ones(n)
    # Stop once the geometric tail is safely below the check tolerance.
    stop = tol * (1.0 - alpha) / 4.0
    z = ones.copy()
    for _ in range(max_iter):
        nxt = ones + alpha * W.transpose_dot(z)
        delta = float(np.max(np.abs(nxt - z)))
        z = nxt
        if delta <= stop or delta == 0.0:
            break
    else:
        raise ConvergenceError(
            f"column-identity solve did not converge within {max_iter} iterations",
            residual=delta,
        )
    return bool(np.max(np.abs(z - 1.0 / (1.0 - alpha))) <= tol)
