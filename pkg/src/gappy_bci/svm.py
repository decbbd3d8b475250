"""Binary RBF-kernel SVM trained on the dual by sequential minimal optimisation.

Working pairs are chosen by the maximal-violating-pair rule.  The dual is

    max_a  sum(a) - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
    s.t.   0 <= a_i <= C,  sum(a_i y_i) = 0,

and the solver stops once the largest KKT violation drops below ``tolerance``.
Labels are +/-1 here; :func:`to_signed` maps the pipeline's {0, 1}.
"""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, DimensionMismatch, SingleClassData

TAU = 1e-12

DEFAULT_C_GRID = (0.1, 1.0, 10.0, 100.0)
# "1/d" is resolved against the feature dimension at selection time.
DEFAULT_GAMMA_GRID = (0.01, 0.1, "1/d", 1.0, 10.0)


class NoConvergence(UserWarning):
    pass


@dataclass(frozen=True)
class SvmParams:
    C: float = 1.0
    gamma: float | None = None  # None -> 1 / feature_dim
    tolerance: float = 1e-3
    max_passes: int = 200_000

    def __post_init__(self):
        if self.C <= 0 or self.tolerance <= 0 or self.max_passes <= 0:
            raise ConfigError("C, tolerance and max_passes must be positive")
        if self.gamma is not None and self.gamma <= 0:
            raise ConfigError("gamma must be positive")

    def resolved_gamma(self, dim):
        return 1.0 / dim if self.gamma is None else float(self.gamma)


def to_signed(labels):
    labels = np.asarray(labels)
    return np.where(labels > 0, 1, -1)


def rbf_kernel(a, b, gamma):
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    sq = (np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :] - 2.0 * a @ b.T)
    np.maximum(sq, 0.0, out=sq)
    K = np.exp(-gamma * sq)
    if a is b:
        np.fill_diagonal(K, 1.0)
    return K


@dataclass
class DualSolution:
    alpha: np.ndarray
    rho: float
    iterations: int
    converged: bool
    max_violation: float


def smo(K, y, C, tolerance=1e-3, max_iter=200_000):
    """Solve the dual for a precomputed kernel matrix ``K`` and labels ``y`` in {-1, +1}.

    The decision function is ``sum_i alpha_i y_i K(x_i, x) - rho``.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    Q = (y[:, None] * y[None, :]) * K
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 1/2 a'Qa - sum(a)
    diagQ = np.diag(Q).copy()
    converged = False
    it = 0
    gap = np.inf
    pos = y > 0
    neg = ~pos
    while it < max_iter:
        score = -y * grad
        below_c = alpha < C
        above_0 = alpha > 0
        up = np.where((pos & below_c) | (neg & above_0), score, -np.inf)
        low = np.where((pos & above_0) | (neg & below_c), score, np.inf)
        i = int(np.argmax(up))
        j = int(np.argmin(low))
        gap = up[i] - low[j]
        if not np.isfinite(gap):
            gap = 0.0
            converged = True
            break
        if gap < tolerance:
            converged = True
            break
        it += 1
        ai_old, aj_old = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = max(diagQ[i] + diagQ[j] + 2 * Q[i, j], TAU)
            delta = (-grad[i] - grad[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            quad = max(diagQ[i] + diagQ[j] - 2 * Q[i, j], TAU)
            delta = (grad[i] - grad[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total
        grad += Q[:, i] * (alpha[i] - ai_old) + Q[:, j] * (alpha[j] - aj_old)
    rho = _rho(alpha, y, grad, C)
    return DualSolution(alpha, rho, it, converged, float(gap))


def _rho(alpha, y, grad, C):
    yg = y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return float(np.mean(yg[free]))
    # no free variable: midpoint of the feasible interval
    at_upper = alpha >= C
    at_lower = alpha <= 0
    ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
    lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
    ub = yg[ub_mask].min() if ub_mask.any() else np.inf
    lb = yg[lb_mask].max() if lb_mask.any() else -np.inf
    if np.isfinite(ub) and np.isfinite(lb):
        return float(0.5 * (ub + lb))
    return float(ub if np.isfinite(ub) else lb)


def dual_objective(alpha, y, K):
    v = alpha * y
    return float(alpha.sum() - 0.5 * v @ K @ v)


@dataclass
class SvmModel:
    support_vectors: np.ndarray
    coef: np.ndarray  # alpha_i * y_i
    bias: float
    gamma: float
    params: SvmParams = field(default_factory=SvmParams)
    converged: bool = True
    iterations: int = 0

    @property
    def input_dim(self):
        return self.support_vectors.shape[1]

    def decision_function(self, features):
        x = np.atleast_2d(np.asarray(features, dtype=float))
        if x.shape[1] != self.input_dim:
            raise DimensionMismatch(f"model expects {self.input_dim} features, got {x.shape[1]}")
        return rbf_kernel(x, self.support_vectors, self.gamma) @ self.coef + self.bias

    def predict(self, features):
        """Signed classes (``sign(0) -> +1``) and decision values."""
        f = self.decision_function(features)
        return np.where(f >= 0, 1, -1), f

    def to_dict(self):
        return {
            "kind": "svm",
            "schema_version": 1,
            "input_dim": int(self.input_dim),
            "support_vectors": self.support_vectors.tolist(),
            "coef": self.coef.tolist(),
            "bias": self.bias,
            "gamma": self.gamma,
            "params": asdict(self.params),
            "converged": self.converged,
            "iterations": self.iterations,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["support_vectors"], dtype=float), np.array(d["coef"], dtype=float),
                   float(d["bias"]), float(d["gamma"]), SvmParams(**d["params"]),
                   bool(d.get("converged", True)), int(d.get("iterations", 0)))


def _check_training_data(x, y):
    if x.shape[0] != y.size:
        raise DimensionMismatch("one label per sample is required")
    if x.shape[0] < 2:
        raise ConfigError("need at least two samples")
    if not set(np.unique(y)) <= {-1, 1}:
        raise ConfigError("labels must be -1 or +1")
    if np.unique(y).size < 2:
        raise SingleClassData("both classes must be present")


def train_svm(features, labels, params=SvmParams()):
    """Fit on labels in {-1, +1}.  Warns with :class:`NoConvergence` when the
    iteration budget runs out and returns the best iterate."""
    x = np.atleast_2d(np.asarray(features, dtype=float))
    y = np.asarray(labels).astype(int)
    _check_training_data(x, y)
    gamma = params.resolved_gamma(x.shape[1])
    K = rbf_kernel(x, x, gamma)
    sol = smo(K, y, params.C, params.tolerance, params.max_passes)
    if not sol.converged:
        warnings.warn(f"SMO stopped after {sol.iterations} iterations with violation "
                      f"{sol.max_violation:.3g}", NoConvergence, stacklevel=2)
    sv = sol.alpha > 0
    if not sv.any():  # degenerate; keep one point so the model is well formed
        sv[0] = True
    return SvmModel(x[sv].copy(), (sol.alpha * y)[sv], -sol.rho, gamma, params,
                    sol.converged, sol.iterations)


def predict_svm(model, features):
    return model.predict(features)


def _fold_ids(y, groups, n_folds, rng):
    """Stratified fold assignment; samples sharing a group stay together."""
    folds = np.empty(y.size, dtype=int)
    if groups is None:
        groups = np.arange(y.size)
    groups = np.asarray(groups)
    for cls in (-1, 1):
        g = np.unique(groups[y == cls])
        g = g[rng.permutation(g.size)]
        for k, gid in enumerate(g):
            folds[(groups == gid) & (y == cls)] = k % n_folds
    return folds


def resolve_grid(grid, dim):
    out = []
    for C, gamma in grid:
        if gamma == "1/d":
            gamma = 1.0 / dim
        out.append((float(C), float(gamma)))
    return out


def default_grid():
    return [(C, g) for C in DEFAULT_C_GRID for g in DEFAULT_GAMMA_GRID]


def select_hyperparams(features, labels, grid=None, n_folds=5, seed=0, groups=None,
                       tolerance=1e-3, return_scores=False):
    """Pick ``(C, gamma)`` by k-fold cross-validation on the given (training) data.

    Ties go to the smaller ``C``, then the smaller ``gamma``.
    """
    x = np.atleast_2d(np.asarray(features, dtype=float))
    y = np.asarray(labels).astype(int)
    _check_training_data(x, y)
    grid = resolve_grid(default_grid() if grid is None else grid, x.shape[1])
    if not grid:
        raise ConfigError("hyperparameter grid is empty")
    folds = _fold_ids(y, groups, n_folds, np.random.default_rng(seed))
    scores = {}
    kernels = {}
    for C, gamma in grid:
        if gamma not in kernels:
            kernels[gamma] = rbf_kernel(x, x, gamma)
        K = kernels[gamma]
        accs = []
        for k in range(n_folds):
            test = folds == k
            train = ~test
            if not test.any():
                continue
            ytr = y[train]
            if np.unique(ytr).size < 2:
                continue
            sol = smo(K[np.ix_(train, train)], ytr, C, tolerance)
            f = K[np.ix_(test, train)] @ (sol.alpha * ytr) - sol.rho
            accs.append(np.mean(np.where(f >= 0, 1, -1) == y[test]))
        scores[(C, gamma)] = float(np.mean(accs)) if accs else 0.0
    best = max(sorted(scores), key=lambda cg: (scores[cg], -cg[0], -cg[1]))
    params = SvmParams(C=best[0], gamma=best[1], tolerance=tolerance)
    return (params, scores) if return_scores else params
