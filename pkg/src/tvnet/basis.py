"""Joint estimation of basis network structures and per-time sparse
combination codes.

The objective being minimized is

    L(A, B) = sum_t sum_{t'} k(t, t') ||x_{t'} - sum_i beta_t^i A^i x_{t'}||^2
              + sum_t [ (alpha*lam_b/2) ||beta_t||^2 + (1-alpha)*lam_b ||beta_t||_1 ]
              + lam_A sum_i ||A^i||_1

over symmetric, zero-diagonal bases A^i and codes beta_t. Codes are solved
exactly per time by elastic-net coordinate descent on pseudo-dictionaries
D_t (column i = A^i x_t); bases take one proximal gradient step per outer
iteration, with gradients symmetrized and diagonal-zeroed so iterates stay in
the feasible subspace, and a backtracking line search on the full objective.
"""

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .elastic_net import (ElasticNetConfig, QuadraticProblem, kkt_residuals,
                          soft_threshold, solve_elastic_net)
from .errors import DegenerateInitializationError, InvalidInputError
from .kernels import KernelSpec, weight_profile, window_bounds


@dataclass
class BasisSet:
    """k symmetric zero-diagonal n x n basis structure matrices, stored as a
    (k, n, n) array."""

    bases: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.bases, dtype=float)
        if B.ndim != 3 or B.shape[1] != B.shape[2]:
            raise InvalidInputError("bases must be a k x n x n array")
        if not np.all(np.isfinite(B)):
            raise InvalidInputError("bases contain non-finite entries")
        scale = max(1.0, np.abs(B).max())
        if np.abs(B - np.transpose(B, (0, 2, 1))).max() > 1e-10 * scale:
            raise InvalidInputError("every basis must be symmetric")
        if np.abs(B[:, np.arange(B.shape[1]), np.arange(B.shape[1])]).max(initial=0.0) != 0.0:
            raise InvalidInputError("every basis must have an exactly zero diagonal")
        self.bases = B

    @property
    def n(self):
        return self.bases.shape[1]

    @property
    def k(self):
        return self.bases.shape[0]


@dataclass
class StructureCode:
    code: np.ndarray
    time: int
    converged: bool = True


@dataclass(frozen=True)
class LineSearchConfig:
    shrink: float = 0.5
    sufficient_decrease: float = 1e-4
    max_backtracks: int = 30
    initial_step: float = 1.0


@dataclass(frozen=True)
class FitConfig:
    k: int
    lambda_beta: float
    alpha: float
    lambda_A: float
    kernel: KernelSpec
    batch_size: int = 2 ** 31 - 1
    max_outer_iters: int = 100
    rel_tol: float = 1e-6
    line_search: LineSearchConfig = LineSearchConfig()
    seed: int = 0
    init_mode: str = "random"          # 'random' or 'keller_pca', used when fit(init=None)
    init_keller_lambda: float = 0.1
    solver_tol: float = 1e-8
    solver_max_sweeps: int = 10000

    def __post_init__(self):
        if self.k < 1:
            raise InvalidInputError("k must be >= 1")
        if self.lambda_beta < 0 or self.lambda_A < 0:
            raise InvalidInputError("regularization weights must be nonnegative")
        if not (0.0 <= self.alpha <= 1.0):
            raise InvalidInputError("alpha must lie in [0, 1]")
        if self.batch_size < 1 or self.max_outer_iters < 1:
            raise InvalidInputError("batch_size and max_outer_iters must be positive")


@dataclass
class FitResult:
    bases: BasisSet
    codes: list
    objective_trace: list
    converged: bool


def project_symmetric_hollow(M):
    """Project onto the symmetric zero-diagonal subspace: 0.5*(M + M') with
    the diagonal zeroed."""
    S = 0.5 * (M + np.swapaxes(M, -1, -2))
    if S.ndim == 2:
        np.fill_diagonal(S, 0.0)
    else:
        idx = np.arange(S.shape[-1])
        S[..., idx, idx] = 0.0
    return S


def pseudo_dictionary(bases, x):
    """n x k matrix whose column i is A^i x."""
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != bases.n:
        raise InvalidInputError("x length must match basis dimension")
    return np.einsum("kij,j->ik", bases.bases, x)


def _all_dictionaries(bases, X):
    """(T, n, k) stack of pseudo-dictionaries for every row of X."""
    return np.einsum("kij,tj->tik", bases.bases, X)


def _coding_problem(Y, X, t, kernel):
    """QuadraticProblem of the kernel-weighted coding objective at target t,
    built from the dictionary stack Y."""
    T = X.shape[0]
    lo, hi = window_bounds(t, T, kernel)
    w = weight_profile(t, np.arange(lo, hi), kernel)
    rw = np.sqrt(w)
    k = Y.shape[2]
    Z = (Y[lo:hi] * rw[:, None, None]).reshape(-1, k)
    z = (X[lo:hi] * rw[:, None]).ravel()
    G = Z.T @ Z
    b = Z.T @ z
    c = float(z @ z)
    return QuadraticProblem(gram=0.5 * (G + G.T), linear=b, offset=c)


def infer_codes(bases, X, kernel, lambda_beta, alpha, times,
                warm_starts=None, solver_tol=1e-8, solver_max_sweeps=10000):
    """Solve the per-time elastic-net coding problems for the given target
    times, each over its full truncated kernel window."""
    X = np.asarray(X, dtype=float)
    Y = _all_dictionaries(bases, X)
    config = ElasticNetConfig(lam=lambda_beta, alpha=alpha,
                              tol=solver_tol, max_sweeps=solver_max_sweeps)
    out = []
    for idx, t in enumerate(times):
        problem = _coding_problem(Y, X, t, kernel)
        ws = None if warm_starts is None else warm_starts[idx]
        res = solve_elastic_net(problem, config, warm_start=ws)
        out.append(StructureCode(code=res.coef, time=int(t), converged=res.converged))
    return out


def _code_penalty(code, lambda_beta, alpha):
    b = code
    return (0.5 * alpha * lambda_beta * float(b @ b)
            + (1.0 - alpha) * lambda_beta * float(np.abs(b).sum()))


def objective_components(bases, codes, X, config):
    """(data_fit, code_penalty, basis_penalty) of the joint objective."""
    X = np.asarray(X, dtype=float)
    Y = _all_dictionaries(bases, X)
    T = X.shape[0]
    data_fit = 0.0
    code_pen = 0.0
    for c in codes:
        lo, hi = window_bounds(c.time, T, config.kernel)
        w = weight_profile(c.time, np.arange(lo, hi), config.kernel)
        R = X[lo:hi] - Y[lo:hi] @ c.code
        data_fit += float(w @ np.einsum("tn,tn->t", R, R))
        code_pen += _code_penalty(c.code, config.lambda_beta, config.alpha)
    basis_pen = config.lambda_A * float(np.abs(bases.bases).sum())
    return data_fit, code_pen, basis_pen


def objective(bases, codes, X, config):
    """Scalar value of the joint objective."""
    return sum(objective_components(bases, codes, X, config))


def unsupervised_basis_gradient(bases, codes, X, kernel):
    """Exact gradient of the data-fit term with respect to each basis,
    restricted to the symmetric zero-diagonal subspace.

    Per-dictionary gradients dL/dD_s = sum_t k(t,s) * (-2) (x_s - D_s b_t) b_t'
    are accumulated, then backpropagated through D_s formation
    (dA^i += column i of dL/dD_s times x_s'), then projected.
    """
    X = np.asarray(X, dtype=float)
    T, n = X.shape
    k = bases.k
    Y = _all_dictionaries(bases, X)
    # u_s = sum_t w(t,s) b_t ; C_s = sum_t w(t,s) b_t b_t'
    u = np.zeros((T, k))
    C = np.zeros((T, k, k))
    for c in codes:
        lo, hi = window_bounds(c.time, T, kernel)
        w = weight_profile(c.time, np.arange(lo, hi), kernel)
        u[lo:hi] += np.outer(w, c.code)
        C[lo:hi] += w[:, None, None] * np.outer(c.code, c.code)
    # dL/dD_s = -2 (x_s u_s' - D_s C_s), shape (T, n, k)
    dD = -2.0 * (X[:, :, None] * u[:, None, :] - np.einsum("snk,skl->snl", Y, C))
    grads = np.einsum("sni,sm->inm", dD, X)
    return project_symmetric_hollow(grads)


def proximal_l1_step(basis, gradient, step, lambda_A):
    """Gradient step followed by off-diagonal soft-thresholding; diagonal
    stays exactly zero and symmetry is preserved."""
    if not step > 0:
        raise InvalidInputError("step must be positive")
    Z = np.asarray(basis, dtype=float) - step * np.asarray(gradient, dtype=float)
    out = soft_threshold(Z, step * lambda_A)
    np.fill_diagonal(out, 0.0)
    return out


def line_search(current_objective, candidate_evaluator, gradient_norm_sq,
                config, initial_step=None):
    """Backtracking line search with the Armijo sufficient-decrease test
    f(step) <= current - c1 * step * ||grad||^2.

    Returns (step, accepted); (0.0, False) when no trial step qualifies.
    """
    if gradient_norm_sq < 0:
        raise InvalidInputError("gradient_norm_sq must be nonnegative")
    ls = config.line_search if isinstance(config, FitConfig) else config
    step = ls.initial_step if initial_step is None else initial_step
    for _ in range(ls.max_backtracks):
        value = candidate_evaluator(step)
        if value <= current_objective - ls.sufficient_decrease * step * gradient_norm_sq:
            return step, True
        step *= ls.shrink
    return 0.0, False


def _vec_upper(M):
    n = M.shape[-1]
    iu = np.triu_indices(n, 1)
    return M[..., iu[0], iu[1]]


def _from_upper(v, n):
    iu = np.triu_indices(n, 1)
    A = np.zeros((n, n))
    A[iu] = v
    return A + A.T


def _fix_sign(A):
    flat = np.abs(A).argmax()
    if A.flat[flat] < 0:
        return -A
    return A


def random_hollow_bases(n, k, seed):
    """Seeded random symmetric zero-diagonal matrices with unit Frobenius
    norm."""
    rng = np.random.default_rng(seed)
    out = np.empty((k, n, n))
    for i in range(k):
        A = project_symmetric_hollow(rng.standard_normal((n, n)))
        out[i] = _fix_sign(A / np.linalg.norm(A))
    return BasisSet(bases=out)


def init_bases_pca(estimates, k, seed=0):
    """Principal structures of a sequence of network estimates.

    Estimates are symmetrized, their strict upper triangles stacked, and the
    top-k right singular vectors (plain uncentered SVD) reshaped back into
    symmetric zero-diagonal bases with unit off-diagonal Frobenius norm. The
    sign of each basis is fixed so its largest-magnitude entry is positive.
    """
    if len(estimates) == 0 or k < 1:
        raise InvalidInputError("need at least one estimate and k >= 1")
    mats = [0.5 * (np.asarray(e.coefficients, dtype=float)
                   + np.asarray(e.coefficients, dtype=float).T) for e in estimates]
    n = mats[0].shape[0]
    S = np.stack([_vec_upper(M) for M in mats])
    if np.abs(S).max(initial=0.0) == 0.0:
        raise DegenerateInitializationError("all estimates are zero")
    U, s, Vt = np.linalg.svd(S, full_matrices=False)
    rank = int(np.sum(s > s[0] * 1e-12))
    out = np.empty((k, n, n))
    for i in range(min(k, rank)):
        A = _from_upper(Vt[i], n)
        out[i] = _fix_sign(A / np.linalg.norm(A))
    if k > rank:
        warnings.warn(f"requested {k} bases but estimates have rank {rank}; "
                      "filling the remainder with seeded random structures")
        filler = random_hollow_bases(n, k - rank, seed).bases
        out[rank:] = filler
    return BasisSet(bases=out)


def _descend(X, config, init_bases, supervised=None):
    """Shared block-coordinate loop for the unsupervised and supervised fits.

    With supervised=None (or gamma == 1) the supervised terms are skipped
    entirely, so a gamma=1 supervised run reproduces the unsupervised run
    bit for bit.
    """
    X = np.asarray(X, dtype=float)
    T = X.shape[0]
    rng = np.random.default_rng(config.seed)
    bases = BasisSet(bases=init_bases.bases.copy())

    pure_unsup = supervised is None or supervised.gamma >= 1.0
    gamma = 1.0 if pure_unsup else supervised.gamma

    # codes for every time so the full objective is always evaluable;
    # non-batch codes are refreshed lazily (batch targets only per iteration)
    codes = infer_codes(bases, X, config.kernel, config.lambda_beta, config.alpha,
                        range(T), solver_tol=config.solver_tol,
                        solver_max_sweeps=config.solver_max_sweeps)
    if supervised is not None:
        supervised.refit(codes)

    batch = min(config.batch_size, T)
    iters_per_pass = max(1, int(np.ceil(T / batch)))
    trace = [_full_objective(bases, codes, X, config, supervised, gamma)]
    converged = False
    prev_step = None
    pass_start_obj = trace[0]
    accepted_in_pass = False

    for it in range(config.max_outer_iters):
        if batch >= T:
            targets = np.arange(T)
        else:
            targets = np.sort(rng.choice(T, size=batch, replace=False))
        warm = [codes[t].code for t in targets]
        new_codes = infer_codes(bases, X, config.kernel, config.lambda_beta,
                                config.alpha, targets, warm_starts=warm,
                                solver_tol=config.solver_tol,
                                solver_max_sweeps=config.solver_max_sweeps)
        for c in new_codes:
            codes[c.time] = c
        if supervised is not None:
            supervised.refit(codes)
        batch_codes = [codes[t] for t in targets]

        Y = _all_dictionaries(bases, X)
        grad = unsupervised_basis_gradient(bases, batch_codes, X, config.kernel)
        if not pure_unsup:
            sup_grad = supervised.basis_gradient(bases, batch_codes, X, Y)
            grad = project_symmetric_hollow(gamma * grad + (1.0 - gamma) * sup_grad)
        gns = float(np.sum(grad * grad))

        current = _full_objective(bases, codes, X, config, supervised, gamma)

        def evaluate(step):
            cand = np.stack([proximal_l1_step(bases.bases[i], grad[i], step,
                                              config.lambda_A)
                             for i in range(config.k)])
            cand_set = BasisSet(bases=cand)
            val = gamma * objective(cand_set, codes, X, config)
            if not pure_unsup:
                val += (1.0 - gamma) * supervised.resolve_and_loss(
                    cand_set, X, targets, [codes[t].code for t in targets])
            return val

        if prev_step is None:
            s0 = 1.0 / max(np.sqrt(gns), 1e-12)
        else:
            s0 = 2.0 * prev_step
        step, accepted = line_search(current, evaluate, gns, config,
                                     initial_step=s0)
        if accepted:
            prev_step = step
            accepted_in_pass = True
            bases = BasisSet(bases=np.stack([
                proximal_l1_step(bases.bases[i], grad[i], step, config.lambda_A)
                for i in range(config.k)]))
            trace.append(_full_objective(bases, codes, X, config, supervised, gamma))

        if (it + 1) % iters_per_pass == 0:
            cur = trace[-1]
            denom = max(1.0, abs(pass_start_obj))
            if abs(pass_start_obj - cur) <= config.rel_tol * denom:
                converged = True
                break
            if not accepted_in_pass:
                converged = False
                break
            pass_start_obj = cur
            accepted_in_pass = False

    # canonical sign: jointly flipping a basis and its code trajectory leaves
    # the objective unchanged, so fix each basis sign by requiring the code
    # component sum over time to be nonnegative
    code_sums = np.sum([c.code for c in codes], axis=0)
    flip = np.where(code_sums < 0.0, -1.0, 1.0)
    bases = BasisSet(bases=bases.bases * flip[:, None, None])
    for c in codes:
        c.code = c.code * flip

    # full refresh at exit so every stored code is optimal for the final bases
    codes = infer_codes(bases, X, config.kernel, config.lambda_beta, config.alpha,
                        range(T), warm_starts=[c.code for c in codes],
                        solver_tol=config.solver_tol,
                        solver_max_sweeps=config.solver_max_sweeps)
    if supervised is not None:
        supervised.refit(codes)
    trace.append(_full_objective(bases, codes, X, config, supervised, gamma))
    return FitResult(bases=bases, codes=codes, objective_trace=trace,
                     converged=converged)


def _full_objective(bases, codes, X, config, supervised, gamma):
    val = gamma * objective(bases, codes, X, config)
    if supervised is not None and gamma < 1.0:
        val += (1.0 - gamma) * supervised.loss(codes)
    return val


def fit(X, config, init=None):
    """Block coordinate descent on the joint objective: exact elastic-net
    code refresh for the batch targets, then one proximal gradient step on
    all bases with line search."""
    X = np.asarray(X, dtype=float)
    if init is None:
        if config.init_mode == "keller_pca":
            from .keller import fit_sequence
            T = X.shape[0]
            times = np.unique(np.linspace(0, T - 1, min(T, 200)).astype(int))
            ests = fit_sequence(X, config.kernel, config.init_keller_lambda, times)
            init = init_bases_pca(ests, config.k, seed=config.seed)
        elif config.init_mode == "random":
            init = random_hollow_bases(X.shape[1], config.k, config.seed)
        else:
            raise InvalidInputError(f"unknown init_mode {config.init_mode!r}")
    if init.k != config.k or init.n != X.shape[1]:
        raise InvalidInputError("init basis set shape does not match config/data")
    return _descend(X, config, init, supervised=None)
