"""Generic sparse recovery: orthogonal matching pursuit and SBL via EM.

Both solvers operate on a :class:`SparseProblem` holding a complex
sensing matrix ``A`` (P x Q) and observation ``y`` (P).  OMP greedily
selects atoms by normalized correlation with the residual and refits by
least squares.  SBL places independent CN(0, gamma_q) priors on the
coefficients and learns the prior variances by expectation maximization:

    E-step:  Sigma = (A^H A / sigma^2 + Gamma^-1)^-1
             mu    = Sigma A^H y / sigma^2
    M-step:  gamma_q = |mu_q|^2 + Sigma_qq

which ascends the marginal likelihood of y under
CN(0, sigma^2 I + A Gamma A^H).  The noise variance is held fixed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DivergenceError, NumericalRankError

_GAMMA_ABS_FLOOR = 1e-100


@dataclass(frozen=True)
class SparseProblem:
    """A linear observation ``y = A x + n`` with x presumed sparse.

    Parameters
    ----------
    sensing_matrix : ndarray, shape (P, Q)
        Complex dictionary / sensing product. Must not contain an
        all-zero column.
    observation : ndarray, shape (P,)
    noise_var : float, optional
        Known noise variance; used by SBL when not passed explicitly.
    """

    sensing_matrix: np.ndarray
    observation: np.ndarray
    noise_var: float | None = None

    def __post_init__(self):
        a = np.asarray(self.sensing_matrix)
        y = np.asarray(self.observation).reshape(-1)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError(f"sensing matrix must be 2D and non-empty, got {a.shape}")
        if y.shape[0] != a.shape[0]:
            raise ValueError(
                f"observation length {y.shape[0]} != matrix rows {a.shape[0]}"
            )
        norms = np.linalg.norm(a, axis=0)
        if np.any(norms == 0):
            raise ValueError("sensing matrix contains an all-zero column")
        object.__setattr__(self, "sensing_matrix", a)
        object.__setattr__(self, "observation", y)

    @property
    def shape(self) -> tuple[int, int]:
        return self.sensing_matrix.shape


@dataclass(frozen=True)
class SparseSolution:
    """Solver output: coefficients, support and convergence diagnostics."""

    coefficients: np.ndarray
    support: np.ndarray
    residual_history: tuple[float, ...]
    iterations: int
    converged: bool

    def diagnostics(self) -> dict:
        """JSON-serializable convergence record."""
        return {
            "support": self.support.tolist(),
            "residual_history": list(self.residual_history),
            "iterations": self.iterations,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class SblState:
    """Posterior and prior state of the SBL solver at exit.

    ``covariance`` covers the retained atoms listed in ``active`` (all
    atoms when mid-run pruning is disabled); ``gamma`` and ``mean`` are
    full length with zeros at discarded atoms.
    """

    gamma: np.ndarray
    mean: np.ndarray
    covariance: np.ndarray
    active: np.ndarray
    iterations: int
    evidence: tuple[float, ...] = field(default=())

    def diagnostics(self) -> dict:
        """JSON-serializable prior-variance and evidence record."""
        return {
            "gamma": self.gamma.tolist(),
            "active": self.active.tolist(),
            "iterations": self.iterations,
            "evidence": list(self.evidence),
        }


def omp(
    problem: SparseProblem,
    max_atoms: int | None = None,
    residual_tol: float | None = None,
) -> SparseSolution:
    """Orthogonal matching pursuit with normalized-correlation selection.

    Atoms are scored by ``|a_q^H r| / ||a_q||`` against the current
    residual (columns may carry unequal physical amplitudes), ties break
    toward the lowest index, and the coefficients are refit by least
    squares on the accumulated support after every selection.

    Stops after ``max_atoms`` selections or once
    ``||r|| / ||y|| <= residual_tol``; at least one criterion must be
    given.

    Raises
    ------
    NumericalRankError
        If the support refit becomes rank deficient (duplicate-atom
        pathology).
    """
    if max_atoms is None and residual_tol is None:
        raise ValueError("need max_atoms and/or residual_tol as a stopping rule")
    a = problem.sensing_matrix
    y = problem.observation
    p, q = a.shape
    if max_atoms is not None and not (1 <= max_atoms <= min(p, q)):
        raise ValueError(f"max_atoms must be in [1, min(P, Q)], got {max_atoms}")

    norms = np.linalg.norm(a, axis=0)
    y_norm = np.linalg.norm(y)
    x = np.zeros(q, dtype=complex)
    if y_norm == 0:
        return SparseSolution(
            coefficients=x, support=np.array([], dtype=int),
            residual_history=(0.0,), iterations=0, converged=True,
        )

    support: list[int] = []
    residual = y.copy()
    history = [y_norm]
    converged = residual_tol is not None and 1.0 <= residual_tol
    budget = max_atoms if max_atoms is not None else min(p, q)
    while not converged and len(support) < budget:
        scores = np.abs(a.conj().T @ residual) / norms
        support.append(int(np.argmax(scores)))
        basis = a[:, support]
        coef, _res, rank, _sv = np.linalg.lstsq(basis, y, rcond=None)
        if rank < len(support):
            raise NumericalRankError(
                f"rank-deficient refit on support of size {len(support)}"
            )
        residual = y - basis @ coef
        history.append(float(np.linalg.norm(residual)))
        if residual_tol is not None and history[-1] / y_norm <= residual_tol:
            converged = True
    x[support] = coef
    return SparseSolution(
        coefficients=x, support=np.array(support, dtype=int),
        residual_history=tuple(history), iterations=len(support),
        converged=converged or max_atoms is None,
    )


def _log_evidence_from_chol(chol_c, y) -> float:
    """Log CN(y; 0, C) evidence from a Cholesky factor of C."""
    p = y.shape[0]
    half = scipy.linalg.solve_triangular(chol_c, y, lower=True)
    logdet = 2.0 * np.sum(np.log(np.real(np.diag(chol_c))))
    return float(-p * np.log(np.pi) - logdet - np.real(half.conj() @ half))


def sbl_em(
    problem: SparseProblem,
    sigma2: float | None = None,
    max_iters: int = 200,
    tol: float = 1e-6,
    gamma_floor: float = 1e-8,
    track_evidence: bool = True,
    prune: bool = False,
) -> tuple[SparseSolution, SblState]:
    """Sparse Bayesian learning with fixed noise variance.

    Parameters
    ----------
    problem : SparseProblem
    sigma2 : float, optional
        Noise variance; falls back to ``problem.noise_var``.
    max_iters, tol : EM stopping controls; convergence is declared when
        the largest relative change of any prior variance drops below
        ``tol``.
    gamma_floor : float
        Relative pruning threshold: atoms whose prior variance falls
        below ``gamma_floor * max(gamma)`` are zeroed in the reported
        coefficients.
    track_evidence : bool
        Record the log marginal likelihood at every iteration.
    prune : bool
        Drop atoms below the floor *during* the iteration (standard ARD
        speedup).  Off by default: with pruning deferred to exit, the
        recorded evidence is exactly non-decreasing.

    Returns
    -------
    (SparseSolution, SblState)
        Coefficients are the posterior mean with pruned atoms zeroed.

    Raises
    ------
    DivergenceError
        If an iterate turns non-finite; carries the iteration index.
    """
    if sigma2 is None:
        sigma2 = problem.noise_var
    if sigma2 is None or sigma2 <= 0:
        raise ValueError(f"SBL needs a positive noise variance, got {sigma2}")
    a_full = problem.sensing_matrix
    y = problem.observation
    p, q_full = a_full.shape

    active = np.arange(q_full)
    a = a_full
    a_conj = a.conj()
    gamma = np.ones(q_full)
    mu = np.zeros(q_full, dtype=complex)
    evidence: list[float] = []
    history: list[float] = [float(np.linalg.norm(y))]
    y_energy = float(np.linalg.norm(y) ** 2)
    aha = ahy = None
    iterations = 0
    converged = False

    for it in range(max_iters):
        iterations = it + 1
        q = active.size
        use_primal = q <= p  # invert in coefficient space vs observation space
        if use_primal:
            if aha is None or aha.shape[0] != q:
                aha = a_conj.T @ a
                ahy = a_conj.T @ y
            m = aha / sigma2
            m[np.diag_indices_from(m)] += 1.0 / gamma
            try:
                chol_m = scipy.linalg.cholesky(m, lower=True, check_finite=False)
            except scipy.linalg.LinAlgError as exc:
                raise DivergenceError(f"E-step factorization failed: {exc}", it) from exc
            mu = scipy.linalg.cho_solve((chol_m, True), ahy, check_finite=False) / sigma2
            inv_factor = scipy.linalg.solve_triangular(
                chol_m, np.eye(q, dtype=complex), lower=True, check_finite=False
            )
            sigma_diag = np.real(np.sum(inv_factor.conj() * inv_factor, axis=0))
            if track_evidence:
                # det(sigma2 I + A G A^H) = sigma2^P det(G) det(M)
                logdet_c = (
                    p * np.log(sigma2) + np.sum(np.log(gamma))
                    + 2.0 * np.sum(np.log(np.real(np.diag(chol_m))))
                )
                quad = (y_energy - np.real(y.conj() @ (a @ mu))) / sigma2
                evidence.append(float(-p * np.log(np.pi) - logdet_c - quad))
        else:
            ag = a * gamma
            c = ag @ a_conj.T
            c[np.diag_indices_from(c)] += sigma2
            try:
                chol_c = scipy.linalg.cholesky(c, lower=True, check_finite=False)
            except scipy.linalg.LinAlgError as exc:
                raise DivergenceError(f"E-step factorization failed: {exc}", it) from exc
            if track_evidence:
                evidence.append(_log_evidence_from_chol(chol_c, y))
            cinv_y = scipy.linalg.cho_solve((chol_c, True), y, check_finite=False)
            mu = gamma * (a_conj.T @ cinv_y)
            # diag(A^H C^-1 A) = column norms of L^-1 A
            half = scipy.linalg.solve_triangular(chol_c, a, lower=True, check_finite=False)
            quad_diag = np.real(np.sum(half.conj() * half, axis=0))
            sigma_diag = gamma - gamma ** 2 * quad_diag

        gamma_new = np.abs(mu) ** 2 + np.maximum(sigma_diag, 0.0)
        if not np.all(np.isfinite(gamma_new)) or not np.all(np.isfinite(mu)):
            raise DivergenceError("non-finite EM iterate", it)
        history.append(float(np.linalg.norm(y - a @ mu)))
        delta = np.max(np.abs(gamma_new - gamma) / np.maximum(gamma, _GAMMA_ABS_FLOOR))
        gamma = np.maximum(gamma_new, _GAMMA_ABS_FLOOR)
        if prune:
            keep = gamma >= gamma_floor * gamma.max()
            if not np.all(keep):
                active = active[keep]
                gamma = gamma[keep]
                a = a[:, keep]
                a_conj = a_conj[:, keep]
                aha = ahy = None  # rebuilt on demand for the shrunken set
        if delta < tol:
            converged = True
            break

    # final posterior at the exit prior, over the surviving atoms
    q = active.size
    if q <= p:
        if aha is None or aha.shape[0] != q:
            aha = a_conj.T @ a
            ahy = a_conj.T @ y
        m = aha / sigma2
        m[np.diag_indices_from(m)] += 1.0 / gamma
        chol_m = scipy.linalg.cholesky(m, lower=True, check_finite=False)
        covariance = scipy.linalg.cho_solve(
            (chol_m, True), np.eye(q, dtype=complex), check_finite=False
        )
        mu = covariance @ ahy / sigma2
    else:
        ag = a * gamma
        c = ag @ a_conj.T
        c[np.diag_indices_from(c)] += sigma2
        chol_c = scipy.linalg.cholesky(c, lower=True, check_finite=False)
        cinv_ag = scipy.linalg.cho_solve((chol_c, True), ag, check_finite=False)
        covariance = np.diag(gamma).astype(complex) - ag.conj().T @ cinv_ag
        mu = gamma * (a_conj.T @ scipy.linalg.cho_solve((chol_c, True), y, check_finite=False))
    covariance = 0.5 * (covariance + covariance.conj().T)

    keep = gamma >= gamma_floor * gamma.max()
    mean_full = np.zeros(q_full, dtype=complex)
    mean_full[active] = mu
    gamma_full = np.zeros(q_full)
    gamma_full[active] = gamma
    coefficients = np.zeros(q_full, dtype=complex)
    coefficients[active[keep]] = mu[keep]
    state = SblState(
        gamma=gamma_full, mean=mean_full, covariance=covariance, active=active,
        iterations=iterations, evidence=tuple(evidence),
    )
    solution = SparseSolution(
        coefficients=coefficients, support=active[keep],
        residual_history=tuple(history), iterations=iterations, converged=converged,
    )
    return solution, state
