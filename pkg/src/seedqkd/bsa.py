"""Best-separable-approximation SDPs and key-rate upper bounds.

For each photon number the observed statistics constrain the bipartite
state Alice and Bob would share in the equivalent entanglement-based
protocol.  Maximizing the trace of a positive, PPT part sigma_sep that is
dominated by a compatible state sigma_AB yields the separability weight
lambda; key can only come from the remaining entangled part

    rho_ent = (sigma_AB - sigma_sep) / (1 - lambda),

and the rate is bounded by sum_n r_n (1 - lambda_n) I_n, with r_n the
photon-number distribution of the emitted signal and I_n the mutual
information of the entangled part's outcome statistics.  Requiring
sigma_sep to be PPT rather than separable only enlarges lambda, which
keeps the bound valid (key from PPT-entangled states is disregarded).

All certificates (positivity, PPT, statistics reproduction) are re-checked
after each solve by plain eigenvalue computations, independent of the
conic solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import cvxpy as cp
import numpy as np

from seedqkd.channel import LinkConfig
from seedqkd.core import poisson_weight
from seedqkd.fock_bb84 import (
    DEFAULT_BB84_CAP,
    PhotonStatsBB84,
    bb84_photon_stats,
)
from seedqkd.fock_mdi import ANNOUNCEMENTS, PhotonStatsMDI, mdi_photon_stats

__all__ = [
    "BipartiteState",
    "BsaResult",
    "CertificateReport",
    "InfeasibleStatisticsError",
    "SolverFailureError",
    "reduced_state_alice",
    "bob_virtual_povm",
    "alice_projectors",
    "solve_bsa_bb84",
    "solve_bsa_mdi",
    "bb84_upper_bound",
    "mdi_upper_bound",
    "bb84_entangled_terms",
    "mdi_entangled_terms",
    "mutual_information_on",
    "partial_transpose",
]

#: Default photon-number truncations of the upper-bound summations.
DEFAULT_BB84_NMAX = 10
DEFAULT_MDI_NMAX = 5

#: Separability weights above 1 - LAMBDA_ONE_TOL are treated as fully
#: separable (the term contributes no key and rho_ent is undefined).
LAMBDA_ONE_TOL = 1e-7

#: Solver cascade: CVXOPT's interior-point method delivers ~1e-10 cone
#: feasibility on these small dense problems; CLARABEL and SCS back it up.
_SOLVER_ATTEMPTS: tuple[tuple[str, dict], ...] = (
    ("CVXOPT", {}),
    ("CLARABEL", {}),
    ("SCS", {"eps": 1e-9, "max_iters": 50_000}),
)


def _overlap_matrix() -> np.ndarray:
    """Pairwise overlaps <phi_k'|phi_k> of the four signal polarizations."""
    s = 1.0 / math.sqrt(2.0)
    return np.array(
        [
            [1.0, 0.0, s, s],
            [0.0, 1.0, s, -s],
            [s, s, 1.0, 0.0],
            [s, -s, 0.0, 1.0],
        ]
    )


class InfeasibleStatisticsError(RuntimeError):
    """No bipartite state reproduces the supplied statistics."""


class SolverFailureError(RuntimeError):
    """The conic solver did not return a usable solution."""


@dataclass(frozen=True)
class BipartiteState:
    """A Hermitian PSD matrix on a tensor-product space.

    The trace is recorded explicitly because the separable parts handled
    by the programs are deliberately unnormalized.
    """

    dim_a: int
    dim_b: int
    matrix: np.ndarray

    def __post_init__(self) -> None:
        d = self.dim_a * self.dim_b
        if self.matrix.shape != (d, d):
            raise ValueError(f"matrix must be {d}x{d}")
        if np.max(np.abs(self.matrix - self.matrix.conj().T)) > 1e-10:
            raise ValueError("matrix is not Hermitian within 1e-10")
        if np.min(np.linalg.eigvalsh(self.matrix)) < -1e-9:
            raise ValueError("matrix has an eigenvalue below -1e-9")

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))


@dataclass(frozen=True)
class BsaResult:
    """Outcome of one best-separable-approximation program.

    ``rho_ent`` is None when the statistics are (numerically) fully
    separable, i.e. lambda_bsa >= 1 - LAMBDA_ONE_TOL.  ``sigma_ab`` and
    ``sigma_sep`` are retained for post-hoc certificate checks.
    """

    lambda_bsa: float
    rho_ent: BipartiteState | None
    sigma_ab: np.ndarray
    sigma_sep: np.ndarray
    dims: tuple[int, int]
    stats_residual: float
    solver_status: str


@dataclass(frozen=True)
class CertificateReport:
    """Solver-independent eigenvalue/residual checks of a BsaResult."""

    lambda_bsa: float
    sigma_ab_min_eig: float
    sep_min_eig: float
    sep_ppt_min_eig: float
    diff_min_eig: float
    stats_residual: float
    rho_ent_ppt_min_eig: float | None

    def ok(
        self,
        eig_tol: float = -1e-9,
        residual_tol: float = 1e-7,
        lambda_slack: float = 1e-9,
    ) -> bool:
        return (
            -lambda_slack <= self.lambda_bsa <= 1.0 + lambda_slack
            and self.sigma_ab_min_eig >= eig_tol
            and self.sep_min_eig >= eig_tol
            and self.sep_ppt_min_eig >= eig_tol
            and self.diff_min_eig >= eig_tol
            and self.stats_residual <= residual_tol
        )


def partial_transpose(matrix: np.ndarray, dims: tuple[int, int]) -> np.ndarray:
    """Transpose the second subsystem of a bipartite matrix."""
    da, db = dims
    return (
        matrix.reshape(da, db, da, db).transpose(0, 3, 2, 1).reshape(da * db, da * db)
    )


def reduced_state_alice(n: int) -> np.ndarray:
    """Alice's reduced state when sending n-photon signals.

    Entry (k, k') is <phi_k'|phi_k>^n / 4, the Gram matrix of the four
    n-photon polarization states (0^0 = 1, so n = 0 gives the all-ones
    matrix of the common vacuum state).  Diagonal 1/4; the nonzero
    off-diagonal entries are 2^{-n/2} / 4 with sign (-1)^n between the
    V and minus states.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    overlaps = _overlap_matrix()
    with np.errstate(invalid="ignore"):
        powered = np.sign(overlaps) ** n * np.abs(overlaps) ** n
    powered[overlaps == 0.0] = 0.0 if n > 0 else 1.0
    return powered / 4.0


def alice_projectors() -> list[np.ndarray]:
    """Projectors |k><k| of Alice's virtual four-outcome measurement."""
    return [np.diag((np.arange(4) == k).astype(float)) for k in range(4)]


def bob_virtual_povm() -> list[np.ndarray]:
    """Bob's five-element virtual measurement on qubit + vacuum.

    Order matches the outcome labels (0, 1, +, -, vac): the four basis
    outcomes carry the 1/2 of the uniform basis choice and the vacuum
    projector completes the identity.
    """
    zero = np.zeros((3, 3))
    b0, b1, bp, bm, bv = (zero.copy() for _ in range(5))
    b0[0, 0] = 0.5
    b1[1, 1] = 0.5
    plus = np.array([1.0, 1.0, 0.0]) / math.sqrt(2.0)
    minus = np.array([1.0, -1.0, 0.0]) / math.sqrt(2.0)
    bp += 0.5 * np.outer(plus, plus)
    bm += 0.5 * np.outer(minus, minus)
    bv[2, 2] = 1.0
    return [b0, b1, bp, bm, bv]


def mdi_projectors() -> list[np.ndarray]:
    """Projectors |j><j| of either party's virtual measurement in MDI."""
    return alice_projectors()


def _solve_problem(problem: cp.Problem) -> str:
    """Run the solver cascade until one returns an optimal solution.

    An inaccurate-but-optimal status from the last resort is accepted; the
    post-hoc certificates decide whether the solution is usable.
    """
    status: str | None = None
    for solver, opts in _SOLVER_ATTEMPTS:
        try:
            problem.solve(solver=solver, **opts)
        except cp.error.SolverError:
            continue
        status = problem.status
        if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            raise InfeasibleStatisticsError(
                "no bipartite state reproduces the supplied statistics"
            )
        if status == cp.OPTIMAL:
            return str(status)
    if status == cp.OPTIMAL_INACCURATE:
        return str(status)
    raise SolverFailureError(f"all solvers failed, last status {status!r}")


def _hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def _finalize_result(
    sigma_ab: np.ndarray,
    sigma_sep: np.ndarray,
    dims: tuple[int, int],
    stats_residual: float,
    status: str,
) -> BsaResult:
    sigma_ab = _hermitize(sigma_ab)
    sigma_sep = _hermitize(sigma_sep)
    lam = float(np.clip(np.real(np.trace(sigma_sep)), 0.0, 1.0))
    rho_ent = None
    if lam < 1.0 - LAMBDA_ONE_TOL:
        ent = _hermitize(sigma_ab - sigma_sep)
        # The difference is PSD up to solver feasibility noise, which gets
        # amplified by the 1/(1-lambda) normalization; clip it.  The raw
        # matrices keep the untouched values for the certificate checks.
        vals, vecs = np.linalg.eigh(ent)
        ent = (vecs * np.clip(vals, 0.0, None)) @ vecs.conj().T
        ent /= np.real(np.trace(ent))
        rho_ent = BipartiteState(dim_a=dims[0], dim_b=dims[1], matrix=_hermitize(ent))
    return BsaResult(
        lambda_bsa=lam,
        rho_ent=rho_ent,
        sigma_ab=sigma_ab,
        sigma_sep=sigma_sep,
        dims=dims,
        stats_residual=stats_residual,
        solver_status=status,
    )


def solve_bsa_bb84(n: int, stats: PhotonStatsBB84) -> BsaResult:
    """Maximum separability weight compatible with n-photon statistics.

    The compatible states live on Alice's four-dimensional preparation
    register tensored with Bob's qubit-plus-vacuum space; they must
    reproduce ``stats.table``, have Alice's reduced state fixed by her
    source, and dominate a PPT part whose trace is maximized.

    The state is parametrized as sigma_ab = sigma_sep + sigma_diff with
    both summands declared cone variables, so the dominance constraint
    sigma_ab - sigma_sep >= 0 holds at cone-membership accuracy instead of
    accumulating the residuals of two separate variables.
    """
    dims = (4, 3)
    d = dims[0] * dims[1]
    rho_a = reduced_state_alice(n)
    a_ops = alice_projectors()
    b_ops = bob_virtual_povm()

    # All constraint data are real matrices, so by conjugation symmetry a
    # real optimum exists; real symmetric variables halve the cone sizes.
    sigma_sep = cp.Variable((d, d), symmetric=True)
    sigma_diff = cp.Variable((d, d), symmetric=True)
    sigma_ab = sigma_sep + sigma_diff
    constraints = [
        sigma_sep >> 0,
        sigma_diff >> 0,
        cp.partial_transpose(sigma_sep, list(dims), axis=1) >> 0,
    ]
    # The statistics constraints pin the diagonal of the reduced state and
    # the total trace, so only the off-diagonal part of the reduced-state
    # condition is imposed; keeping the equality system full rank avoids
    # singular interior-point iterations.
    reduced = cp.partial_trace(sigma_ab, list(dims), axis=1)
    for i in range(4):
        for j in range(i + 1, 4):
            constraints.append(reduced[i, j] == rho_a[i, j])
    kraus = [
        [np.kron(a_ops[k], b_ops[j]) for j in range(5)] for k in range(4)
    ]
    for k in range(4):
        for j in range(5):
            constraints.append(
                cp.trace(kraus[k][j] @ sigma_ab) == stats.table[k, j]
            )
    problem = cp.Problem(cp.Maximize(cp.trace(sigma_sep)), constraints)
    status = _solve_problem(problem)

    sep = np.asarray(sigma_sep.value)
    ab = sep + np.asarray(sigma_diff.value)
    residual = max(
        abs(float(np.real(np.trace(kraus[k][j] @ ab))) - stats.table[k, j])
        for k in range(4)
        for j in range(5)
    )
    return _finalize_result(ab, sep, dims, residual, status)


def solve_bsa_mdi(n: int, m: int, announcement: str, stats: PhotonStatsMDI) -> BsaResult:
    """Maximum separability weight for one relay announcement.

    One state per announcement reproduces that announcement's conditional
    statistics; their announcement-probability mixture must equal the
    product of the two senders' reduced states.  The separable part is
    carved out of the state of the requested announcement.
    """
    if announcement not in ANNOUNCEMENTS:
        raise ValueError(f"unknown announcement {announcement!r}")
    dims = (4, 4)
    d = 16
    product = np.kron(reduced_state_alice(n), reduced_state_alice(m))
    a_ops = alice_projectors()
    b_ops = mdi_projectors()
    kraus = [[np.kron(a_ops[k], b_ops[j]) for j in range(4)] for k in range(4)]
    p_c = stats.p_c_given_nm

    # Variables: the target announcement's state split into separable and
    # entangled cone parts, plus one state per other announcement.  The
    # state of the last announcement is eliminated through the mixture
    # constraint sum_t p_t sigma_t = rho_A x rho_B, whose own statistics
    # and trace conditions are then implied by the others.
    sigma_sep = cp.Variable((d, d), symmetric=True)
    sigma_diff = cp.Variable((d, d), symmetric=True)
    others = [t for t in ANNOUNCEMENTS if t != announcement]
    explicit: dict[str, cp.Expression] = {announcement: sigma_sep + sigma_diff}
    for t in others[:-1]:
        explicit[t] = cp.Variable((d, d), symmetric=True)
    eliminated = others[-1]
    remainder = product - sum(p_c[t] * explicit[t] for t in explicit)
    constraints = [
        sigma_sep >> 0,
        sigma_diff >> 0,
        cp.partial_transpose(sigma_sep, list(dims), axis=1) >> 0,
        remainder >> 0,
    ]
    # The 16 statistics of each explicit state pin its full diagonal and
    # hence its trace; adding an explicit trace constraint would make the
    # equality system rank deficient.
    for t, expr in explicit.items():
        if t != announcement:
            constraints.append(expr >> 0)
        table = stats.tables[t]
        for k in range(4):
            for j in range(4):
                constraints.append(
                    cp.trace(kraus[k][j] @ expr) == table[k, j]
                )
    problem = cp.Problem(cp.Maximize(cp.trace(sigma_sep)), constraints)
    status = _solve_problem(problem)

    sep = np.asarray(sigma_sep.value)
    ab = sep + np.asarray(sigma_diff.value)
    values = {t: np.asarray(expr.value) for t, expr in explicit.items()}
    if p_c[eliminated] > 0.0:
        values[eliminated] = (
            product - sum(p_c[t] * values[t] for t in explicit)
        ) / p_c[eliminated]
    residual = max(
        abs(float(np.real(np.trace(kraus[k][j] @ values[t]))) - stats.tables[t][k, j])
        for t in values
        for k in range(4)
        for j in range(4)
    )
    return _finalize_result(ab, sep, dims, residual, status)


def certificate_report(
    result: BsaResult, stats_table: np.ndarray | None = None
) -> CertificateReport:
    """Eigenvalue/residual certificates recomputed from the raw matrices."""
    dims = result.dims
    sep_eigs = np.linalg.eigvalsh(result.sigma_sep)
    sep_ppt_eigs = np.linalg.eigvalsh(partial_transpose(result.sigma_sep, dims))
    diff_eigs = np.linalg.eigvalsh(result.sigma_ab - result.sigma_sep)
    ab_eigs = np.linalg.eigvalsh(result.sigma_ab)
    rho_ppt = None
    if result.rho_ent is not None:
        rho_ppt = float(
            np.min(np.linalg.eigvalsh(partial_transpose(result.rho_ent.matrix, dims)))
        )
    return CertificateReport(
        lambda_bsa=result.lambda_bsa,
        sigma_ab_min_eig=float(np.min(ab_eigs)),
        sep_min_eig=float(np.min(sep_eigs)),
        sep_ppt_min_eig=float(np.min(sep_ppt_eigs)),
        diff_min_eig=float(np.min(diff_eigs)),
        stats_residual=result.stats_residual,
        rho_ent_ppt_min_eig=rho_ppt,
    )


def mutual_information_on(
    rho_ent: BipartiteState,
    a_ops: list[np.ndarray],
    b_ops: list[np.ndarray],
) -> float:
    """Shannon mutual information (bits) of q_kj = Tr[(A_k x B_j) rho]."""
    q = np.array(
        [
            [
                float(np.real(np.trace(np.kron(a, b) @ rho_ent.matrix)))
                for b in b_ops
            ]
            for a in a_ops
        ]
    )
    q = np.clip(q, 0.0, None)
    total = q.sum()
    if total <= 0.0:
        return 0.0
    q /= total
    pa = q.sum(axis=1, keepdims=True)
    pb = q.sum(axis=0, keepdims=True)
    mask = q > 0.0
    return float(np.sum(q[mask] * np.log2(q[mask] / (pa @ pb)[mask])))


@dataclass(frozen=True)
class Bb84UpperTerm:
    """One photon-number contribution to the BB84 upper bound."""

    n: int
    lambda_bsa: float
    mutual_info: float
    result: BsaResult
    stats: PhotonStatsBB84


@dataclass(frozen=True)
class MdiUpperTerm:
    """One (n, m, announcement) contribution to the MDI upper bound."""

    n: int
    m: int
    announcement: str
    p_c: float
    lambda_bsa: float
    mutual_info: float
    result: BsaResult
    stats: PhotonStatsMDI


@lru_cache(maxsize=16)
def bb84_entangled_terms(
    link: LinkConfig, n_max: int = DEFAULT_BB84_NMAX, stats_cap: int = DEFAULT_BB84_CAP
) -> tuple[Bb84UpperTerm, ...]:
    """Solve the per-photon-number programs once; intensity independent."""
    terms = []
    for n in range(1, n_max + 1):
        stats = bb84_photon_stats(link, n, cap=max(stats_cap, n_max))
        result = solve_bsa_bb84(n, stats)
        if result.rho_ent is None:
            info = 0.0
        else:
            info = mutual_information_on(
                result.rho_ent, alice_projectors(), bob_virtual_povm()
            )
        terms.append(
            Bb84UpperTerm(
                n=n,
                lambda_bsa=result.lambda_bsa,
                mutual_info=info,
                result=result,
                stats=stats,
            )
        )
    return tuple(terms)


def bb84_upper_bound(
    link: LinkConfig, mu_actual: float, n_max: int = DEFAULT_BB84_NMAX
) -> float:
    """Key-rate upper bound sum_n r_n (1 - lambda_n) I_n.

    ``mu_actual`` is the intensity actually leaving the transmitter (under
    attack, kappa times the believed signal intensity).
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    terms = bb84_entangled_terms(link, n_max)
    return sum(
        poisson_weight(mu_actual, t.n) * (1.0 - t.lambda_bsa) * t.mutual_info
        for t in terms
    )


@lru_cache(maxsize=16)
def mdi_entangled_terms(
    link: LinkConfig, n_max: int = DEFAULT_MDI_NMAX
) -> tuple[MdiUpperTerm, ...]:
    """Per-(n, m, announcement) programs for the conclusive announcements."""
    terms = []
    cap = 2 * n_max
    for n in range(1, n_max + 1):
        for m in range(1, n_max + 1):
            stats = mdi_photon_stats(link, n, m, cap=cap)
            for c in ("psi_plus", "psi_minus"):
                result = solve_bsa_mdi(n, m, c, stats)
                if result.rho_ent is None:
                    info = 0.0
                else:
                    info = mutual_information_on(
                        result.rho_ent, alice_projectors(), mdi_projectors()
                    )
                terms.append(
                    MdiUpperTerm(
                        n=n,
                        m=m,
                        announcement=c,
                        p_c=stats.p_c_given_nm[c],
                        lambda_bsa=result.lambda_bsa,
                        mutual_info=info,
                        result=result,
                        stats=stats,
                    )
                )
    return tuple(terms)


def mdi_upper_bound(
    link: LinkConfig, mu_actual: float, n_max: int = DEFAULT_MDI_NMAX
) -> float:
    """MDI upper bound sum_{c,n,m} p_c r_nm (1 - lambda) I, conclusive c only."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    terms = mdi_entangled_terms(link, n_max)
    return sum(
        t.p_c
        * poisson_weight(mu_actual, t.n)
        * poisson_weight(mu_actual, t.m)
        * (1.0 - t.lambda_bsa)
        * t.mutual_info
        for t in terms
    )
