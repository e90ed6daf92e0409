"""Small dense SDP solver.

Solves problems of the form::

    min/max  tr(C X) + c^T s
    s.t.     tr(A_i X) + a_i^T s  = b_i        (equalities)
             tr(G_j X) + g_j^T s <= h_j        (inequalities)
             X Hermitian PSD, s >= 0

with an infeasible-start primal-dual path-following method (Nesterov-Todd
scaling, Mehrotra predictor-corrector). Complex problems are embedded into
real symmetric ones of twice the dimension before solving.
"""

from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, field
import logging
import os

import numpy as np

log = logging.getLogger(__name__)

TOL = 1e-7
MAX_ITER = 200
RANK_ONE_RATIO = 1e-6
STEP_FRACTION = 0.98
REFINE = 1e-2  # keep iterating towards tol * REFINE once tol is met

_dump_target = ContextVar("sdp_dump_target", default=None)


@dataclass
class Constraint:
    """``tr(matrix X) + scalars . s  (= or <=)  rhs``."""

    matrix: np.ndarray
    rhs: float
    scalars: np.ndarray | None = None


@dataclass
class SdpProblem:
    objective: np.ndarray
    sense: str = "minimize"
    equalities: list = field(default_factory=list)
    inequalities: list = field(default_factory=list)
    n_scalars: int = 0
    objective_scalars: np.ndarray | None = None

    def __post_init__(self):
        if self.sense not in ("minimize", "maximize"):
            raise ValueError(f"unknown sense {self.sense!r}")
        C = np.asarray(self.objective)
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise ValueError("objective must be a square matrix")
        if not self.equalities and not self.inequalities:
            raise ValueError("at least one constraint is required")
        n = C.shape[0]
        for con in (*self.equalities, *self.inequalities):
            if np.shape(con.matrix) != (n, n):
                raise ValueError("constraint matrix shape mismatch")
            if con.scalars is not None and np.size(con.scalars) != self.n_scalars:
                raise ValueError("scalar coupling length mismatch")

    @property
    def dim(self):
        return np.shape(self.objective)[0]

    def scalar_row(self, con):
        if con.scalars is None:
            return np.zeros(self.n_scalars)
        return np.asarray(con.scalars, dtype=float)

    def objective_scalar_row(self):
        if self.objective_scalars is None:
            return np.zeros(self.n_scalars)
        return np.asarray(self.objective_scalars, dtype=float)


@dataclass
class SdpSolution:
    X: np.ndarray
    scalar_values: np.ndarray
    objective_value: float
    status: str
    primal_residual: float
    dual_residual: float
    duality_gap: float
    iterations: int = 0
    Z: np.ndarray | None = None
    y: np.ndarray | None = None
    history: list = field(default_factory=list)

    @property
    def optimal(self):
        return self.status == "optimal"

    def is_rank_one(self, ratio=RANK_ONE_RATIO):
        lam = np.linalg.eigvalsh(self.X)
        return lam[-1] > 0 and max(lam[-2], 0.0) <= ratio * lam[-1] if lam.size > 1 else True


def embed_hermitian(M):
    """Real symmetric image ``[[Re M, -Im M], [Im M, Re M]]`` of a Hermitian matrix."""
    M = np.asarray(M)
    re, im = M.real, M.imag
    return np.block([[re, -im], [im, re]])


def unembed(Y):
    """Inverse of :func:`embed_hermitian` (averages the redundant blocks)."""
    n = Y.shape[0] // 2
    re = 0.5 * (Y[:n, :n] + Y[n:, n:])
    im = 0.5 * (Y[n:, :n] - Y[:n, n:])
    H = re + 1j * im
    return 0.5 * (H + H.conj().T)


def embed_complex(problem):
    """Real-symmetric problem with the same optimal value.

    Every matrix M becomes ``embed_hermitian(M) / 2``; with ``Y =
    embed_hermitian(X)`` this keeps ``tr(M X)`` unchanged, so right-hand
    sides and scalar couplings are copied as-is.
    """
    def emb(M):
        return 0.5 * embed_hermitian(M)

    return SdpProblem(
        objective=emb(problem.objective),
        sense=problem.sense,
        equalities=[Constraint(emb(c.matrix), c.rhs, c.scalars) for c in problem.equalities],
        inequalities=[Constraint(emb(c.matrix), c.rhs, c.scalars) for c in problem.inequalities],
        n_scalars=problem.n_scalars,
        objective_scalars=problem.objective_scalars,
    )


def _standard_form(problem):
    """Stack into ``min <C,X> + c.x  s.t.  A(X) + a x = b`` with x >= 0.

    Inequalities receive one slack each, appended after the problem's own
    scalars.
    """
    sign = 1.0 if problem.sense == "minimize" else -1.0
    n_eq, n_in = len(problem.equalities), len(problem.inequalities)
    p = problem.n_scalars + n_in
    cons = [*problem.equalities, *problem.inequalities]
    m = len(cons)
    dtype = np.result_type(problem.objective, *[c.matrix for c in cons], float)
    As = np.empty((m, problem.dim, problem.dim), dtype=dtype)
    a = np.zeros((m, p))
    b = np.empty(m)
    for i, con in enumerate(cons):
        M = np.asarray(con.matrix, dtype=dtype)
        As[i] = 0.5 * (M + M.conj().T)
        a[i, :problem.n_scalars] = problem.scalar_row(con)
        b[i] = con.rhs
        if i >= n_eq:
            a[i, problem.n_scalars + i - n_eq] = 1.0
    C = np.asarray(problem.objective, dtype=dtype)
    C = sign * 0.5 * (C + C.conj().T)
    c = np.zeros(p)
    c[:problem.n_scalars] = sign * problem.objective_scalar_row()
    return C, c, As, a, b


def _inner(U, V):
    return float(np.real(np.vdot(U, V)))


def _adjoint(As, y):
    return np.tensordot(y, As, axes=1)


def _max_step(lam, dx):
    """Largest alpha with diag(lam) + alpha*dx PSD (inf if unbounded)."""
    s = 1.0 / np.sqrt(lam)
    e = np.linalg.eigvalsh(s[:, None] * dx * s[None, :])[0]
    return np.inf if e >= 0 else -1.0 / e


def _max_step_lp(lam, dx):
    neg = dx < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-lam[neg] / dx[neg]))


def _ipm(C, c, As, a, b, tol=TOL, max_iter=MAX_ITER):
    m, n, _ = As.shape
    p = c.size
    nu = n + p
    herm = lambda M: 0.5 * (M + M.conj().T)  # noqa: E731

    scale = 1.0 + np.max(np.abs(b), initial=0.0)
    X = scale * np.eye(n, dtype=As.dtype)
    Z = scale * np.eye(n, dtype=As.dtype)
    x = np.ones(p)
    z = np.ones(p)
    y = np.zeros(m)

    norm_b = np.linalg.norm(b)
    norm_c = np.sqrt(np.linalg.norm(C) ** 2 + np.linalg.norm(c) ** 2)
    Aflat = As.reshape(m, -1)
    history = []
    status = "max_iterations"
    stalls = 0
    it = 0
    accepted = None
    for it in range(max_iter + 1):
        AX = np.real(Aflat.conj() @ X.reshape(-1)) + a @ x
        rp = b - AX
        Rd = C - _adjoint(As, y) - Z
        rd = c - a.T @ y - z
        pobj = _inner(C, X) + c @ x
        dobj = b @ y
        gap = _inner(X, Z) + x @ z
        relp = np.linalg.norm(rp) / (1.0 + norm_b)
        reld = np.sqrt(np.linalg.norm(Rd) ** 2 + np.linalg.norm(rd) ** 2) / (1.0 + norm_c)
        relgap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        history.append((pobj, dobj, gap, relp, reld))
        err = max(relp, reld, relgap)
        if err <= tol and (accepted is None or err <= accepted[0]):
            accepted = (err, dict(X=X, x=x, Z=Z, z=z, y=y, relp=relp, reld=reld, relgap=relgap,
                                  gap=gap, pobj=pobj, iterations=it))
        if err <= tol * REFINE:
            break
        # Farkas-type tests: a diverging dual (primal) objective with bounded residual.
        if dobj > 0:
            ray = np.sqrt(np.linalg.norm(C - Rd) ** 2 + np.linalg.norm(c - rd) ** 2)
            if dobj > 1e8 * max(ray, 1e-300) and np.linalg.norm(y) > 1e6 * scale:
                status = "infeasible"
                break
        if pobj < 0 and -pobj > 1e8 * max(np.linalg.norm(AX), 1e-300) * (1 + norm_b) \
                and np.linalg.norm(X) > 1e8 * scale:
            status = "infeasible"
            break
        if it == max_iter:
            break

        try:
            Lx = np.linalg.cholesky(herm(X))
            Lz = np.linalg.cholesky(herm(Z))
        except np.linalg.LinAlgError:
            status = "numerical_error"
            break
        U_, lam, Vh = np.linalg.svd(Lz.conj().T @ Lx)
        V = Vh.conj().T
        R = Lx @ V / np.sqrt(lam)[None, :]
        Rinv = (np.sqrt(lam)[:, None] * Vh) @ np.linalg.inv(Lx)
        d = np.sqrt(x / z)
        lam_lp = np.sqrt(x * z)
        mu = (lam @ lam + lam_lp @ lam_lp) / nu

        At = np.einsum("ji,mjk,kl->mil", R.conj(), As, R, optimize=True)
        Atf = At.reshape(m, -1)
        at = a * d[None, :]
        M = np.real(Atf.conj() @ Atf.T) + at @ at.T
        Rdt = R.conj().T @ Rd @ R
        rdt = d * rd
        try:
            chol = np.linalg.cholesky(M)
            solve_M = lambda r: np.linalg.solve(chol.conj().T, np.linalg.solve(chol, r))  # noqa: E731
        except np.linalg.LinAlgError:
            reg = 1e-14 * max(np.trace(M), 1.0)
            Mreg = M + reg * np.eye(m)
            solve_M = lambda r: np.linalg.lstsq(Mreg, r, rcond=None)[0]  # noqa: E731

        lsum = lam[:, None] + lam[None, :]

        def direction(T, t):
            rhs = rp - np.real(Atf.conj() @ (T - Rdt).reshape(-1)) - at @ (t - rdt)
            dy = solve_M(rhs)
            Ady = _adjoint(At, dy)
            dxt = T - Rdt + Ady
            dzt = T - dxt
            dxl = t - rdt + at.T @ dy
            dzl = t - dxl
            return dy, herm(dxt), herm(dzt), dxl, dzl

        # predictor
        T_aff = -np.diag(lam).astype(As.dtype)
        dy_a, dxt_a, dzt_a, dxl_a, dzl_a = direction(T_aff, -lam_lp)
        ap = min(1.0, _max_step(lam, dxt_a), _max_step_lp(lam_lp, dxl_a))
        ad = min(1.0, _max_step(lam, dzt_a), _max_step_lp(lam_lp, dzl_a))
        L = np.diag(lam)
        mu_aff = (_inner(L + ap * dxt_a, L + ad * dzt_a)
                  + (lam_lp + ap * dxl_a) @ (lam_lp + ad * dzl_a)) / nu
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3

        # corrector
        rc = sigma * mu * np.eye(n) - np.diag(lam ** 2) - herm(dxt_a @ dzt_a)
        T = 2.0 * rc / lsum
        rc_lp = sigma * mu - lam_lp ** 2 - dxl_a * dzl_a
        t = rc_lp / np.where(lam_lp > 0, lam_lp, 1.0)
        dy, dxt, dzt, dxl, dzl = direction(T.astype(As.dtype), t)
        ap = min(1.0, STEP_FRACTION * _max_step(lam, dxt), STEP_FRACTION * _max_step_lp(lam_lp, dxl))
        ad = min(1.0, STEP_FRACTION * _max_step(lam, dzt), STEP_FRACTION * _max_step_lp(lam_lp, dzl))
        if min(ap, ad) < 1e-10:
            stalls += 1
            if stalls >= 5:
                status = "numerical_error"
                break
        else:
            stalls = 0

        X = herm(X + ap * (R @ dxt @ R.conj().T))
        x = x + ap * d * dxl
        Z = herm(Z + ad * (Rinv.conj().T @ dzt @ Rinv))
        z = z + ad * dzl / d
        y = y + ad * dy

    if accepted is not None:
        # the refinement past tol may stall; the best accepted iterate stands
        return dict(accepted[1], status="optimal", history=history)
    return dict(X=X, x=x, Z=Z, z=z, y=y, status=status, relp=relp, reld=reld,
                relgap=relgap, gap=gap, pobj=pobj, iterations=it, history=history)


def solve(problem, tol=TOL, max_iter=MAX_ITER, embed=True):
    """Solve an :class:`SdpProblem`.

    With ``embed=True`` complex data are mapped to the real symmetric cone
    of twice the dimension; ``embed=False`` runs the same iteration directly
    on Hermitian matrices.
    """
    target = _dump_target.get()
    if target is not None:
        directory, counter = target
        counter[0] += 1
        dump_problem(problem, os.path.join(directory, f"sdp_{counter[0]:04d}.txt"))
    is_complex = np.iscomplexobj(problem.objective) or any(
        np.iscomplexobj(con.matrix) for con in (*problem.equalities, *problem.inequalities))
    work = embed_complex(problem) if (embed and is_complex) else problem
    C, c, As, a, b = _standard_form(work)
    res = _ipm(C, c, As, a, b, tol=tol, max_iter=max_iter)
    X, Z = res["X"], res["Z"]
    if work is not problem:
        X = unembed(X)
        Z = 2.0 * unembed(Z)
    sign = 1.0 if problem.sense == "minimize" else -1.0
    if res["status"] != "optimal":
        log.debug("sdp solve ended with status %s after %d iterations", res["status"], res["iterations"])
    return SdpSolution(
        X=X,
        scalar_values=res["x"][:problem.n_scalars].copy(),
        objective_value=sign * res["pobj"],
        status=res["status"],
        primal_residual=res["relp"],
        dual_residual=res["reld"],
        duality_gap=res["relgap"],
        iterations=res["iterations"],
        Z=Z,
        y=sign * res["y"],
        history=res["history"],
    )


def dump_problem(problem, path):
    """Write a problem as plain text, one coordinate-format block per matrix.

    Entries are ``row col re im`` with 1-based indices, in the spirit of the
    MatrixMarket coordinate format.
    """
    def block(f, tag, M):
        M = np.asarray(M)
        nz = np.argwhere(M != 0)
        f.write(f"%% {tag}\n{M.shape[0]} {M.shape[1]} {len(nz)}\n")
        for i, j in nz:
            f.write(f"{i + 1} {j + 1} {M[i, j].real!r} {np.imag(M[i, j])!r}\n")

    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"%%SdpProblem sense={problem.sense} dim={problem.dim} "
                f"n_scalars={problem.n_scalars}\n")
        f.write("%% objective_scalars " + " ".join(repr(float(v)) for v in problem.objective_scalar_row()) + "\n")
        block(f, "objective", problem.objective)
        for kind, cons in (("eq", problem.equalities), ("ineq", problem.inequalities)):
            for k, con in enumerate(cons):
                f.write(f"%% {kind} {k} rhs={float(con.rhs)!r} scalars="
                        + ",".join(repr(float(v)) for v in problem.scalar_row(con)) + "\n")
                block(f, f"{kind}{k}", con.matrix)


@contextmanager
def dump_to(directory):
    """Write every problem passed to :func:`solve` inside the block to ``directory``."""
    os.makedirs(directory, exist_ok=True)
    token = _dump_target.set((directory, [0]))
    try:
        yield
    finally:
        _dump_target.reset(token)
