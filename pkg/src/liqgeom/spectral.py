"""Laplacian projection of the relational graph onto one dimension.

The price-like coordinate of vertex ``i`` is the ``i``-th entry of the
Fiedler vector of ``L = D - A``.  Conventions that the raw eigenproblem
leaves open are fixed here:

* sign: the entry of largest magnitude is positive (ties go to the lowest
  vertex index);
* degenerate Fiedler eigenspaces: the projector onto the eigenspace is
  applied to the first vertex indicator whose image is nonzero, which gives
  a basis-independent, deterministic vector;
* continuity across updates: :func:`align` flips a projection whose overlap
  with its predecessor is negative.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, lobpcg, splu

from .errors import (
    Disconnected,
    DimensionMismatch,
    NonConvergence,
    ValidationError,
    WindowTooShort,
)

DENSE_MAX = 2000
DENSE_TOL = 1e-10
ITERATIVE_TOL = 1e-8
LU_SHIFT = 1e-3
ITERATIVE_BLOCK = 3
WARM_JITTER = 1e-3


@dataclass
class Projection:
    coords: np.ndarray
    eigenvalue: float
    sign_anchor: int
    residual: float = 0.0
    solver: str = "dense"
    degenerate: bool = False
    # final iterate block of the iterative solver, reusable as a warm start
    block: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def n(self):
        return self.coords.size


def laplacian(g, sparse=False):
    """Combinatorial Laplacian; multi-edges add their multiplicity."""
    n = g.n_vertices
    e = g.edge_array()
    rows = np.concatenate([e[:, 0], e[:, 1]])
    cols = np.concatenate([e[:, 1], e[:, 0]])
    deg = g.degree.astype(float)
    if sparse:
        adj = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
        return (sp.diags(deg) - adj).tocsr()
    lap = np.diag(deg)
    np.add.at(lap, (rows, cols), -1.0)
    return lap


def _fix_sign(v):
    mag = np.abs(v)
    top = mag.max()
    anchor = int(np.flatnonzero(mag >= top * (1.0 - 1e-12))[0])
    if v[anchor] < 0:
        v = -v
    return v, anchor


def _canonical(v):
    v = v - v.mean()
    v = v / np.linalg.norm(v)
    return _fix_sign(v)


def _threshold(g):
    # eigenvalue resolution of a dense solve scales with the spectral radius
    return 1e-9 * max(1.0, 2.0 * float(g.degree.max()))


def _dense(g, tol):
    n = g.n_vertices
    lap = laplacian(g)
    hi = min(2, n - 1)
    w, vecs = scipy.linalg.eigh(lap, subset_by_index=[0, hi])
    thr = _threshold(g)
    if w[1] <= thr:
        raise Disconnected(f"second zero Laplacian eigenvalue ({w[1]:.3e})")
    degenerate = hi >= 2 and (w[2] - w[1]) <= thr
    if degenerate:
        w_all, basis = scipy.linalg.eigh(lap, subset_by_value=[w[1] - thr, w[1] + thr])
        proj = basis @ basis.T
        v = None
        for k in range(n):
            cand = proj[:, k]
            if np.linalg.norm(cand) > 1e-8:
                v = cand
                break
    else:
        v = vecs[:, 1]
    v, anchor = _canonical(v)
    lam = float(v @ lap @ v)
    res = float(np.linalg.norm(lap @ v - lam * v))
    return Projection(v, lam, anchor, res, "dense", bool(degenerate)), lap


def _preconditioner(g, lap):
    # Near-tree graphs have tightly clustered low spectra that diagonal
    # scaling cannot separate, but their sparse LU has almost no fill.
    # Once the cycle rank is large the factor gets expensive and the Jacobi
    # preconditioner converges well enough on its own.
    n = g.n_vertices
    if g.n_edges - n + 1 < n // 2:
        lu = splu((lap + LU_SHIFT * sp.eye(n)).tocsc())
        return LinearOperator((n, n), matvec=lu.solve, matmat=lu.solve, dtype=float)
    return sp.diags(1.0 / g.degree.astype(float)).tocsr()


def _lobpcg(lap, block, precond, tol, max_iter):
    n = lap.shape[0]
    ones = np.full((n, 1), 1.0 / np.sqrt(n))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        w, vecs = lobpcg(lap, block, Y=ones, M=precond, tol=0.1 * tol,
                         maxiter=max_iter, largest=False)
    order = np.argsort(w)
    return w[order], vecs[:, order]


def _iterative(g, tol, warm_start, max_iter):
    n = g.n_vertices
    lap = laplacian(g, sparse=True)
    rng = np.random.Generator(np.random.PCG64(n))
    cold = rng.standard_normal((n, ITERATIVE_BLOCK))
    precond = _preconditioner(g, lap)
    starts = [cold]
    if warm_start is not None:
        warm = np.asarray(warm_start, dtype=float).reshape(n, -1)
        k = min(warm.shape[1], ITERATIVE_BLOCK)
        block = cold.copy()
        # A converged block of a graph that changed by one edge has residuals
        # all parallel to e_i - e_j, which makes the first Rayleigh-Ritz Gram
        # matrix singular; a small perturbation restores full rank.
        block[:, :k] = warm[:, :k] + WARM_JITTER * cold[:, :k] / np.sqrt(n)
        starts.insert(0, block)
    thr = _threshold(g)
    best = None
    for block in starts:
        w, vecs = _lobpcg(lap, block, precond, tol, max_iter)
        if w[0] <= thr:
            raise Disconnected(f"second zero Laplacian eigenvalue ({w[0]:.3e})")
        if w[1] - w[0] <= thr:
            return None
        v, anchor = _canonical(vecs[:, 0])
        lv = lap @ v
        lam = float(v @ lv)
        res = float(np.linalg.norm(lv - lam * v))
        best = Projection(v, lam, anchor, res, "iterative", False, block=vecs)
        if res <= tol:
            return best
    if n <= DENSE_MAX:
        return None
    raise NonConvergence(f"iterative residual {best.residual:.3e} above tolerance {tol:.1e}")


def fiedler_projection(g, tol=None, solver="auto", warm_start=None, max_iter=2000,
                       dense_max=DENSE_MAX):
    """Unit-norm, mean-zero, sign-fixed Fiedler vector of ``g``.

    ``solver`` is ``"dense"``, ``"iterative"`` or ``"auto"`` (dense up to
    ``dense_max`` vertices).  The iterative path is a preconditioned block
    solver (LOBPCG) constrained orthogonal to the constant vector; it falls
    back to the dense path when it detects a degenerate Fiedler eigenvalue,
    and, within ``DENSE_MAX`` vertices, when neither a warm nor a cold start
    reaches ``tol``.
    ``warm_start`` seeds the iterative solver, e.g. with the previous
    projection of a slowly growing graph or its ``block`` of iterates.

    Raises NonConvergence when the eigenpair residual exceeds ``tol`` and
    Disconnected when a second zero eigenvalue is found.
    """
    if g.n_vertices < 2:
        raise ValidationError("projection needs at least two vertices")
    if solver == "auto":
        solver = "dense" if g.n_vertices <= dense_max else "iterative"
    if solver == "iterative" and g.n_vertices < 5 * ITERATIVE_BLOCK + 5:
        solver = "dense"
    if solver == "dense":
        tol = DENSE_TOL if tol is None else tol
        proj, _ = _dense(g, tol)
        if proj.residual > tol:
            raise NonConvergence(f"dense residual {proj.residual:.3e} above tolerance {tol:.1e}")
        return proj
    if solver != "iterative":
        raise ValidationError(f"unknown solver {solver!r}")
    tol = ITERATIVE_TOL if tol is None else tol
    proj = _iterative(g, tol, warm_start, max_iter)
    if proj is None:
        proj, _ = _dense(g, tol)
        if proj.residual > tol:
            raise NonConvergence(f"dense residual {proj.residual:.3e} above tolerance {tol:.1e}")
    return proj


def align(prev, nxt):
    """Return ``nxt`` flipped if needed so that <prev, nxt> >= 0."""
    _check_dims(prev, nxt)
    if float(prev.coords @ nxt.coords) < 0:
        return Projection(-nxt.coords, nxt.eigenvalue, nxt.sign_anchor, nxt.residual,
                          nxt.solver, nxt.degenerate, block=nxt.block)
    return nxt


def _check_dims(prev, nxt):
    if prev.coords.shape != nxt.coords.shape:
        raise DimensionMismatch(f"projections over {prev.n} and {nxt.n} vertices")


def returns(prev, nxt):
    """Per-vertex increments ``nxt - prev`` of two projections."""
    _check_dims(prev, nxt)
    return nxt.coords - prev.coords


def check_balance(prev, nxt):
    """|sum_i (nxt_i - prev_i)|, zero up to rounding for valid projections."""
    return float(abs(np.sum(returns(prev, nxt))))


def risk(series, vertex):
    """Population variance of one vertex's returns over a window.

    Welford's single-pass update; ``series`` is a sequence of return vectors.
    """
    if len(series) < 2:
        raise WindowTooShort("risk needs a window of at least two returns")
    mean = 0.0
    m2 = 0.0
    for k, r in enumerate(series, start=1):
        x = float(r[vertex])
        delta = x - mean
        mean += delta / k
        m2 += delta * (x - mean)
    return m2 / len(series)


def write_projection(proj, path, meta_path=None):
    """CSV ``vertex,coord`` plus a ``key=value`` sidecar with solver metadata."""
    path = Path(path)
    rows = ["vertex,coord\n"] + [f"{i},{c:.17g}\n" for i, c in enumerate(proj.coords)]
    path.write_text("".join(rows))
    meta_path = Path(meta_path) if meta_path else path.with_suffix(".meta")
    meta = {
        "eigenvalue": f"{proj.eigenvalue:.17g}",
        "residual": f"{proj.residual:.17g}",
        "solver": proj.solver,
        "sign_anchor": str(proj.sign_anchor),
        "degenerate": str(proj.degenerate).lower(),
    }
    meta_path.write_text("".join(f"{k}={v}\n" for k, v in meta.items()))


def read_projection(path):
    path = Path(path)
    lines = path.read_text().splitlines()[1:]
    coords = np.array([float(line.split(",")[1]) for line in lines])
    meta = {}
    meta_path = path.with_suffix(".meta")
    if meta_path.exists():
        for line in meta_path.read_text().splitlines():
            k, v = line.split("=", 1)
            meta[k] = v
    return Projection(
        coords,
        float(meta.get("eigenvalue", "nan")),
        int(meta.get("sign_anchor", int(np.argmax(np.abs(coords))))),
        float(meta.get("residual", "nan")),
        meta.get("solver", "dense"),
        meta.get("degenerate", "false") == "true",
    )
