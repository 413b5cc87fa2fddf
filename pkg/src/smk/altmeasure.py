"""Alternative representing measures supported on a fixed atom set.

With the atoms fixed, the weights of a representing measure solve a linear
feasibility system (one equation per sparse multi-index, including the total
mass row, so the feasible set is compact). Extreme representing measures are
the vertices of this polytope; each one is found by minimizing a linear cost
with the simplex method.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .core import SparseMomentVector
from .errors import Infeasible

RANK_TOL = 1e-9


@dataclass(frozen=True)
class WeightLP:
    """Standard-form weight program: min c.w s.t. A w = b, w >= 0.

    Rows of ``A`` are monomials evaluated at the fixed atoms (the row of the
    zero index enforces total mass); ``b`` is the moment vector.
    """

    atoms: np.ndarray
    matrix: np.ndarray
    rhs: np.ndarray
    cost: np.ndarray


def build_weight_lp(atoms, y: SparseMomentVector, cost) -> WeightLP:
    atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
    alphas = list(y.entries)
    A = np.empty((len(alphas), atoms.shape[0]))
    for row, alpha in enumerate(alphas):
        A[row] = np.prod(atoms ** np.asarray(alpha, dtype=float), axis=1)
    b = np.array([y.entries[a] for a in alphas])
    return WeightLP(atoms, A, b, np.asarray(cost, dtype=float))


def _row_reduce(A: np.ndarray, b: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Reduce [A | b] to full row rank by Gaussian elimination with partial
    pivoting; an inconsistent zero row with nonzero rhs raises Infeasible."""
    M = np.hstack([A, b[:, None]]).astype(float)
    rows, cols = A.shape
    scale = max(1.0, np.abs(M).max())
    rank = 0
    for col in range(cols):
        if rank >= rows:
            break
        k = rank + int(np.argmax(np.abs(M[rank:, col])))
        if abs(M[k, col]) <= tol * scale:
            continue
        M[[rank, k]] = M[[k, rank]]
        others = [i for i in range(rows) if i != rank]
        M[others] -= np.outer(M[others, col] / M[rank, col], M[rank])
        rank += 1
    for i in range(rank, rows):
        if abs(M[i, -1]) > tol * scale * 10:
            raise Infeasible(f"inconsistent moment equation, residual {M[i, -1]:.3e}")
    return M[:rank, :-1], M[:rank, -1]


def _simplex_phase(A, b, c, basis, tol):
    """Revised simplex with Bland's rule from a given feasible basis.

    Returns the optimal basis and solution; the basis matrix is solved with
    LU (partial pivoting) at every iteration.
    """
    m, n = A.shape
    basis = list(basis)
    for _ in range(20000):
        B = A[:, basis]
        xb = np.linalg.solve(B, b)
        lam = np.linalg.solve(B.T, c[basis])
        reduced = c - lam @ A
        entering = -1
        for j in range(n):  # Bland: smallest index with negative reduced cost
            if j not in basis and reduced[j] < -tol:
                entering = j
                break
        if entering < 0:
            x = np.zeros(n)
            x[basis] = xb
            return basis, x
        d = np.linalg.solve(B, A[:, entering])
        ratios = [(xb[i] / d[i], basis[i], i) for i in range(m) if d[i] > tol]
        if not ratios:
            raise Infeasible("weight program is unbounded; atoms and moments are inconsistent")
        min_ratio = min(r for r, _, _ in ratios)
        # Bland tie-break: smallest variable index among minimal ratios
        leave_row = min(
            (var, i) for r, var, i in ratios if r <= min_ratio + tol * (1 + abs(min_ratio))
        )[1]
        basis[leave_row] = entering
    raise RuntimeError("simplex iteration limit reached")


def _simplex(A: np.ndarray, b: np.ndarray, c: np.ndarray, tol: float) -> np.ndarray:
    """Two-phase primal simplex for min c.x s.t. A x = b, x >= 0 with A of
    full row rank; returns a basic optimal solution."""
    m, n = A.shape
    if m == 0:
        return np.zeros(n)
    A = A.copy()
    b = b.copy()
    flip = b < 0
    A[flip] *= -1
    b[flip] *= -1

    # phase 1: artificial variables
    A1 = np.hstack([A, np.eye(m)])
    c1 = np.concatenate([np.zeros(n), np.ones(m)])
    basis, x = _simplex_phase(A1, b, c1, list(range(n, n + m)), tol)
    if c1 @ x > 1e3 * tol * max(1.0, np.abs(b).max()):
        raise Infeasible(f"no nonnegative weights satisfy the moment equations (gap {c1 @ x:.3e})")
    # drive any degenerate artificials out of the basis
    keep_rows = list(range(m))
    for row in range(m):
        if basis[row] >= n:
            B = A1[:, basis]
            replaced = False
            for j in range(n):
                if j in basis:
                    continue
                d = np.linalg.solve(B, A1[:, j])
                if abs(d[row]) > 1e3 * tol:
                    basis[row] = j
                    replaced = True
                    break
            if not replaced:
                keep_rows.remove(row)  # redundant row
    if len(keep_rows) < m:
        A = A[keep_rows]
        b = b[keep_rows]
        basis = [basis[r] for r in keep_rows]
    basis, x = _simplex_phase(A, b, c, basis, tol)
    return np.maximum(x[:n], 0.0)


def solve_weight_lp(
    atoms, y: SparseMomentVector, cost, tol: float = RANK_TOL
) -> np.ndarray:
    """Extreme optimal weights for a linear cost over the representing
    measures supported on ``atoms``.

    The (heavily redundant) moment equations are reduced to full row rank
    before the simplex runs. Raises :class:`Infeasible` if no nonnegative
    weight vector reproduces the moments.
    """
    lp = build_weight_lp(atoms, y, cost)
    A, b = _row_reduce(lp.matrix, lp.rhs, tol)
    return _simplex(A, b, lp.cost, tol)


def enumerate_extreme_measures(
    atoms, y: SparseMomentVector, budget: int, seed: int = 0, tol: float = 1e-8
) -> list[np.ndarray]:
    """Distinct basic feasible weight vectors found by ``budget`` random
    linear costs (seeded); duplicates within ``tol`` are merged."""
    atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
    rng = np.random.default_rng(seed)
    found: list[np.ndarray] = []
    for _ in range(budget):
        cost = rng.standard_normal(atoms.shape[0])
        w = solve_weight_lp(atoms, y, cost)
        if not any(np.abs(w - prev).max() <= tol for prev in found):
            found.append(w)
    return found
