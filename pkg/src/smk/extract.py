"""Atom extraction from flat moment matrices.

Given a PSD moment matrix of known numerical rank r that is rank-flat, the
unique r-atomic representing measure of the underlying (local) moment vector
is recovered with standard linear algebra: factor the matrix, select a basis
of low-degree monomials, form the multiplication operators of the clique
variables in that basis, and simultaneously diagonalize them through a random
convex combination.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.optimize

from .certify import RankPolicy
from .core import CliqueSubvector, local_exponents
from .errors import FlatnessViolated, NonPhysicalWeights, ReconstructionFailed
from .matrices import ConstraintPolynomial, LabeledSymMatrix

MERGE_TOL = 1e-6
EIG_GAP_TOL = 1e-8
MAX_REDRAWS = 10


def lex_order_rows(points: np.ndarray, quantum: float = 1e-9) -> np.ndarray:
    """Indices sorting rows lexicographically, with coordinates quantized so
    noise far below the merge tolerance cannot flip the order."""
    if points.size == 0:
        return np.arange(points.shape[0])
    keys = np.round(points / quantum) * quantum
    return np.lexsort(keys.T[::-1])


@dataclass(frozen=True)
class AtomicMeasure:
    """Finite weighted sum of point masses over a named variable set.

    ``atoms`` has one row per atom (columns follow ``variables``); weights
    are positive and atoms pairwise distinct beyond the merge tolerance.
    """

    variables: tuple[int, ...]
    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        weights = np.asarray(self.weights, dtype=float)
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        if weights.shape[0] == 0:
            atoms = atoms.reshape(0, len(self.variables))
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)
        if self.atoms.shape[0] != self.weights.shape[0]:
            raise ValueError("one weight per atom required")
        if self.atoms.shape[1] != len(self.variables):
            raise ValueError("atom arity does not match the variable set")

    @property
    def num_atoms(self) -> int:
        return self.atoms.shape[0]

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def moment(self, local_alpha) -> float:
        """Integral of the monomial with local exponents ``local_alpha``."""
        if self.num_atoms == 0:
            return 0.0
        vals = np.prod(self.atoms ** np.asarray(local_alpha, dtype=float), axis=1)
        return float(self.weights @ vals)

    def sorted_by_atoms(self) -> "AtomicMeasure":
        """Atoms in lexicographic coordinate order (canonical for reporting).

        Keys are quantized well below the merge tolerance so floating-point
        noise cannot flip the order of distinct atoms.
        """
        order = lex_order_rows(self.atoms)
        return AtomicMeasure(self.variables, self.atoms[order], self.weights[order])


def _column_echelon_basis(vt: np.ndarray, allowed: np.ndarray, tol: float):
    """Gauss-reduce ``vt`` scanning columns left to right, pivoting only on
    allowed columns. Returns (pivot column indices, reduced matrix) with the
    reduced matrix carrying the identity on pivot columns."""
    r, n = vt.shape
    R = vt.copy()
    pivots: list[int] = []
    row = 0
    for col in range(n):
        if row >= r:
            break
        if not allowed[col]:
            continue
        k = row + int(np.argmax(np.abs(R[row:, col])))
        if abs(R[k, col]) <= tol:
            continue
        R[[row, k]] = R[[k, row]]
        R[row] /= R[row, col]
        others = [i for i in range(r) if i != row]
        R[others] -= np.outer(R[others, col], R[row])
        pivots.append(col)
        row += 1
    return pivots, R


def extract_atoms(
    M: LabeledSymMatrix,
    r: int,
    policy: RankPolicy = RankPolicy(),
    seed: int = 0,
    merge_tol: float = MERGE_TOL,
) -> AtomicMeasure:
    """Recover the r-atomic measure represented by a flat PSD moment matrix.

    ``M`` must be a full moment matrix (labels up to the relaxation order)
    whose numerical rank is ``r`` and which is rank-flat, so a monomial basis
    of degree below the top order exists. The randomness (convex combination
    used for simultaneous diagonalization) is driven entirely by ``seed``;
    the result is independent of the seed up to atom ordering.

    Raises
    ------
    FlatnessViolated
        if no rank-r basis of below-top-degree monomials exists.
    NonPhysicalWeights
        if some recovered weight is not strictly positive.
    ReconstructionFailed
        if the recovered measure does not reproduce ``M``.
    """
    labels = M.labels
    nvars = len(M.variables)
    omega = max(sum(l) for l in labels) if labels else 0
    label_pos = {l: k for k, l in enumerate(labels)}
    scale = max(1.0, float(np.abs(M.data).max())) if M.size else 1.0

    if r == 0:
        return AtomicMeasure(M.variables, np.zeros((0, nvars)), np.zeros(0))

    eigvals, eigvecs = np.linalg.eigh(policy.prepare(M.data))
    idx = np.argsort(eigvals)[::-1][:r]
    if eigvals[idx[-1]] <= 0:
        raise ReconstructionFailed(f"matrix is not PSD of rank {r}: eigenvalue {eigvals[idx[-1]]}")
    V = eigvecs[:, idx] * np.sqrt(eigvals[idx])

    allowed = np.array([sum(l) < omega for l in labels])
    pivots, R = _column_echelon_basis(V.T, allowed, policy.rel_tol * np.sqrt(scale))
    if len(pivots) < r:
        raise FlatnessViolated(
            f"only {len(pivots)} independent basis monomials of degree < {omega} found, need {r}"
        )
    basis = [labels[c] for c in pivots]

    # multiplication operator of each variable: column k holds the coordinates
    # of x_t * basis[k] in the basis
    operators = []
    for t in range(nvars):
        N = np.empty((r, r))
        for k, beta in enumerate(basis):
            shifted = tuple(e + (1 if s == t else 0) for s, e in enumerate(beta))
            col = label_pos.get(shifted)
            if col is None:
                raise FlatnessViolated(f"monomial {shifted} exceeds the matrix order")
            N[:, k] = R[:, col]
        operators.append(N)

    rng = np.random.default_rng(seed)
    atoms = None
    for _ in range(MAX_REDRAWS):
        coeffs = rng.random(nvars) + 0.05
        coeffs /= coeffs.sum()
        combo = sum(c * N for c, N in zip(coeffs, operators))
        eigvals_c, P = np.linalg.eig(combo)
        gaps = np.abs(eigvals_c[:, None] - eigvals_c[None, :])
        gaps[np.diag_indices(r)] = np.inf
        if r > 1 and gaps.min() < EIG_GAP_TOL * max(1.0, np.abs(eigvals_c).max()):
            continue
        Pinv = np.linalg.inv(P)
        candidate = np.empty((r, nvars))
        ok = True
        for t, N in enumerate(operators):
            diag = np.diag(Pinv @ N @ P)
            if np.abs(diag.imag).max() > 1e-6 * max(1.0, np.abs(diag).max()):
                ok = False
                break
            candidate[:, t] = diag.real
        if not ok:
            continue
        if r > 1:
            dist = np.abs(candidate[:, None, :] - candidate[None, :, :]).max(axis=2)
            dist[np.diag_indices(r)] = np.inf
            if dist.min() <= merge_tol:
                continue
        atoms = candidate
        break
    if atoms is None:
        raise ReconstructionFailed("could not separate atoms after redrawing combinations")

    # weights from the degree-<=omega moments by nonnegative least squares
    A = np.empty((len(labels), r))
    for row, alpha in enumerate(labels):
        A[row] = np.prod(atoms ** np.asarray(alpha, dtype=float), axis=1)
    b = np.array([M.data[0, label_pos[alpha]] for alpha in labels])
    weights, _ = scipy.optimize.nnls(A, b)
    if weights.min() <= policy.rel_tol * max(1.0, weights.max()):
        raise NonPhysicalWeights(f"weight {weights.min():.3e} is not strictly positive")

    recon = (A * weights) @ A.T
    err = float(np.abs(recon - M.data).max())
    if err > policy.rel_tol * scale:
        raise ReconstructionFailed(f"moment matrix residual {err:.3e} exceeds tolerance")
    return AtomicMeasure(M.variables, atoms, weights)


def verify_measure_against_subvector(mu: AtomicMeasure, y_sub: CliqueSubvector) -> float:
    """Max absolute moment residual over every local index up to twice the
    relaxation order."""
    if mu.variables != y_sub.clique:
        raise ValueError(f"measure on {mu.variables} does not match clique {y_sub.clique}")
    worst = 0.0
    for alpha in local_exponents(len(y_sub.clique), 2 * y_sub.omega):
        worst = max(worst, abs(mu.moment(alpha) - y_sub.values[alpha]))
    return worst


@dataclass(frozen=True)
class FeasibilityReport:
    """Per-atom constraint values; violations are entries below -tol."""

    values: np.ndarray  # shape (num_atoms, num_constraints)
    violations: tuple[tuple[int, int, float], ...]  # (atom, constraint, value), 0-based

    @property
    def clean(self) -> bool:
        return not self.violations


def constraint_feasibility_check(
    mu: AtomicMeasure, constraints: Sequence[ConstraintPolynomial], tol: float = 1e-8
) -> FeasibilityReport:
    """Evaluate every constraint at every atom and flag negative values.

    Constraints may live on a subset of the measure's variables; atoms are
    projected onto the constraint's variables first.
    """
    values = np.zeros((mu.num_atoms, len(constraints)))
    violations = []
    for ci, g in enumerate(constraints):
        pos = [mu.variables.index(v) for v in g.variables]
        for ai in range(mu.num_atoms):
            val = g(mu.atoms[ai, pos])
            values[ai, ci] = val
            if val < -tol:
                violations.append((ai, ci, float(val)))
    return FeasibilityReport(values, tuple(violations))
