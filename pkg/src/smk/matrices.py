"""Moment, localizing, and overlap moment matrices.

All matrices are dense, exactly symmetric by construction, and labeled by
local multi-indices in canonical order. An entry whose multi-index falls
outside the stored moment data is a construction error, never silently zero.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import CliqueSubvector, MultiIndex, SparseMomentVector, local_exponents, subvector_on
from .errors import IndexOutOfPattern, OrderTooHigh


def monomial_str(variables: tuple[int, ...], alpha: MultiIndex) -> str:
    """Readable monomial like ``x1*x3^2``; the empty product is ``1``."""
    parts = []
    for var, e in zip(variables, alpha):
        if e == 1:
            parts.append(f"x{var}")
        elif e > 1:
            parts.append(f"x{var}^{e}")
    return "*".join(parts) if parts else "1"


@dataclass(frozen=True)
class LabeledSymMatrix:
    """Symmetric matrix with monomial row/column labels.

    ``variables`` are the global 1-based variables the local exponents refer
    to. For block-diagonal localizing matrices the labels are
    ``(constraint_position, local_exponent)`` pairs so they stay distinct.
    """

    variables: tuple[int, ...]
    labels: tuple
    data: np.ndarray

    @property
    def size(self) -> int:
        return len(self.labels)

    def to_csv(self) -> str:
        """Dump with a header row/column of labels, for fixture comparison."""
        def fmt(label):
            if len(label) == len(self.variables) and all(isinstance(e, int) for e in label):
                return monomial_str(self.variables, label)
            pos, alpha = label
            return f"g{pos}:{monomial_str(self.variables, alpha)}"

        buf = io.StringIO()
        heads = [fmt(l) for l in self.labels]
        buf.write("," + ",".join(heads) + "\n")
        for h, row in zip(heads, self.data):
            buf.write(h + "," + ",".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()


@dataclass(frozen=True)
class ConstraintPolynomial:
    """One inequality constraint g >= 0 on the variables of a single clique.

    ``coefficients`` maps local exponent tuples (aligned with ``variables``)
    to real coefficients.
    """

    variables: tuple[int, ...]
    coefficients: Mapping[MultiIndex, float]

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(
            self, "coefficients", {tuple(a): float(c) for a, c in self.coefficients.items()}
        )
        for a in self.coefficients:
            if len(a) != len(self.variables):
                raise ValueError(f"exponent {a} has wrong arity for variables {self.variables}")

    @property
    def degree(self) -> int:
        degs = [sum(a) for a, c in self.coefficients.items() if c != 0.0]
        return max(degs, default=0)

    @property
    def d_half(self) -> int:
        return max(1, math.ceil(self.degree / 2))

    def __call__(self, z) -> float:
        z = tuple(z)
        total = 0.0
        for alpha, c in self.coefficients.items():
            term = c
            for zk, e in zip(z, alpha):
                term *= zk**e
            total += term
        return total


def _add(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(x + y for x, y in zip(a, b))


def moment_matrix(y_sub: CliqueSubvector, d: int) -> LabeledSymMatrix:
    """Moment matrix of order ``d``: entry (alpha, beta) is the moment at
    alpha + beta, over all local labels of degree <= d."""
    if d < 0 or 2 * d > 2 * y_sub.omega:
        raise OrderTooHigh(f"moment matrix of order {d} needs degrees up to {2*d} > {2*y_sub.omega}")
    labels = local_exponents(len(y_sub.clique), d)
    data = np.empty((len(labels), len(labels)))
    for a, la in enumerate(labels):
        for b in range(a, len(labels)):
            try:
                v = y_sub.values[_add(la, labels[b])]
            except KeyError:
                raise IndexOutOfPattern(_add(la, labels[b])) from None
            data[a, b] = v
            data[b, a] = v
    return LabeledSymMatrix(y_sub.clique, tuple(labels), data)


def localizing_matrix(y_sub: CliqueSubvector, g: ConstraintPolynomial, d: int) -> LabeledSymMatrix:
    """Localizing matrix of ``g`` at order ``d``: entry (alpha, beta) is
    sum_gamma g_gamma * y[alpha + beta + gamma], over labels of degree
    <= d - d_half."""
    if g.variables != y_sub.clique:
        raise ValueError(f"constraint on {g.variables} does not match clique {y_sub.clique}")
    if d < g.d_half:
        raise OrderTooHigh(f"localizing order {d} is below the minimal order {g.d_half}")
    if d > y_sub.omega:
        raise OrderTooHigh(f"localizing order {d} exceeds relaxation order {y_sub.omega}")
    labels = local_exponents(len(y_sub.clique), d - g.d_half)
    data = np.empty((len(labels), len(labels)))
    for a, la in enumerate(labels):
        for b in range(a, len(labels)):
            ab = _add(la, labels[b])
            v = 0.0
            for gamma, c in g.coefficients.items():
                if c == 0.0:
                    continue
                idx = _add(ab, gamma)
                try:
                    v += c * y_sub.values[idx]
                except KeyError:
                    raise IndexOutOfPattern(idx) from None
            data[a, b] = v
            data[b, a] = v
    return LabeledSymMatrix(y_sub.clique, tuple(labels), data)


def localizing_block(
    y_sub: CliqueSubvector, g_vec: Sequence[ConstraintPolynomial], d: int
) -> LabeledSymMatrix:
    """Block-diagonal localizing matrix, one block per constraint in order.

    An empty constraint list gives the 0x0 matrix (PSD by convention).
    Labels are (constraint_position, local_exponent) pairs.
    """
    blocks = [localizing_matrix(y_sub, g, d) for g in g_vec]
    labels = tuple((pos, lab) for pos, blk in enumerate(blocks, start=1) for lab in blk.labels)
    total = sum(blk.size for blk in blocks)
    data = np.zeros((total, total))
    at = 0
    for blk in blocks:
        data[at : at + blk.size, at : at + blk.size] = blk.data
        at += blk.size
    return LabeledSymMatrix(y_sub.clique, labels, data)


def overlap_moment_matrix(y: SparseMomentVector, i: int, j: int, d: int) -> LabeledSymMatrix:
    """Moment matrix of order ``d`` on the variables shared by cliques i and j.

    A disjoint pair shares only the constant monomial, giving the 1x1 matrix
    holding the total mass.
    """
    shared = tuple(sorted(set(y.cover.clique(i)) & set(y.cover.clique(j))))
    return moment_matrix(subvector_on(y, shared), d)
