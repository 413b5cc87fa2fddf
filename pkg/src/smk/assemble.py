"""Merging clique measures into a global atomic measure.

The construction is inductive: starting from the first clique's measure,
each subsequent clique measure is glued on through the marginal it shares
with its witness clique. Pairwise marginal consistency is necessary but not
sufficient without the running intersection property, so a full marginal
verification of the result against every clique measure is mandatory.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import CliqueCover, Projection, SparseMomentVector
from .errors import FinalMarginalCheckFailed, MarginalMismatch
from .extract import AtomicMeasure, lex_order_rows
from .rip import RipWitnesses

MASS_TOL = 1e-6


def _cluster(points: np.ndarray, tol: float) -> tuple[np.ndarray, list[list[int]]]:
    """Greedy clustering under the max-norm; returns representatives and the
    member indices per cluster, in first-appearance order."""
    reps: list[np.ndarray] = []
    groups: list[list[int]] = []
    for k, p in enumerate(points):
        for gi, rep in enumerate(reps):
            if p.size == 0 or np.abs(p - rep).max() <= tol:
                groups[gi].append(k)
                break
        else:
            reps.append(p)
            groups.append([k])
    rep_arr = np.array(reps) if reps else np.zeros((0, points.shape[1]))
    return rep_arr, groups


def pushforward(mu: AtomicMeasure, p: Projection, merge_tol: float = 1e-6) -> AtomicMeasure:
    """Marginal of an atomic measure: project every atom and merge the ones
    that coincide up to ``merge_tol`` (max-norm), summing their weights."""
    if p.source != mu.variables:
        raise ValueError(f"projection source {p.source} does not match measure on {mu.variables}")
    projected = mu.atoms[:, list(p.positions)]
    reps, groups = _cluster(projected, merge_tol)
    weights = np.array([mu.weights[g].sum() for g in groups])
    return AtomicMeasure(p.target, reps, weights)


@dataclass(frozen=True)
class MarginalGroups:
    """Matched overlap structure between a partial measure and an incoming
    clique measure.

    For each shared-marginal point there is one group: ``groups_a`` indexes
    atoms of the partial measure projecting onto it, ``groups_b`` atoms of
    the incoming measure, and ``masses`` holds the common projected mass.
    """

    points: np.ndarray
    masses: np.ndarray
    groups_a: tuple[tuple[int, ...], ...]
    groups_b: tuple[tuple[int, ...], ...]


def match_marginals(
    partial: AtomicMeasure,
    incoming: AtomicMeasure,
    overlap: tuple[int, ...],
    tol: float = 1e-6,
) -> MarginalGroups:
    """Match the two pushforwards onto ``overlap`` atom by atom and mass by
    mass; raises :class:`MarginalMismatch` with a diagnostic otherwise."""
    overlap = tuple(overlap)
    proj_a = partial.atoms[:, [partial.variables.index(v) for v in overlap]]
    proj_b = incoming.atoms[:, [incoming.variables.index(v) for v in overlap]]
    reps_a, groups_a = _cluster(proj_a, tol)
    reps_b, groups_b = _cluster(proj_b, tol)
    if len(groups_a) != len(groups_b):
        raise MarginalMismatch(
            f"overlap {overlap}: {len(groups_a)} marginal atoms on one side, "
            f"{len(groups_b)} on the other"
        )
    used = [False] * len(groups_b)
    order_b = []
    for ra in reps_a:
        best, best_dist = None, np.inf
        for k, rb in enumerate(reps_b):
            if used[k]:
                continue
            dist = float(np.abs(ra - rb).max()) if ra.size else 0.0
            if dist < best_dist:
                best, best_dist = k, dist
        if best is None or best_dist > tol:
            raise MarginalMismatch(
                f"overlap {overlap}: marginal atom {tuple(ra)} has no counterpart within {tol}"
            )
        used[best] = True
        order_b.append(best)
    masses = []
    for gi, bi in enumerate(order_b):
        ma = float(partial.weights[groups_a[gi]].sum())
        mb = float(incoming.weights[groups_b[bi]].sum())
        if abs(ma - mb) > MASS_TOL * (1.0 + max(abs(ma), abs(mb))):
            raise MarginalMismatch(
                f"overlap {overlap}: mass {ma:.6g} vs {mb:.6g} at point {tuple(reps_a[gi])}"
            )
        if ma <= tol:
            raise MarginalMismatch(f"overlap {overlap}: degenerate mass {ma:.3e} at a marginal atom")
        masses.append(ma)
    return MarginalGroups(
        reps_a,
        np.array(masses),
        tuple(tuple(groups_a[gi]) for gi in range(len(groups_a))),
        tuple(tuple(groups_b[bi]) for bi in order_b),
    )


def measures_close(a: AtomicMeasure, b: AtomicMeasure, tol: float = 1e-6) -> bool:
    """Same variable set, same atoms (up to order and tol), same weights."""
    if a.variables != b.variables or a.num_atoms != b.num_atoms:
        return False
    used = [False] * b.num_atoms
    for k in range(a.num_atoms):
        found = False
        for l in range(b.num_atoms):
            if used[l]:
                continue
            coord_ok = a.atoms.shape[1] == 0 or np.abs(a.atoms[k] - b.atoms[l]).max() <= tol
            if coord_ok and abs(a.weights[k] - b.weights[l]) <= MASS_TOL * (1 + abs(b.weights[l])):
                used[l] = True
                found = True
                break
        if not found:
            return False
    return True


def assemble(
    clique_measures: Sequence[AtomicMeasure],
    witnesses: RipWitnesses,
    tol: float = 1e-6,
    chosen: Mapping[int, int] | None = None,
) -> AtomicMeasure:
    """Glue clique measures (given in the witnesses' clique order) into one
    atomic measure whose marginal on every clique reproduces that clique's
    measure.

    ``chosen`` optionally fixes the witness position j used at each position
    i >= 2 (e.g. the one recorded in a certificate); by default the smallest
    admissible witness is used. After the inductive construction, every
    clique marginal of the result is verified; a failure raises
    :class:`FinalMarginalCheckFailed`, which catches glueings that were
    pairwise consistent but globally contradictory.
    """
    if len(clique_measures) != len(witnesses.order):
        raise ValueError("need exactly one measure per clique")
    current = clique_measures[0]
    for i in range(2, len(clique_measures) + 1):
        incoming = clique_measures[i - 1]
        j = chosen.get(i) if chosen is not None else None
        if j is None:
            j = min(witnesses.witness[i])
        overlap = tuple(v for v in clique_measures[j - 1].variables if v in incoming.variables)
        groups = match_marginals(current, incoming, overlap, tol)
        union_vars = tuple(sorted(set(current.variables) | set(incoming.variables)))
        new_pos = [v for v in incoming.variables if v not in current.variables]
        atoms, weights = [], []
        for gi in range(len(groups.masses)):
            theta = groups.masses[gi]
            for k in groups.groups_a[gi]:
                for l in groups.groups_b[gi]:
                    point = {v: current.atoms[k][current.variables.index(v)] for v in current.variables}
                    for v in new_pos:
                        point[v] = incoming.atoms[l][incoming.variables.index(v)]
                    atoms.append([point[v] for v in union_vars])
                    weights.append(current.weights[k] * incoming.weights[l] / theta)
        current = AtomicMeasure(union_vars, np.array(atoms), np.array(weights))

    for i, mu_i in enumerate(clique_measures, start=1):
        marginal = pushforward(current, Projection(current.variables, mu_i.variables), tol)
        if not measures_close(marginal, mu_i, tol):
            raise FinalMarginalCheckFailed(
                f"assembled measure does not reproduce the measure of clique at position {i}"
            )
    return current


def maximal_support_set(
    clique_measures: Sequence[AtomicMeasure],
    cover: CliqueCover,
    tol: float = 1e-6,
) -> np.ndarray:
    """All points whose projection onto every clique is an atom of that
    clique's measure, via constraint-propagating concatenation. The result
    does not depend on the clique order; rows are sorted lexicographically.
    """
    assigned: tuple[int, ...] = clique_measures[0].variables
    candidates = [dict(zip(assigned, atom)) for atom in clique_measures[0].atoms]
    for mu in clique_measures[1:]:
        shared = [v for v in mu.variables if v in assigned]
        new_vars = [v for v in mu.variables if v not in assigned]
        extended = []
        for cand in candidates:
            for atom in mu.atoms:
                point = dict(zip(mu.variables, atom))
                if all(abs(cand[v] - point[v]) <= tol for v in shared):
                    nxt = dict(cand)
                    for v in new_vars:
                        nxt[v] = point[v]
                    extended.append(nxt)
        candidates = extended
        assigned = tuple(sorted(set(assigned) | set(mu.variables)))
    points = np.array([[c[v] for v in range(1, cover.n + 1)] for c in candidates])
    if points.size == 0:
        return np.zeros((0, cover.n))
    return points[lex_order_rows(points)]


def verify_global(mu: AtomicMeasure, y: SparseMomentVector) -> float:
    """Max absolute residual of the measure's moments against every entry of
    the sparse moment vector."""
    if mu.variables != tuple(range(1, y.cover.n + 1)):
        raise ValueError("measure must live on all variables 1..n")
    worst = 0.0
    for alpha, target in y.entries.items():
        worst = max(worst, abs(mu.moment(alpha) - target))
    return worst
