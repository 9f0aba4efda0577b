"""Maximum-weight bipartite matching (Hungarian algorithm).

Semantics: the input matrix is conceptually padded to a square with zero-weight
dummy rows/columns and a perfect matching of maximum total weight is computed.
-inf marks a forbidden pair; internally it becomes a finite sentinel that any
finite total dominates, so the solver first minimises the number of forbidden
edges it is forced to use and then maximises the finite weight. Chosen pairs
that are forbidden or touch a dummy are dropped from the output.

Consequences worth knowing:
  * adding a constant to a full row, or scaling all finite weights by a
    positive factor, never changes the optimal pairing on tie-free instances;
  * negative weights are legitimate and are kept when the perfect matching
    forces them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

# Matrices padded up to this size get the canonical tie-break pass.
_REFINE_SIZE_LIMIT = 24


@dataclass(frozen=True)
class MatchingResult:
    pairs: Tuple[Tuple[int, int], ...]  # (row, col), sorted by row
    total: float


def _jv_min_assign(cost: np.ndarray) -> np.ndarray:
    """Shortest-augmenting-path assignment on an n x m cost matrix, n <= m.

    Returns the matched column per row. Deterministic: ties in the slack scan
    resolve to the lowest column index. O(n^2 m) with vectorised inner scans.
    """
    n, m = cost.shape
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    p = np.zeros(m + 1, dtype=int)  # p[j] = row matched to column j (1-based), 0 = free
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(m, np.inf)
        way = np.zeros(m, dtype=int)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used[1:]
            cur = cost[i0 - 1, :] - u[i0] - v[1:]
            upd = free & (cur < minv)
            minv[upd] = cur[upd]
            way[upd] = j0
            masked = np.where(free, minv, np.inf)
            j1 = int(np.argmin(masked)) + 1
            delta = masked[j1 - 1]
            u[p[used]] += delta
            v[used] -= delta
            minv[free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0 - 1]
            p[j0] = p[j1]
            j0 = j1
    row_col = np.full(n, -1, dtype=int)
    for j in range(1, m + 1):
        if p[j] != 0:
            row_col[p[j] - 1] = j - 1
    return row_col


def _validate(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2:
        raise ValueError("weight matrix must be two-dimensional")
    if np.any(np.isnan(w)) or np.any(np.isposinf(w)):
        raise ValueError("weights must be finite or -inf")
    return w


def _assign(w: np.ndarray) -> np.ndarray:
    """Optimal column per row (-1 where a row lands on a dummy column)."""
    n, m = w.shape
    finite = w[np.isfinite(w)]
    big = 1.0 + 2.0 * float(np.sum(np.abs(finite))) if finite.size else 1.0
    cost = np.where(np.isneginf(w), big, -w)
    if n <= m:
        return _jv_min_assign(cost)
    col_row = _jv_min_assign(cost.T)
    row_col = np.full(n, -1, dtype=int)
    for j, i in enumerate(col_row):
        row_col[i] = j
    return row_col


def _score(w: np.ndarray, row_col: np.ndarray) -> Tuple[int, float]:
    """(forbidden edge count, finite weight sum) of an assignment."""
    forb = 0
    total = 0.0
    for i, j in enumerate(row_col):
        if j < 0:
            continue
        wij = w[i, j]
        if np.isneginf(wij):
            forb += 1
        else:
            total += wij
    return forb, total


def _better(a: Tuple[int, float], b: Tuple[int, float], tol: float) -> bool:
    """True when score a strictly beats b (fewer forbidden, then larger sum)."""
    if a[0] != b[0]:
        return a[0] < b[0]
    return a[1] > b[1] + tol


def _refine_lexicographic(w: np.ndarray, base: np.ndarray) -> np.ndarray:
    """Among optimal assignments, move each row to its smallest viable column.

    Rows are processed in order, keeping the invariant that `chosen` always
    extends the fixed prefix into a full optimal assignment. For row i only
    columns below its current match are probed; an accepted probe also installs
    the reduced problem's completion for the remaining rows. Optimality is
    compared at 1e-9 relative tolerance on the finite weight sum.
    """
    n, m = w.shape
    base_score = _score(w, base)
    tol = 1e-9 * (1.0 + abs(base_score[1]))
    chosen = base.copy()
    taken: set = set()
    prefix_forb, prefix_sum = 0, 0.0
    for i in range(n):
        rows_left = list(range(i + 1, n))
        current_j = int(chosen[i])
        candidates = [j for j in range(m) if j not in taken and (current_j < 0 or j < current_j)]
        for j in candidates:
            cols_left = [c for c in range(m) if c not in taken and c != j]
            if rows_left and cols_left:
                sub = w[np.ix_(rows_left, cols_left)]
                sub_assign = _assign(sub)
                sforb, ssum = _score(sub, sub_assign)
            else:
                sub_assign = None
                sforb, ssum = 0, 0.0
            wij = w[i, j]
            cand_forb = prefix_forb + sforb + (1 if np.isneginf(wij) else 0)
            cand_sum = prefix_sum + ssum + (0.0 if np.isneginf(wij) else float(wij))
            if not _better(base_score, (cand_forb, cand_sum), tol):
                chosen[i] = j
                if sub_assign is not None:
                    for k, r in enumerate(rows_left):
                        sj = sub_assign[k]
                        chosen[r] = cols_left[sj] if sj >= 0 else -1
                else:
                    for r in rows_left:
                        chosen[r] = -1
                break
        final_j = int(chosen[i])
        if final_j >= 0:
            taken.add(final_j)
            wif = w[i, final_j]
            if np.isneginf(wif):
                prefix_forb += 1
            else:
                prefix_sum += float(wif)
    return chosen


def max_weight_matching(weights, refine_ties: bool = True) -> MatchingResult:
    """Maximum-weight matching of a rectangular weight matrix.

    Pairs whose weight is -inf are treated as forbidden and never appear in
    the output; rows/columns left over after the internal zero padding are
    simply unmatched. When `refine_ties` is set and the matrix is small and
    contains duplicated finite weights, equal-weight optima are canonicalised
    to the lexicographically smallest (row, col) sequence; the base solver is
    deterministic either way, and the total is unaffected.
    """
    w = _validate(weights)
    n, m = w.shape
    if n == 0 or m == 0:
        return MatchingResult((), 0.0)
    row_col = _assign(w)
    if refine_ties and max(n, m) <= _REFINE_SIZE_LIMIT:
        finite = w[np.isfinite(w)]
        if finite.size and np.unique(finite).size < finite.size:
            row_col = _refine_lexicographic(w, row_col)
    pairs = []
    total = 0.0
    for i, j in enumerate(row_col):
        if j < 0:
            continue
        wij = w[i, j]
        if np.isneginf(wij):
            continue
        pairs.append((i, int(j)))
        total += float(wij)
    return MatchingResult(tuple(pairs), total)
