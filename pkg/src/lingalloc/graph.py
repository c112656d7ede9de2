"""Maximum spanning arborescence decoding and arborescence partition functions.

Sentences are rooted graphs: node 0 is an artificial ROOT, nodes 1..n are the
tokens. Arc scores live in log space. All functions here are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, InfeasibleTreeError, NumericalError

# Finite stand-in for -inf: hugely negative but safe to add/subtract a few
# times without producing NaN. Anything at or below FORBIDDEN_THRESHOLD is
# treated as a forbidden arc.
FORBIDDEN = -np.finfo(np.float64).max / 4.0
FORBIDDEN_THRESHOLD = FORBIDDEN / 2.0


@dataclass(frozen=True)
class Arborescence:
    """Head assignment for tokens 1..n; heads[i] is the head of token i+1.

    Exactly one token has head 0 (single root) and the assignment is acyclic,
    so every token is reachable from ROOT.
    """

    heads: tuple[int, ...]

    def __post_init__(self):
        n = len(self.heads)
        if n == 0:
            raise DataError("arborescence over zero tokens")
        roots = [d for d, h in enumerate(self.heads, start=1) if h == 0]
        if len(roots) != 1:
            raise DataError(f"expected exactly one root attachment, found {len(roots)}")
        for d, h in enumerate(self.heads, start=1):
            if not 0 <= h <= n or h == d:
                raise DataError(f"head {h} out of range for dependent {d} (n={n})")
        # acyclicity: walking head pointers from any token must reach ROOT
        for start in range(1, n + 1):
            seen = set()
            v = start
            while v != 0:
                if v in seen:
                    raise DataError(f"cycle through token {start}")
                seen.add(v)
                v = self.heads[v - 1]

    @property
    def n(self) -> int:
        return len(self.heads)


class ArcScores:
    """Dense (n+1) x n matrix of arc log-scores.

    Row h in {0..n} is the head (0 = ROOT), column j holds dependent d = j+1.
    Non-finite entries (-inf) are replaced by the FORBIDDEN sentinel so that
    downstream arithmetic stays NaN-free.
    """

    def __init__(self, matrix):
        m = np.asarray(matrix, dtype=np.float64).copy()
        if m.ndim != 2 or m.shape[0] != m.shape[1] + 1 or m.shape[1] < 1:
            raise DataError(f"arc score matrix must be (n+1) x n, got {m.shape}")
        if np.isnan(m).any() or np.isposinf(m).any():
            raise DataError("arc scores must be finite or -inf")
        m[np.isneginf(m)] = FORBIDDEN
        self.n = m.shape[1]
        self.scores = m

    def score(self, head: int, dep: int) -> float:
        return float(self.scores[head, dep - 1])

    def square(self) -> np.ndarray:
        """(n+1) x (n+1) copy with a forbidden column 0 and forbidden diagonal."""
        n = self.n
        sq = np.full((n + 1, n + 1), FORBIDDEN)
        sq[:, 1:] = self.scores
        for d in range(1, n + 1):
            sq[d, d] = FORBIDDEN
        return sq


def _greedy_heads(sq: np.ndarray) -> np.ndarray:
    """Best head per dependent, ties broken toward the smallest head index."""
    m = sq.shape[0]
    heads = np.zeros(m, dtype=np.int64)
    for d in range(1, m):
        col = sq[:, d].copy()
        col[d] = -np.inf
        heads[d] = int(np.argmax(col))
    return heads


def _find_cycle(heads: np.ndarray) -> list[int] | None:
    m = len(heads)
    color = [0] * m  # 0 = unvisited, 1 = on current path, 2 = finished
    color[0] = 2
    for start in range(1, m):
        if color[start]:
            continue
        path = []
        v = start
        while color[v] == 0:
            color[v] = 1
            path.append(v)
            v = int(heads[v])
        if color[v] == 1:
            return sorted(path[path.index(v):])
        for u in path:
            color[u] = 2
    return None


def _cle(sq: np.ndarray) -> np.ndarray:
    """Unconstrained maximum arborescence on a square score matrix.

    Greedy head selection followed by cycle contraction; the recursion depth
    is bounded by the node count. Returns the full head array (index 0 unused).
    """
    heads = _greedy_heads(sq)
    cycle = _find_cycle(heads)
    if cycle is None:
        return heads
    in_cycle = set(cycle)
    cycle_score = {v: sq[heads[v], v] for v in cycle}
    rest = [0] + [v for v in range(1, sq.shape[0]) if v not in in_cycle]
    k = len(rest)  # contracted node gets index k
    sub = np.full((k + 1, k + 1), FORBIDDEN)
    for xi, x in enumerate(rest):
        for yi, y in enumerate(rest):
            if xi != yi and yi != 0:
                sub[xi, yi] = sq[x, y]
    exit_choice = {}
    for yi, y in enumerate(rest):
        if yi == 0:
            continue
        vals = [sq[v, y] for v in cycle]
        best = int(np.argmax(vals))
        sub[k, yi] = vals[best]
        exit_choice[yi] = cycle[best]
    enter_choice = {}
    for xi, x in enumerate(rest):
        vals = [sq[x, v] - cycle_score[v] for v in cycle]
        best = int(np.argmax(vals))
        sub[xi, k] = vals[best]
        enter_choice[xi] = cycle[best]
    sub_heads = _cle(sub)
    out = heads.copy()  # cycle-internal arcs kept unless broken below
    for yi in range(1, k):
        h = int(sub_heads[yi])
        out[rest[yi]] = exit_choice[yi] if h == k else rest[h]
    entry = int(sub_heads[k])
    broken = enter_choice[entry]
    out[broken] = rest[entry]
    return out


def _total(sq: np.ndarray, heads: np.ndarray) -> float:
    return float(sum(sq[int(heads[d]), d] for d in range(1, sq.shape[0])))


def chu_liu_edmonds(scores: ArcScores) -> Arborescence:
    """Maximum-score arborescence with exactly one ROOT attachment.

    If the unconstrained optimum attaches several tokens to ROOT, the
    constrained optimum is recovered by re-solving once per candidate root
    arc with all other ROOT arcs forbidden, keeping the best total. Ties are
    broken toward the lexicographically smallest heads sequence among the
    candidates considered.
    """
    sq = scores.square()
    n = scores.n
    root_row = sq[0, 1:]
    if not (root_row > FORBIDDEN_THRESHOLD).any():
        raise InfeasibleTreeError("every ROOT arc is forbidden")
    heads = _cle(sq)
    root_children = [d for d in range(1, n + 1) if heads[d] == 0]
    if len(root_children) == 1:
        return Arborescence(tuple(int(h) for h in heads[1:]))
    best: tuple[float, tuple[int, ...]] | None = None
    for d in range(1, n + 1):
        if sq[0, d] <= FORBIDDEN_THRESHOLD:
            continue
        forced = sq.copy()
        forced[0, 1:] = FORBIDDEN
        forced[0, d] = sq[0, d]
        cand = _cle(forced)
        key = (_total(sq, cand), tuple(int(h) for h in cand[1:]))
        if best is None or key[0] > best[0] or (key[0] == best[0] and key[1] < best[1]):
            best = key
    assert best is not None
    return Arborescence(best[1])


def tree_log_prob(arc_probas: np.ndarray, tree: Arborescence) -> float:
    """Sum over dependents of log P(head | dependent).

    `arc_probas` is (n+1) x n with columns summing to one. A zero-probability
    arc yields -inf, which is a valid (maximally urgent) score.
    """
    probas = np.asarray(arc_probas, dtype=np.float64)
    n = tree.n
    if probas.shape != (n + 1, n):
        raise DataError(f"probability matrix {probas.shape} does not match n={n}")
    total = 0.0
    for d, h in enumerate(tree.heads, start=1):
        p = probas[h, d - 1]
        if p <= 0.0:
            return float("-inf")
        total += float(np.log(p))
    return total


def log_partition(scores: ArcScores) -> float:
    """Log of the summed exponentiated scores of all single-root arborescences.

    Uses the directed matrix-tree construction restricted to single-root
    trees: build the in-degree Laplacian over tokens from non-ROOT arc
    weights, replace its first row with the ROOT arc weights, and take the
    log-determinant. Each dependent's column is shifted by its maximum
    log-score before exponentiation; the shifts are added back at the end.
    """
    n = scores.n
    sq = scores.square()
    col_max = np.empty(n)
    for d in range(1, n + 1):
        col = sq[:, d].copy()
        col[d] = -np.inf
        col_max[d - 1] = col.max()
    if (col_max <= FORBIDDEN_THRESHOLD).any():
        bad = int(np.argmax(col_max <= FORBIDDEN_THRESHOLD)) + 1
        raise InfeasibleTreeError(f"dependent {bad} has no permitted head arc")
    shifted = sq[:, 1:] - col_max[None, :]
    with np.errstate(under="ignore"):
        weights = np.exp(shifted)  # forbidden arcs underflow to exactly 0
    root_w = weights[0]
    inner = weights[1:, :]  # inner[h-1, d-1] = weight of arc h -> d; diagonal is 0
    lap_hat = -inner.copy()
    lap_hat[np.diag_indices(n)] = inner.sum(axis=0)
    lap_hat[0, :] = root_w
    sign, logdet = np.linalg.slogdet(lap_hat)
    if sign <= 0 or not np.isfinite(logdet):
        cond = float(np.linalg.cond(lap_hat)) if n > 0 else float("nan")
        raise NumericalError(
            f"laplacian determinant not positive (sign={sign}, cond={cond:.3e})"
        )
    return float(col_max.sum() + logdet)
