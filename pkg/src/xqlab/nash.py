"""Maximum-entropy Nash equilibria of antisymmetric payoff matrices.

For an antisymmetric payoff matrix M the symmetric-equilibrium polytope is
exactly {p in simplex : Mp <= 0} (the game value is 0), and the entropy
objective picks its unique relative-interior point. The solver runs
exponentiated-gradient ascent on the entropy in log space with an
augmented-Lagrangian penalty on Mp <= 0, followed by a support-restricted
dual polish (plain damped Newton on logsumexp) that sharpens the iterate to
solver tolerance. Everything is numpy-only and deterministic.

A fictitious-play routine provides an independent feasible point for warm
starts and game-value cross-checks, and `solve_zero_sum` handles general
rectangular zero-sum games through scipy's LP.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

log = logging.getLogger(__name__)

CONSTRAINT_TOL = 1e-6
SIMPLEX_TOL = 1e-9
MAX_ITERS = 100_000


class NashSolveError(RuntimeError):
    """Raised when a converged equilibrium is required but unavailable."""


@dataclass
class NashResult:
    """Solver output: mixed strategy plus diagnostics."""

    p: np.ndarray
    entropy: float
    max_violation: float
    iterations: int
    converged: bool
    symmetrize_adjustment: float = 0.0

    def support(self, eps: float = 1e-6) -> set[int]:
        return nash_support(self, eps)


@dataclass
class PayoffMatrix:
    """Antisymmetric payoff matrix over labeled strategies."""

    labels: list[str]
    matrix: np.ndarray
    symmetrize_adjustment: float = field(default=0.0)

    @classmethod
    def from_values(cls, labels: Sequence[str], matrix) -> "PayoffMatrix":
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != len(labels):
            raise ValueError(f"matrix shape {m.shape} does not match {len(labels)} labels")
        anti = 0.5 * (m - m.T)
        adjustment = float(np.max(np.abs(m - anti))) if m.size else 0.0
        if adjustment > 1e-6:
            log.warning("payoff matrix symmetrized; adjustment %.3g", adjustment)
        np.fill_diagonal(anti, 0.0)
        return cls(list(labels), anti, adjustment)

    @property
    def size(self) -> int:
        return len(self.labels)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(self.labels)
        for row in self.matrix:
            writer.writerow([repr(float(x)) for x in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PayoffMatrix":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty payoff CSV")
        labels = rows[0]
        values = [[float(x) for x in row] for row in rows[1:]]
        return cls.from_values(labels, np.array(values, dtype=float))


def _softmax(x: np.ndarray) -> np.ndarray:
    z = x - x.max()
    e = np.exp(z)
    return e / e.sum()


def _entropy(p: np.ndarray) -> float:
    pz = p[p > 0]
    return float(-np.sum(pz * np.log(pz)))


def fictitious_play(matrix: np.ndarray, rounds: int = 100_000) -> np.ndarray:
    """Empirical mixture of symmetric fictitious play; ties break low-index."""
    A = np.asarray(matrix, dtype=float)
    k = A.shape[0]
    counts = np.zeros(k)
    counts[0] = 1.0
    scores = A[:, 0].copy()
    for _ in range(rounds - 1):
        br = int(np.argmax(scores))
        counts[br] += 1.0
        scores += A[:, br]
    return counts / counts.sum()


@dataclass
class _PolishOutcome:
    status: str                      # "ok" | "stalled" | "infeasible"
    p: np.ndarray | None             # full-length strategy when status == "ok"
    q: np.ndarray                    # support-local iterate (softmax, > 0)
    violated: np.ndarray             # off-support rows with (Ap) > tol/2
    steps: int


def _support_polish(A: np.ndarray, support: np.ndarray, tol: float,
                    iters: int = 300) -> _PolishOutcome:
    """Solve max entropy s.t. supp(p) = `support` and A[support] p = 0 exactly.

    On the true support of the Nash polytope every constraint row holds with
    equality, so the optimum is softmax(A_s mu) for an unconstrained mu that
    minimizes logsumexp(A_s mu); that dual is smooth and convex, so a damped
    Newton iteration nails it. A strict superset of the true support cannot
    produce a feasible interior point (that would enlarge the support union),
    so it either stalls (dual unbounded, some q -> 0) or violates an
    off-support row; both are reported for the caller's support search.
    """
    k = A.shape[0]
    rows = A[support, :]  # (Anu) restricted to the support rows
    in_support = np.zeros(k, dtype=bool)
    in_support[support] = True
    nu = np.zeros(k)
    q = np.full(len(support), 1.0 / len(support))

    def objective(v: np.ndarray) -> float:
        return float(np.logaddexp.reduce(rows @ v))

    grad_stop = max(1e-12, 0.02 * tol)
    steps = 0
    for steps in range(1, iters + 1):
        y = rows @ nu
        q = _softmax(y)
        grad = q @ rows  # = (A^T embed(q)) = -(A embed(q)) by antisymmetry
        # Off-support multipliers are clamped at zero unless descent wants in.
        clamped = (~in_support) & (nu <= 0.0) & (grad >= 0.0)
        free = np.flatnonzero(~clamped)
        if len(free) == 0 or np.max(np.abs(grad[free])) < grad_stop:
            break
        B = rows[:, free]
        hess = B.T @ (np.diag(q) - np.outer(q, q)) @ B
        try:
            step_free = np.linalg.solve(hess + 1e-13 * np.eye(len(free)), -grad[free])
        except np.linalg.LinAlgError:
            step_free = -grad[free]
        f0 = objective(nu)
        t = 1.0
        accepted = False
        for _ in range(60):
            trial = nu.copy()
            trial[free] += t * step_free
            trial[~in_support] = np.maximum(trial[~in_support], 0.0)
            if objective(trial) < f0:
                nu = trial
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
    y = rows @ nu
    q = _softmax(y)
    grad = q @ rows
    clamped = (~in_support) & (nu <= 0.0) & (grad >= 0.0)
    free = np.flatnonzero(~clamped)
    none = np.zeros(0, dtype=int)
    if len(free) and np.max(np.abs(grad[free])) >= max(1e-9, 0.5 * tol):
        return _PolishOutcome("stalled", None, q, none, steps)
    full = np.zeros(k)
    full[support] = q
    violation = A @ full
    violated = np.flatnonzero(violation > 0.5 * tol)
    if len(violated):
        return _PolishOutcome("infeasible", None, q, violated, steps)
    return _PolishOutcome("ok", full, q, none, steps)


def solve_max_entropy_nash(matrix, tol: float = CONSTRAINT_TOL,
                           max_iters: int = MAX_ITERS,
                           p0: np.ndarray | None = None,
                           warm_start: bool = True) -> NashResult:
    """Unique max-entropy point of {p in simplex : Mp <= 0}.

    `matrix` may be a PayoffMatrix or a square array; it is symmetrized to
    (M - M^T)/2 first and a warning is logged when the adjustment exceeds
    1e-6. Never raises on non-convergence: the result carries diagnostics.
    """
    if isinstance(matrix, PayoffMatrix):
        M = matrix.matrix
        adjustment = matrix.symmetrize_adjustment
    else:
        M = np.asarray(matrix, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError(f"payoff matrix must be square, got shape {M.shape}")
        anti = 0.5 * (M - M.T)
        adjustment = float(np.max(np.abs(M - anti))) if M.size else 0.0
        if adjustment > 1e-6:
            log.warning("payoff matrix symmetrized; adjustment %.3g", adjustment)
        M = anti
    k = M.shape[0]
    if k == 0:
        raise ValueError("empty payoff matrix")
    if k == 1:
        return NashResult(np.array([1.0]), 0.0, 0.0, 0, True, adjustment)

    scale = float(np.max(np.abs(M)))
    A = M / scale if scale > 0 else M

    fp = fictitious_play(A, rounds=min(20_000, max(2_000, 500 * k)))
    if p0 is not None:
        p0 = np.asarray(p0, dtype=float)
        p0 = np.clip(p0, 1e-12, None)
        p0 = p0 / p0.sum()
    elif warm_start:
        p0 = 0.9 * fp + 0.1 / k
    else:
        p0 = np.full(k, 1.0 / k)

    # Phase 1: exponentiated-gradient ascent on the entropy with an
    # augmented-Lagrangian penalty on Ap <= 0, run in log space. Its job is
    # to order coordinates by Nash support, not to reach full precision.
    sigma = float(np.linalg.norm(A, 2)) if k > 1 else 1.0
    x = np.log(p0)
    lam = np.zeros(k)
    rho = 4.0
    inner = 100
    budget = min(max_iters, 3000 + 500 * k)
    iters = 0
    tail_sum = np.zeros(k)
    tail_n = 0
    while iters < budget:
        eta0 = min(0.5, 1.0 / (1.0 + 0.5 * rho * sigma))
        for _ in range(inner):
            iters += 1
            p = _softmax(x)
            g = A @ p
            mu = np.maximum(0.0, lam + rho * g)
            direction = A @ mu - x
            eta = eta0 / np.sqrt(1.0 + iters / 200.0)
            x = x + eta * (direction - direction.mean())
            x -= x.max()
            x -= np.log(np.sum(np.exp(x)))
            if iters * 2 >= budget:
                tail_sum += _softmax(x)
                tail_n += 1
        p = _softmax(x)
        g = A @ p
        lam = np.maximum(0.0, lam + rho * g)
        if float(np.max(g)) > 1e-3:
            rho = min(rho * 1.5, 64.0)
    tail_avg = tail_sum / tail_n if tail_n else _softmax(x)

    # Phase 2: adaptive support search. Stalled polish = candidate support
    # too large, so shed the lowest-priority member (priority blends the
    # phase-1 tail average with the fictitious-play mixture; Newton's own
    # collapse direction is not trustworthy on unbounded duals). Infeasible
    # polish = a profitable strategy is missing, so add the worst violator.
    # Keep the feasible candidate of maximum entropy across everything tried.
    p = _softmax(x)
    tol_scaled = tol / (scale if scale > 0 else 1.0)

    def search(priority: np.ndarray) -> tuple[np.ndarray | None, float, int]:
        seeds: list[tuple[int, ...]] = []

        def add_seed(idx) -> None:
            key = tuple(int(i) for i in np.sort(np.asarray(idx, dtype=int)))
            if key and key not in seeds:
                seeds.append(key)

        add_seed(np.arange(k))
        for tau in (1e-2, 1e-3, 1e-4, 1e-6, 1e-8):
            idx = np.flatnonzero(priority > tau)
            if len(idx):
                add_seed(idx)
        add_seed([int(np.argmax(priority))])

        found = None
        found_entropy = -np.inf
        ok_supports: list[np.ndarray] = []
        steps = 0
        tried: set[tuple[int, ...]] = set()

        def explore(support: np.ndarray) -> None:
            nonlocal found, found_entropy, steps
            for _ in range(4 * k + 8):
                key = tuple(support.tolist())
                if key in tried:
                    return
                tried.add(key)
                out = _support_polish(A, support, tol_scaled)
                steps += out.steps
                if out.status == "ok":
                    h = _entropy(out.p)
                    if h > found_entropy + 1e-12:
                        found_entropy = h
                        found = out.p
                    ok_supports.append(support)
                    # Keep shedding: a smaller support may hold a better
                    # point when this one was only a polytope face.
                    if len(support) <= 1:
                        return
                    drop = support[int(np.argmin(priority[support]))]
                    support = support[support != drop]
                elif out.status == "stalled":
                    if len(support) <= 1:
                        return
                    drop = support[int(np.argmin(priority[support]))]
                    support = support[support != drop]
                else:  # infeasible: add the most profitable missing strategy
                    full = np.zeros(k)
                    full[support] = out.q
                    worst = out.violated[int(np.argmax((A @ full)[out.violated]))]
                    support = np.sort(np.append(support, worst))

        for seed in seeds:
            explore(np.array(seed, dtype=int))

        def merge_unions() -> None:
            # Supports of feasible points union to a feasible support, often
            # the full support of the Nash polytope.
            for _ in range(k):
                if not ok_supports:
                    return
                union = np.unique(np.concatenate(ok_supports))
                if tuple(union.tolist()) in tried:
                    return
                before = len(ok_supports)
                explore(union)
                if len(ok_supports) == before:
                    return

        merge_unions()
        # Degenerate games hide polytope directions behind ties; probe each
        # missing strategy as an extension of the best support so far.
        if found is not None and len(ok_supports):
            base = np.unique(np.concatenate(ok_supports))
            for j in range(k):
                if j not in base:
                    explore(np.sort(np.append(base, j)))
            merge_unions()
        return found, found_entropy, steps

    best = None
    best_entropy = -np.inf
    for priority in (fp, np.maximum(tail_avg, fp)):
        found, h, steps = search(priority)
        iters += steps
        if found is not None and h > best_entropy + 1e-12:
            best, best_entropy = found, h
    if best is None:
        # Escalation: a longer fictitious-play run gives a sharper ordering.
        found, h, steps = search(fictitious_play(A, rounds=200_000))
        iters += steps
        if found is not None:
            best, best_entropy = found, h

    converged = best is not None
    if converged:
        p = best

    p = np.clip(p, 0.0, None)
    p = p / p.sum()
    max_violation = float(np.max(M @ p))
    if max_violation > tol:
        converged = False
    if not converged:
        log.warning("nash solver did not converge: violation %.3g after %d iterations",
                    max_violation, iters)
    return NashResult(p, _entropy(p), max_violation, iters, converged, adjustment)


def nash_support(res: NashResult, eps: float = 1e-6) -> set[int]:
    """Indices with probability above eps; requires a converged result."""
    if not res.converged:
        raise NashSolveError("support requested from an unconverged Nash result")
    return {int(j) for j in np.flatnonzero(res.p > eps)}


def solve_zero_sum(payoff: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Equilibrium (p, q, value) of a rectangular zero-sum game via LP.

    Row player maximizes p^T B q; value is unique even when the strategies
    are not.
    """
    B = np.asarray(payoff, dtype=float)
    m, n = B.shape
    # Row LP: max v s.t. B^T p >= v 1, p in simplex.
    c = np.zeros(m + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-B.T, np.ones((n, 1))])
    b_ub = np.zeros(n)
    a_eq = np.zeros((1, m + 1))
    a_eq[0, :m] = 1.0
    bounds = [(0.0, None)] * m + [(None, None)]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0], bounds=bounds,
                  method="highs")
    if not res.success:
        raise NashSolveError(f"row LP failed: {res.message}")
    p = np.clip(res.x[:m], 0.0, None)
    p /= p.sum()
    value = -res.fun

    c2 = np.zeros(n + 1)
    c2[-1] = 1.0
    a_ub2 = np.hstack([B, -np.ones((m, 1))])
    b_ub2 = np.zeros(m)
    a_eq2 = np.zeros((1, n + 1))
    a_eq2[0, :n] = 1.0
    bounds2 = [(0.0, None)] * n + [(None, None)]
    res2 = linprog(c2, A_ub=a_ub2, b_ub=b_ub2, A_eq=a_eq2, b_eq=[1.0], bounds=bounds2,
                   method="highs")
    if not res2.success:
        raise NashSolveError(f"column LP failed: {res2.message}")
    q = np.clip(res2.x[:n], 0.0, None)
    q /= q.sum()
    return p, q, float(value)


def fictitious_play_rect(payoff: np.ndarray, rounds: int = 100_000
                         ) -> tuple[np.ndarray, np.ndarray, float]:
    """Fictitious play for rectangular zero-sum games; cross-check for the LP."""
    B = np.asarray(payoff, dtype=float)
    m, n = B.shape
    rc = np.zeros(m)
    cc = np.zeros(n)
    rc[0] = 1.0
    cc[0] = 1.0
    row_scores = B[:, 0].copy()   # B @ column-counts
    col_scores = B[0, :].copy()   # row-counts @ B
    for _ in range(rounds - 1):
        rb = int(np.argmax(row_scores))
        cb = int(np.argmin(col_scores))
        rc[rb] += 1.0
        cc[cb] += 1.0
        row_scores += B[:, cb]
        col_scores += B[rb, :]
    p = rc / rc.sum()
    q = cc / cc.sum()
    value = 0.5 * (float(np.min(p @ B)) + float(np.max(B @ q)))
    return p, q, value
