"""Multi-start penalized search over conditional-pmf tables.

Shared engine for every constrained scheme optimization in the package
(weighted rate minimization, total-rate and refinement-layer problems).  The
decision variable is a row-stochastic matrix: one simplex row per source
symbol giving the conditional law of all auxiliary variables jointly.

Three phases, all driven by one seeded generator:

1. exploration: restarts from random Dirichlet rows (restart 0 starts at the
   uniform channel), each walked by random-direction simplex perturbations
   with a decaying, backtracking step, accepted when the hinge-penalized
   objective decreases; the penalty coefficient doubles after any restart
   that ends infeasible;
2. refinement: the best few candidates are polished by an augmented
   Lagrangian whose subproblems are minimized with golden-section line
   searches along random simplex directions (multiplier estimates keep the
   surface smooth, so the line searches keep finding descent where a stiff
   hinge would stall them);
3. repair: a violation-first line-search pass pushes the residuals to the
   feasible side at negligible objective cost.

Results are certified upper bounds: the returned value belongs to the
returned table.  With a fixed seed the whole trajectory is deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .probability import InfeasibleError, InvalidInputError

#: residual total below which a point is reported feasible
FEAS_TOL = 1e-7

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Budget:
    """Effort knobs for the three phases."""

    restarts: int = 16
    iters: int = 1500  # exploration steps per restart
    refine_rounds: int = 16  # augmented-Lagrangian outer updates
    refine_iters: int = 300  # line searches per outer update
    refine_top: int = 2  # candidates carried into refinement
    repair_iters: int = 500
    init_step: float = 0.6
    min_step: float = 1e-5


@dataclass(frozen=True)
class Constraint:
    """One scalar constraint on an evaluated quantity.

    kind "le":   value <= target + width
    kind "band": |value - target| <= width  (two-sided tolerance band)
    """

    name: str
    kind: str
    target: float
    width: float = 0.0

    def violation(self, value: float) -> float:
        if self.kind == "le":
            return max(0.0, value - self.target - self.width)
        if self.kind == "band":
            return max(0.0, abs(value - self.target) - self.width)
        raise InvalidInputError(f"unknown constraint kind {self.kind!r}")

    def gaps(self, value: float) -> tuple[float, ...]:
        """Signed one-sided gaps g <= 0 feeding the augmented Lagrangian."""
        if self.kind == "le":
            return (value - self.target - self.width,)
        return (value - self.target - self.width, self.target - self.width - value)


@dataclass
class SearchResult:
    cond: np.ndarray  # best row-stochastic table found
    objective: float
    constraint_values: dict[str, float]
    violations: dict[str, float]
    feasible: bool
    n_evaluations: int
    final_lambda: float
    trace: list[tuple[int, int, float, float]] = field(default_factory=list)

    @property
    def total_violation(self) -> float:
        return float(sum(self.violations.values()))


Evaluator = Callable[[np.ndarray], tuple[float, dict[str, float]]]


class _Problem:
    """Bookkeeping shared by the phases: evaluation, violations, proposals."""

    def __init__(self, evaluate: Evaluator, constraints: Sequence[Constraint],
                 n_rows: int, n_cols: int, rng: np.random.Generator):
        self.evaluate = evaluate
        self.constraints = list(constraints)
        self.n_rows, self.n_cols = n_rows, n_cols
        self.rng = rng
        self.n_evals = 0

    def probe(self, cond: np.ndarray) -> tuple[float, dict[str, float], float]:
        obj, cvals = self.evaluate(cond)
        self.n_evals += 1
        viol = sum(c.violation(cvals[c.name]) for c in self.constraints)
        return obj, cvals, float(viol)

    def gaps(self, cvals: Mapping[str, float]) -> np.ndarray:
        out: list[float] = []
        for c in self.constraints:
            out.extend(c.gaps(cvals[c.name]))
        return np.asarray(out)

    def direction(self) -> np.ndarray:
        d = self.rng.standard_normal((self.n_rows, self.n_cols))
        d -= d.mean(axis=1, keepdims=True)
        norm = np.linalg.norm(d)
        return d / norm if norm > 0 else d

    def single_row_direction(self) -> np.ndarray:
        d = np.zeros((self.n_rows, self.n_cols))
        r = int(self.rng.integers(self.n_rows)) if self.n_rows > 1 else 0
        row = self.rng.standard_normal(self.n_cols)
        row -= row.mean()
        norm = np.linalg.norm(row)
        if norm > 0:
            d[r] = row / norm
        return d

    @staticmethod
    def move(cond: np.ndarray, direction: np.ndarray, t: float) -> np.ndarray | None:
        cand = cond + t * direction
        np.clip(cand, 0.0, None, out=cand)
        s = cand.sum(axis=1, keepdims=True)
        if np.any(s <= 0.0):
            return None
        return cand / s

    def line_search(self, score: Callable[[np.ndarray], float], cond: np.ndarray,
                    direction: np.ndarray, t_max: float, iters: int = 22):
        """Golden-section minimization of `score` along a simplex direction."""

        def f(t: float):
            m = self.move(cond, direction, t)
            if m is None:
                return math.inf, None
            return score(m), m

        a, b = 0.0, t_max
        c, d = b - _INVPHI * (b - a), a + _INVPHI * (b - a)
        fc, fd = f(c), f(d)
        for _ in range(iters):
            if fc[0] <= fd[0]:
                b, d, fd = d, c, fc
                c = b - _INVPHI * (b - a)
                fc = f(c)
            else:
                a, c, fc = c, d, fd
                d = a + _INVPHI * (b - a)
                fd = f(d)
        return fc if fc[0] <= fd[0] else fd


def multistart_minimize(
    evaluate: Evaluator,
    n_rows: int,
    n_cols: int,
    constraints: Sequence[Constraint],
    budget: Budget = Budget(),
    seed: int = 0,
    lambda0: float = 10.0,
    keep_trace: bool = False,
    feas_tol: float = FEAS_TOL,
) -> SearchResult:
    """Minimize `evaluate`'s objective over row-stochastic (n_rows, n_cols)
    tables subject to `constraints`; see the module docstring for the method.
    """
    if n_cols < 1 or n_rows < 1:
        raise InvalidInputError("need at least one row and one column")
    rng = np.random.default_rng(seed)
    prob = _Problem(evaluate, constraints, n_rows, n_cols, rng)
    lam = float(lambda0)
    trace: list[tuple[int, int, float, float]] = []

    # -- phase 1: hinge-penalized exploration walks --------------------------
    candidates: list[tuple[float, float, float, np.ndarray]] = []  # (viol, obj, lam, cond)
    for r in range(budget.restarts):
        if r == 0:
            cond = np.full((n_rows, n_cols), 1.0 / n_cols)
        else:
            cond = rng.dirichlet(np.ones(n_cols), size=n_rows)
        obj, cvals, viol = prob.probe(cond)
        pen = obj + lam * viol
        step = budget.init_step
        for it in range(budget.iters):
            direction = prob.single_row_direction() if it % 2 == 0 else prob.direction()
            accepted = False
            for scale in (1.0, 0.25, 0.0625):
                cand = prob.move(cond, direction, step * scale)
                if cand is None:
                    continue
                cobj, ccvals, cviol = prob.probe(cand)
                cpen = cobj + lam * cviol
                if cpen < pen - 1e-15:
                    cond, obj, cvals, viol, pen = cand, cobj, ccvals, cviol, cpen
                    accepted = True
                    break
            step = min(max(step * (1.05 if accepted else 0.98), budget.min_step), 1.0)
            if keep_trace and (accepted or it % 200 == 0):
                trace.append((r, it, obj, viol))
        candidates.append((viol, obj, lam, cond.copy()))
        if viol > feas_tol:
            lam = min(lam * 2.0, 1e6)

    candidates.sort(key=lambda c: (c[0] > feas_tol, c[1] + lambda0 * c[0]))

    # -- phase 2: augmented-Lagrangian refinement of the leaders -------------
    def sq_gaps(cvals: Mapping[str, float]) -> float:
        g = prob.gaps(cvals)
        return float((np.maximum(0.0, g) ** 2).sum())

    def refine(cond: np.ndarray) -> np.ndarray:
        n_gaps = prob.gaps({c.name: 0.0 for c in constraints}).size
        mu = np.zeros(n_gaps)
        rho = max(lambda0, 1.0)
        for outer in range(budget.refine_rounds):
            def al_score(c: np.ndarray) -> float:
                o, cv = prob.evaluate(c)
                prob.n_evals += 1
                g = prob.gaps(cv)
                t = np.maximum(0.0, mu + rho * g)
                return o + float((t * t - mu * mu).sum()) / (2.0 * rho)

            cur = al_score(cond)
            quiet = 0
            for it in range(budget.refine_iters):
                direction = prob.direction() if it % 4 else prob.single_row_direction()
                score, cand = prob.line_search(al_score, cond, direction, 0.4, iters=26)
                if cand is not None and score < cur - 1e-14:
                    cur, cond = score, cand
                    quiet = 0
                else:
                    quiet += 1
                    if quiet > 80:
                        break
            _, cvals = prob.evaluate(cond)
            prob.n_evals += 1
            mu = np.maximum(0.0, mu + rho * prob.gaps(cvals))
            rho = min(rho * 1.8, 3e5)
            if keep_trace:
                o, _, v = prob.probe(cond)
                trace.append((budget.restarts + outer, 0, o, v))
        return cond

    # -- phase 3: smooth residual repair + pinned value polish ----------------
    # squared distances are C^1, so line searches cannot corner-lock the way
    # the raw hinge sum does when constraint surfaces meet tangentially; band
    # quantities are pulled to their centers, which removes in-band slack as
    # a source of objective understatement
    def sq_center(cvals: Mapping[str, float]) -> float:
        total = 0.0
        for c in constraints:
            v = cvals[c.name]
            if c.kind == "band":
                total += (v - c.target) ** 2
            else:
                total += max(0.0, v - c.target - c.width) ** 2
        return total

    def repair(cond: np.ndarray) -> np.ndarray:
        def q_score(c: np.ndarray) -> float:
            _, cv = prob.evaluate(c)
            prob.n_evals += 1
            return sq_center(cv)

        _, cvals, viol = prob.probe(cond)
        q = sq_center(cvals)
        for it in range(budget.repair_iters):
            if q <= 1e-16:
                break
            direction = prob.direction() if it % 2 else prob.single_row_direction()
            got, cand = prob.line_search(q_score, cond, direction, 0.05, iters=26)
            if cand is not None and got < q * (1.0 - 1e-12):
                q, cond = got, cand

        def pinned(c: np.ndarray) -> float:
            o, cv = prob.evaluate(c)
            prob.n_evals += 1
            return o + 1e6 * sq_center(cv)

        cur = pinned(cond)
        for it in range(max(budget.repair_iters // 2, 100)):
            direction = prob.direction() if it % 2 else prob.single_row_direction()
            got, cand = prob.line_search(pinned, cond, direction, 0.02, iters=24)
            if cand is not None and got < cur - 1e-14:
                cur, cond = got, cand
        return cond

    best: tuple[float, float, np.ndarray, dict[str, float]] | None = None  # viol, obj, cond, cvals

    def consider(cond: np.ndarray):
        nonlocal best
        obj, cvals, viol = prob.probe(cond)
        if best is None:
            best = (viol, obj, cond.copy(), cvals)
            return
        bviol, bobj = best[0], best[1]
        if viol <= feas_tol and bviol <= feas_tol:
            take = obj < bobj
        else:
            take = (viol > feas_tol, viol, obj) < (bviol > feas_tol, bviol, bobj)
        if take:
            best = (viol, obj, cond.copy(), cvals)

    for viol, obj, _lam, cond in candidates[: max(budget.refine_top, 1)]:
        consider(cond)
        if budget.refine_rounds > 0:
            polished = refine(cond.copy())
            consider(polished)
            consider(repair(polished.copy()))
    for viol, obj, _lam, cond in candidates[max(budget.refine_top, 1):]:
        consider(cond)

    assert best is not None
    viol, obj, cond, cvals = best
    violations = {c.name: c.violation(cvals[c.name]) for c in constraints}
    return SearchResult(
        cond=cond,
        objective=float(obj),
        constraint_values={k: float(v) for k, v in cvals.items()},
        violations=violations,
        feasible=viol <= feas_tol,
        n_evaluations=prob.n_evals,
        final_lambda=lam,
        trace=trace,
    )


def require_feasible(result: SearchResult, context: str) -> SearchResult:
    if not result.feasible:
        worst = max(result.violations.items(), key=lambda kv: kv[1], default=("", 0.0))
        raise InfeasibleError(
            f"no feasible scheme found for {context}; "
            f"worst residual {worst[0]}={worst[1]:.3g} after {result.n_evaluations} evaluations"
        )
    return result


# ---------------------------------------------------------------------------
# Fast information helpers on raw float arrays (hot-loop material)
# ---------------------------------------------------------------------------


def ent_bits(a: np.ndarray) -> float:
    """Entropy in bits of a nonnegative weight array."""
    v = a.ravel()
    nz = v[v > 0.0]
    if nz.size == 0:
        return 0.0
    return float(-np.dot(nz, np.log2(nz)))


def mi_bits(m: np.ndarray) -> float:
    """I(row variable; column variable) of a 2-D joint array, in bits."""
    return max(ent_bits(m.sum(axis=1)) + ent_bits(m.sum(axis=0)) - ent_bits(m), 0.0)


def min_decoder_distortion(joint_x_inputs: np.ndarray, dtable: np.ndarray) -> float:
    """Best deterministic-decoder expected distortion.

    `joint_x_inputs`: joint weights shaped (|X|, n_input_cells);
    `dtable`: distortion (|X|, |recon|).  For each input cell the
    reconstruction minimizing conditional expected distortion is taken.
    """
    scores = dtable.T @ joint_x_inputs  # (|recon|, n_cells)
    return float(scores.min(axis=0).sum())
