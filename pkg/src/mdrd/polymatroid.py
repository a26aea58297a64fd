"""Rate set-functions on description subsets and their greedy vertices.

For an L-description auxiliary scheme, the one-scheme rate region is

    { (R_1 .. R_L) :  sum_{k in K} R_k  >=  psi(K)   for all nonempty K },

where psi is normalized (psi(emptyset) = 0), nondecreasing, and supermodular.
Such a region is a contra-polymatroid: it has exactly L! vertices, one per
permutation pi, generated greedily by tightening the prefix constraints of
pi in order.  Minimizing a nonnegative weighted sum of rates over the region
is solved exactly by the greedy vertex of the weight-descending order.

Subsets of {1..L} are frozensets at the API surface and bitmasks internally;
axis names follow the `X<digits>` convention (`X0` for the empty subset's
common layer, `X12` for {1,2}, source axis `X`).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .probability import InvalidInputError, JointPmf, clamp_info

#: exhaustive pairwise property checks are O(4^L); keep L small by contract
MAX_L_CHECKS = 5
#: vertex enumeration is O(L! * L); larger L is meaningless at desk scale
MAX_L_VERTICES = 8

SOURCE_AXIS = "X"


def subset_name(K: Iterable[int]) -> str:
    """Canonical axis name for the auxiliary variable of subset K."""
    K = sorted(set(K))
    if any(k < 1 or k > 9 for k in K):
        raise InvalidInputError("description indices must lie in 1..9")
    return "X0" if not K else "X" + "".join(str(k) for k in K)


def parse_subset(text: str) -> frozenset[int]:
    """Parse '1,3' or '13' or '' into a description subset."""
    text = text.strip()
    if not text or text == "0":
        return frozenset()
    parts = text.split(",") if "," in text else list(text)
    try:
        out = frozenset(int(p) for p in parts if p.strip())
    except ValueError:
        raise InvalidInputError(f"cannot parse subset {text!r}") from None
    return out


def all_subsets(L: int) -> list[frozenset[int]]:
    """Every subset of {1..L}, emptyset first, by (size, lexicographic)."""
    out: list[frozenset[int]] = []
    for r in range(L + 1):
        out.extend(frozenset(c) for c in combinations(range(1, L + 1), r))
    return out


def scheme_axis_names(L: int) -> list[str]:
    return [SOURCE_AXIS] + [subset_name(K) for K in all_subsets(L)]


@dataclass(frozen=True)
class SubsetFn:
    """A real-valued function on all 2^L subsets of {1..L}."""

    L: int
    values: Mapping[frozenset[int], float]

    def __post_init__(self):
        need = set(all_subsets(self.L))
        have = set(self.values)
        if need != have:
            missing = sorted(tuple(sorted(k)) for k in need - have)
            raise InvalidInputError(f"subset function incomplete; missing {missing}")

    def __call__(self, K: Iterable[int]) -> float:
        return float(self.values[frozenset(K)])

    @staticmethod
    def from_callable(L: int, fn: Callable[[frozenset[int]], float]) -> "SubsetFn":
        return SubsetFn(L, {K: float(fn(K)) for K in all_subsets(L)})


@dataclass(frozen=True)
class RateVertex:
    """A greedy vertex of the rate region and the permutation that built it."""

    rates: tuple[float, ...]
    permutation: tuple[int, ...]

    def weighted(self, weights: Sequence[float]) -> float:
        return float(sum(w * r for w, r in zip(weights, self.rates)))


@dataclass(frozen=True)
class ContraPolymatroidReport:
    """Outcome of the exhaustive normalized/nondecreasing/supermodular check."""

    normalized: bool
    nondecreasing: bool
    supermodular: bool
    normalization_error: float
    worst_monotonicity_violation: float  # max over S subset T of f(S) - f(T)
    worst_supermodularity_violation: float  # max of f(S)+f(T)-f(S|T)-f(S&T)

    @property
    def is_contra_polymatroid(self) -> bool:
        return self.normalized and self.nondecreasing and self.supermodular

    def to_json(self) -> dict:
        return {
            "normalized": self.normalized,
            "nondecreasing": self.nondecreasing,
            "supermodular": self.supermodular,
            "normalization_error": self.normalization_error,
            "worst_monotonicity_violation": self.worst_monotonicity_violation,
            "worst_supermodularity_violation": self.worst_supermodularity_violation,
        }


# ---------------------------------------------------------------------------
# The rate set-function of a layered auxiliary scheme
# ---------------------------------------------------------------------------


def psi(joint: JointPmf, L: int, K: Iterable[int]) -> float:
    """Rate bound (bits) on sum_{k in K} R_k for a full layered scheme.

        psi(K) = (|K| - 1) I(X; X0) - H(X_(2^K) | X)
                 + sum_{A subset of K} H(X_A | X_(2^A - {A}))

    `joint` must carry the source axis `X` and one axis per subset of {1..L}.
    psi(emptyset) is identically zero (the three terms cancel), so it is
    returned as exact 0.0 rather than re-derived in floating point.
    """
    K = frozenset(K)
    if not K <= set(range(1, L + 1)):
        raise InvalidInputError(f"subset {sorted(K)} not within 1..{L}")
    if not K:
        return 0.0
    subs = [frozenset(c) for r in range(len(K) + 1) for c in combinations(sorted(K), r)]
    power_names = [subset_name(A) for A in subs]
    i_common = joint.mutual_information([SOURCE_AXIS], [subset_name(frozenset())])
    total = (len(K) - 1) * i_common
    total -= joint.conditional_entropy(power_names, [SOURCE_AXIS])
    for A in subs:
        below = [subset_name(B) for B in subs if B < A]
        total += joint.conditional_entropy([subset_name(A)], below)
    return total


def psi_fn(joint: JointPmf, L: int) -> SubsetFn:
    """Tabulate psi over all 2^L subsets."""
    return SubsetFn.from_callable(L, lambda K: psi(joint, L, K))


# ---------------------------------------------------------------------------
# Contra-polymatroid machinery
# ---------------------------------------------------------------------------


def check_contra_polymatroid(f: SubsetFn, tol: float = 1e-9) -> ContraPolymatroidReport:
    """Exhaustively test the three contra-polymatroid axioms.

    All subset pairs are checked (4^L combinations), which is the point of the
    L <= 5 cap: violations are found, not sampled.
    """
    if f.L > MAX_L_CHECKS:
        raise InvalidInputError(f"exhaustive checks capped at L={MAX_L_CHECKS}, got {f.L}")
    subs = all_subsets(f.L)
    norm_err = abs(f(frozenset()))
    worst_mono = -np.inf
    worst_super = -np.inf
    for S in subs:
        for T in subs:
            if S < T:
                worst_mono = max(worst_mono, f(S) - f(T))
            worst_super = max(worst_super, f(S) + f(T) - f(S | T) - f(S & T))
    return ContraPolymatroidReport(
        normalized=norm_err <= tol,
        nondecreasing=worst_mono <= tol,
        supermodular=worst_super <= tol,
        normalization_error=float(norm_err),
        worst_monotonicity_violation=float(worst_mono),
        worst_supermodularity_violation=float(worst_super),
    )


def _check_permutation(pi: Sequence[int], L: int) -> tuple[int, ...]:
    pi = tuple(int(k) for k in pi)
    if sorted(pi) != list(range(1, L + 1)):
        raise InvalidInputError(f"{pi} is not a permutation of 1..{L}")
    return pi


def greedy_vertex(f: SubsetFn, pi: Sequence[int]) -> RateVertex:
    """Vertex with the prefix constraints of `pi` tight:

        R_pi(1) = f({pi(1)}),   R_pi(k) = f(prefix_k) - f(prefix_{k-1}).
    """
    pi = _check_permutation(pi, f.L)
    rates = [0.0] * f.L
    prev = 0.0
    prefix: set[int] = set()
    for k in pi:
        prefix.add(k)
        cur = f(prefix)
        rates[k - 1] = cur - prev
        prev = cur
    return RateVertex(tuple(rates), pi)


def enumerate_vertices(f: SubsetFn) -> list[RateVertex]:
    """All L! greedy vertices, in lexicographic permutation order."""
    if f.L > MAX_L_VERTICES:
        raise InvalidInputError(f"vertex enumeration capped at L={MAX_L_VERTICES}, got {f.L}")
    return [greedy_vertex(f, pi) for pi in permutations(range(1, f.L + 1))]


def vertex_constraint_slack(f: SubsetFn, v: RateVertex) -> float:
    """min over nonempty K of (sum_{k in K} v_k - f(K)); >= -tol at a vertex."""
    slack = np.inf
    for K in all_subsets(f.L):
        if not K:
            continue
        slack = min(slack, sum(v.rates[k - 1] for k in K) - f(K))
    return float(slack)


def min_weighted_sum(f: SubsetFn, weights: Sequence[float]) -> tuple[float, RateVertex]:
    """Exact minimum of sum_k alpha_k R_k over the contra-polymatroid.

    Sorts the weights in descending order (ties broken by ascending
    description index) and returns that greedy vertex; for a normalized
    nondecreasing supermodular f this is the LP optimum.
    """
    weights = [float(w) for w in weights]
    if len(weights) != f.L:
        raise InvalidInputError(f"need {f.L} weights, got {len(weights)}")
    if any(w < 0 for w in weights):
        raise InvalidInputError("weights must be nonnegative")
    order = sorted(range(1, f.L + 1), key=lambda k: (-weights[k - 1], k))
    v = greedy_vertex(f, order)
    return v.weighted(weights), v
