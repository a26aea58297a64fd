"""Bundled verification suites.

Each suite draws seeded random instances, exercises one slice of the package
against its independent ground truth (exact reconstruction, set-function
axioms, transform fidelity, closed forms, optimizer cross-checks), and
returns a `SuiteResult` with per-case pass/fail counts.  The command-line
`verify` subcommand and the acceptance test module both run these.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from . import frl, polymatroid, regions, scalable, strategy
from .polymatroid import all_subsets, subset_name
from .probability import (
    Alphabet,
    Decoder,
    DistortionMeasure,
    JointPmf,
    random_pmf,
    random_rational_pmf,
)
from .search import Budget


@dataclass
class SuiteResult:
    name: str
    cases: int = 0
    passed: int = 0
    failures: list[str] = field(default_factory=list)
    details: dict = field(default_factory=dict)
    wall_time_s: float = 0.0

    @property
    def ok(self) -> bool:
        return self.cases > 0 and self.passed == self.cases

    def check(self, label: str, condition: bool):
        self.cases += 1
        if condition:
            self.passed += 1
        else:
            self.failures.append(label)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "cases": self.cases,
            "passed": self.passed,
            "failed": self.cases - self.passed,
            "ok": self.ok,
            "failures": self.failures[:32],
            "details": self.details,
            "wall_time_s": round(self.wall_time_s, 3),
        }


def _binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


# ---------------------------------------------------------------------------


def frl_suite(seed: int = 0, cases: int = 500, max_size: int = 4) -> SuiteResult:
    """Random rational joints: exact reconstruction, zero information gaps,
    and both cardinality ceilings on the decomposition."""
    t0 = time.time()
    rng = np.random.default_rng(seed)
    out = SuiteResult("frl")
    worst_gap = 0.0
    worst_card_margin = 0
    for i in range(cases):
        nu, nv, nw = (int(rng.integers(1, max_size + 1)) for _ in range(3))
        axes = [Alphabet("U", nu), Alphabet("V", nv), Alphabet("W", nw)]
        p = random_rational_pmf(rng, axes, max_numerator=9)
        dec = frl.frl_decompose(p, ["V"], "W")
        rep = frl.frl_verify(p, dec, ["V"], "W")
        bound = nv * (nw - 1) + 1
        ok = (
            rep.exact
            and rep.reconstruction_error == 0.0
            and rep.independence_gap <= 1e-10
            and rep.markov_gap <= 1e-10
            and dec.cardinality <= bound
            and (nv < 2 or dec.cardinality <= nv * nw - 1)
        )
        worst_gap = max(worst_gap, rep.independence_gap, rep.markov_gap)
        worst_card_margin = max(worst_card_margin, dec.cardinality - bound)
        out.check(f"case {i} sizes ({nu},{nv},{nw})", ok)
    out.details = {"worst_gap_bits": worst_gap, "worst_cardinality_excess": worst_card_margin}
    out.wall_time_s = time.time() - t0
    return out


def polymatroid_suite(seed: int = 0, cases: int = 200, L: int = 3) -> SuiteResult:
    """Random binary layered schemes: the rate set-function is normalized,
    nondecreasing, and supermodular; the empty set evaluates to zero both by
    the shortcut and by the raw expression."""
    t0 = time.time()
    rng = np.random.default_rng(seed)
    out = SuiteResult("polymatroid")
    axes = [Alphabet("X", 2)] + [Alphabet(subset_name(K), 2) for K in all_subsets(L)]
    worst = -np.inf
    for i in range(cases):
        joint = random_pmf(rng, axes)
        fn = polymatroid.psi_fn(joint, L)
        rep = polymatroid.check_contra_polymatroid(fn, tol=1e-9)
        # re-derive the empty-set value from the raw expression
        raw_empty = (
            -joint.mutual_information(["X"], ["X0"])
            - joint.conditional_entropy(["X0"], ["X"])
            + joint.entropy(["X0"])
        )
        ok = (
            fn(frozenset()) == 0.0
            and abs(raw_empty) <= 1e-12
            and rep.is_contra_polymatroid
        )
        worst = max(
            worst,
            rep.worst_supermodularity_violation,
            rep.worst_monotonicity_violation,
        )
        out.check(f"scheme {i}", ok)
    out.details = {"worst_violation_bits": float(worst)}
    out.wall_time_s = time.time() - t0
    return out


def _random_egc_scheme(rng: np.random.Generator) -> regions.AuxScheme:
    axes = [Alphabet("X", 2), Alphabet("X1", 2), Alphabet("X2", 2), Alphabet("X12", 2)]
    joint = random_rational_pmf(rng, axes, max_numerator=9)
    decoders = {
        frozenset({1}): Decoder(("X1",), rng.integers(0, 2, size=(2,))),
        frozenset({2}): Decoder(("X2",), rng.integers(0, 2, size=(2,))),
        frozenset({1, 2}): Decoder(("X1", "X2", "X12"), rng.integers(0, 2, size=(2, 2, 2))),
    }
    return regions.AuxScheme("egc", joint, decoders)


def _random_vkg_scheme(rng: np.random.Generator, L: int) -> regions.AuxScheme:
    axes = [Alphabet("X", 2)] + [Alphabet(subset_name(K), 2) for K in all_subsets(L)]
    joint = random_rational_pmf(rng, axes, max_numerator=7)
    decoders = {}
    for K in all_subsets(L):
        if not K:
            continue
        inputs = regions.decoder_inputs("vkg", K, L)
        decoders[K] = Decoder(inputs, rng.integers(0, 2, size=tuple(2 for _ in inputs)))
    return regions.AuxScheme("vkg", joint, decoders, L=L)


def equivalence_suite(
    seed: int = 0,
    egc_cases: int = 100,
    vkg2_cases: int = 100,
    vkg3_cases: int = 20,
    ih_cases: int = 100,
) -> SuiteResult:
    """Region equivalences realized as executable transforms.

    - refinement-layer substitution: both vertices of a random egc scheme are
      reproduced by the transformed egc-star scheme (rates within 1e-9 bits,
      distortions exactly);
    - top-layer elimination: greedy vertices preserved for L = 2 (all
      permutations) and L = 3 (all six permutations);
    - layer-reduced weighted rate equals the greedy vertex sum of the padded
      full scheme and the exhaustive vertex minimum.
    """
    t0 = time.time()
    rng = np.random.default_rng(seed)
    out = SuiteResult("equivalence")
    d = DistortionMeasure.hamming(Alphabet("X", 2), Alphabet("Xhat", 2))

    for i in range(egc_cases):
        s = _random_egc_scheme(rng)
        p_old = regions.egc_point(s, d)
        for which in ("v1", "v2"):
            s2 = regions.egc_vertex_to_egc_star(s, which)
            p_new = regions.egc_star_point(s2, d)
            v_old = regions.two_description_vertex(p_old, which)
            v_new = regions.two_description_vertex(p_new, which)
            rate_err = max(abs(a - b) for a, b in zip(v_old.rates, v_new.rates))
            dist_ok = all(
                p_old.distortions[K] == p_new.distortions[K] for K in p_old.distortions
            )
            out.check(f"egc scheme {i} {which}", rate_err <= 1e-9 and dist_ok)

    for i in range(vkg2_cases):
        s = _random_vkg_scheme(rng, 2)
        f_old = polymatroid.psi_fn(s.joint.to_float(), 2)
        pi = (1, 2) if i % 2 == 0 else (2, 1)
        s2 = regions.vkg_eliminate_top_layer(s, pi)
        f_new = polymatroid.psi_fn(s2.joint.to_float(), 2)
        v_old = polymatroid.greedy_vertex(f_old, pi)
        v_new = polymatroid.greedy_vertex(f_new, pi)
        rate_err = max(abs(a - b) for a, b in zip(v_old.rates, v_new.rates))
        d_old = regions.scheme_distortions(s, d)
        d_new = regions.scheme_distortions(s2, d)
        dist_ok = all(d_old[K] == d_new[K] for K in d_old)
        # the reduced scheme doubles as a common-layer (zb) certificate
        zb = regions.AuxScheme("zb", s2.joint.marginalize(["X", "X0", "X1", "X2"]), {}, L=2)
        zb_bounds = regions.zb_point(zb).rate_bounds
        zb_ok = all(
            abs(zb_bounds[K] - f_new(K)) <= 1e-9 for K in zb_bounds
        )
        out.check(f"vkg2 scheme {i} pi={pi}", rate_err <= 1e-9 and dist_ok and zb_ok)

    for i in range(vkg3_cases):
        s = _random_vkg_scheme(rng, 3)
        f_old = polymatroid.psi_fn(s.joint.to_float(), 3)
        for pi in permutations((1, 2, 3)):
            s2 = regions.vkg_eliminate_top_layer(s, pi, result_mode="float")
            f_new = polymatroid.psi_fn(s2.joint, 3)
            v_old = polymatroid.greedy_vertex(f_old, pi)
            v_new = polymatroid.greedy_vertex(f_new, pi)
            rate_err = max(abs(a - b) for a, b in zip(v_old.rates, v_new.rates))
            out.check(f"vkg3 scheme {i} pi={pi}", rate_err <= 1e-9)

    weights = (3.0, 2.0, 1.0)
    side_axes = [Alphabet("X", 2), Alphabet("X0", 2)] + [
        Alphabet(subset_name({k}), 2) for k in (1, 2, 3)
    ]
    for i in range(ih_cases):
        joint = random_pmf(rng, side_axes)
        padded = joint
        for K in all_subsets(3):
            if len(K) >= 2:
                padded = padded.add_constant_axis(subset_name(K))
        fn = polymatroid.psi_fn(padded, 3)
        vertex = polymatroid.greedy_vertex(fn, (1, 2, 3))
        lhs = regions.ih_weighted_sum_rate(joint, 3, weights)
        rhs = sum(a * r for a, r in zip(weights, vertex.rates))
        greedy_val, _ = polymatroid.min_weighted_sum(fn, weights)
        exhaustive = min(
            sum(a * r for a, r in zip(weights, v.rates))
            for v in polymatroid.enumerate_vertices(fn)
        )
        out.check(
            f"ih identity {i}",
            abs(lhs - rhs) <= 1e-9 and abs(greedy_val - exhaustive) <= 1e-12,
        )

    out.wall_time_s = time.time() - t0
    return out


def bss_suite(grid: float = 0.05, structured_grid: float = 1e-4,
              rd_points: bool = True) -> SuiteResult:
    """Binary symmetric closed forms: structured brute force vs the formula
    on a distortion grid, and the rate-distortion curve against 1 - H_b(D)."""
    t0 = time.time()
    out = SuiteResult("bss")
    worst = 0.0
    d12 = grid
    while d12 < 0.5 - 1e-9:
        d1 = d12 + grid
        while d1 < 0.5 - 1e-9:
            closed = scalable.bss_d2_star_closed_form(d1, d12)
            brute = scalable.bss_d2_star_structured(d1, d12, structured_grid)
            err = abs(closed - brute)
            worst = max(worst, err)
            out.check(f"structured D1={d1:.2f} D12={d12:.2f}", err <= 1e-6)
            d1 += grid
        d12 += grid
    details = {"worst_structured_gap": worst}
    if rd_points:
        inst = scalable.ScalableInstance.bss(0.3, 0.1)
        worst_rd = 0.0
        for dd in np.arange(grid, 0.5 - 1e-9, grid):
            r = scalable.rd_function(inst.source, inst.d, float(dd))
            err = abs(r.R - (1.0 - _binary_entropy(float(dd))))
            worst_rd = max(worst_rd, err)
            out.check(f"rd D={dd:.2f}", err <= 1e-4)
        details["worst_rd_gap"] = worst_rd
    out.details = details
    out.wall_time_s = time.time() - t0
    return out


def strategy_suite(seed: int = 0, cases: int = 50) -> SuiteResult:
    """Random two-state binary channels: strategy-codebook capacity equals
    the direct per-state capacity, and the noise-substitution strategy
    preserves the conditional mutual information."""
    t0 = time.time()
    rng = np.random.default_rng(seed)
    out = SuiteResult("strategy")
    worst_cap = 0.0
    worst_frl = 0.0
    for i in range(cases):
        law = rng.dirichlet(np.ones(2), size=(2, 2))
        ps = rng.dirichlet(np.ones(2))
        ch = strategy.StateChannel(
            Alphabet("S", 2), Alphabet("Xin", 2), Alphabet("Y", 2), ps, law
        )
        direct = strategy.capacity_direct(ch)
        via_z = strategy.capacity_strategy(ch)
        cap_err = abs(direct.value - via_z.value)
        worst_cap = max(worst_cap, cap_err)
        fs = strategy.strategy_from_frl(ch, direct.p_input_given_state)
        frl_err = abs(fs.info_direct - fs.info_strategy)
        zi = fs.composed.mutual_information(["S"], [fs.decomposition.z_axis.name])
        worst_frl = max(worst_frl, frl_err, zi)
        out.check(f"channel {i}", cap_err <= 1e-6 and frl_err <= 1e-9 and zi <= 1e-10)
    out.details = {"worst_capacity_gap": worst_cap, "worst_frl_gap": worst_frl}
    out.wall_time_s = time.time() - t0
    return out


def bss_optimizer_suite(seed: int = 0, fast: bool = False) -> SuiteResult:
    """Optimizer spot checks against the binary symmetric ground truth:
    the minimum total rate at (R(0.3), 0.3, 0.1) and the refinement-layer
    floor at three (D1, D12) pairs."""
    t0 = time.time()
    out = SuiteResult("bss-optimizer")
    inst = scalable.ScalableInstance.bss(0.3, 0.1)
    total = scalable.min_total_rate(inst, seed=seed)
    target = 1.0 - _binary_entropy(0.1)
    out.details["total_rate"] = total.value
    out.details["total_rate_target"] = target
    out.check("total rate", abs(total.value - target) <= 5e-3)

    spot_budget = (
        Budget(restarts=12, iters=600, refine_rounds=10, refine_iters=150, refine_top=2)
        if fast
        else Budget(restarts=64, iters=1200, refine_top=3)
    )
    spots = [(0.3, 0.1), (0.4, 0.2), (0.45, 0.05)] if not fast else [(0.3, 0.1)]
    gaps = {}
    for d1, d12 in spots:
        res = scalable.d2_star(
            scalable.ScalableInstance.bss(d1, d12), budget=spot_budget, seed=seed
        )
        closed = scalable.bss_d2_star_closed_form(d1, d12)
        gaps[f"({d1},{d12})"] = res.value - closed
        out.check(f"d2_star ({d1},{d12})", abs(res.value - closed) <= 5e-3)
        out.check(f"d2_star floor ({d1},{d12})", res.value >= closed - 1e-6)
    out.details["d2_star_gaps"] = gaps
    out.wall_time_s = time.time() - t0
    return out


SUITES = {
    "frl": frl_suite,
    "polymatroid": polymatroid_suite,
    "equivalence": equivalence_suite,
    "bss": bss_suite,
    "strategy": strategy_suite,
    "bss-optimizer": bss_optimizer_suite,
}
