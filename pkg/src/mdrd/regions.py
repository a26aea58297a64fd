"""Achievable-region evaluation, layer-elimination transforms, and weighted
sum-rate optimization for multiple-description schemes.

Regions are represented by certificates (auxiliary schemes), not polyhedra: a
scheme fixes a joint law over the source and its family's auxiliary layers
plus deterministic decoders, and each evaluator returns the rate-constraint
right-hand sides and decoder distortions that scheme certifies.  Convex
closure is realized by timesharing evaluated points.

Families and their auxiliary axes (source axis is always `X`):

- ``egc-star``: X1, X2                    (two side layers)
- ``egc``:      X1, X2, X12               (adds a refinement layer)
- ``zb``:       X0, X1, X2                (adds a common layer)
- ``vkg``:      X_A for every A of {1..L} (full layering; `vkg-star` has the
                top layer X_{1..L} constant)
- ``ih`` / ``ic``: X0, X1 .. XL           (common + side layers only, with
                hierarchical resp. individual-plus-central distortions)

The two substitution transforms re-encode a refinement layer as noise
attached to one side description, preserving the region's vertex
coordinates; they are exact in rational mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import frl
from .polymatroid import (
    SOURCE_AXIS,
    SubsetFn,
    all_subsets,
    greedy_vertex,
    min_weighted_sum,
    psi,
    psi_fn,
    subset_name,
)
from .probability import (
    FLOAT,
    RATIONAL,
    Alphabet,
    AxisLookupError,
    Decoder,
    DistortionMeasure,
    InvalidInputError,
    JointPmf,
    best_decoder,
    clamp_info,
    expected_distortion,
)
from .search import (
    Budget,
    Constraint,
    SearchResult,
    ent_bits,
    min_decoder_distortion,
    multistart_minimize,
    require_feasible,
)

FAMILIES = ("egc-star", "egc", "zb", "vkg", "vkg-star", "ih", "ic")

#: layer elimination composes a joint over all 2^L - 1 remaining layers;
#: beyond L = 3 the tensors stop being desk-sized
MAX_L_ELIMINATE = 3


def normalize_family(name: str) -> str:
    f = name.strip().lower().replace("_", "-").replace("*", "-star")
    if f not in FAMILIES:
        raise InvalidInputError(f"unknown family {name!r}; expected one of {FAMILIES}")
    return f


def family_axes(family: str, L: int = 2) -> list[str]:
    family = normalize_family(family)
    if family == "egc-star":
        return ["X1", "X2"]
    if family == "egc":
        return ["X1", "X2", "X12"]
    if family == "zb":
        return ["X0", "X1", "X2"]
    if family in ("vkg", "vkg-star"):
        return [subset_name(K) for K in all_subsets(L)]
    return ["X0"] + [subset_name({k}) for k in range(1, L + 1)]  # ih / ic


def decoder_inputs(family: str, K: frozenset[int], L: int = 2) -> tuple[str, ...]:
    """Axis names each family's decoder for subset K is allowed to read."""
    family = normalize_family(family)
    ks = sorted(K)
    if family == "egc-star":
        return tuple(subset_name({k}) for k in ks)
    if family == "egc":
        base = tuple(subset_name({k}) for k in ks)
        return base + ("X12",) if K == {1, 2} else base
    if family == "zb":
        return ("X0",) + tuple(subset_name({k}) for k in ks)
    if family in ("vkg", "vkg-star"):
        return tuple(subset_name(A) for A in all_subsets(L) if A <= K)
    # ih / ic read the common layer plus the side layers of K
    return ("X0",) + tuple(subset_name({k}) for k in ks)


@dataclass(frozen=True)
class AuxScheme:
    """A region certificate: family tag, joint law, decoder tables."""

    family: str
    joint: JointPmf
    decoders: Mapping[frozenset[int], Decoder] = field(default_factory=dict)
    L: int = 2

    def __post_init__(self):
        object.__setattr__(self, "family", normalize_family(self.family))
        for name in ("X", *family_axes(self.family, self.L)):
            if name not in self.joint.axis_names:
                raise AxisLookupError(f"{self.family} scheme is missing axis {name!r}")
        for K, dec in self.decoders.items():
            want = decoder_inputs(self.family, K, self.L)
            if tuple(dec.inputs) != want:
                raise InvalidInputError(
                    f"decoder for subset {sorted(K)} reads {dec.inputs}, "
                    f"family {self.family} allows {want}"
                )

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "L": self.L,
            "joint": self.joint.to_json(),
            "decoders": {
                "".join(str(k) for k in sorted(K)): dec.to_json()
                for K, dec in self.decoders.items()
            },
        }

    @staticmethod
    def from_json(obj: Mapping, mode: str | None = None) -> "AuxScheme":
        decs = {
            frozenset(int(c) for c in key): Decoder.from_json(d)
            for key, d in obj.get("decoders", {}).items()
        }
        return AuxScheme(
            family=obj["family"],
            joint=JointPmf.from_json(obj["joint"], mode=mode),
            decoders=decs,
            L=int(obj.get("L", 2)),
        )


@dataclass(frozen=True)
class RegionPoint:
    """Rate-constraint right-hand sides plus decoder distortions."""

    rate_bounds: dict[frozenset[int], float]
    distortions: dict[frozenset[int], object]  # Fraction in rational mode

    def to_json(self) -> dict:
        key = lambda K: "".join(str(k) for k in sorted(K))
        return {
            "rate_bounds": {key(K): float(v) for K, v in self.rate_bounds.items()},
            "distortions": {key(K): float(v) for K, v in self.distortions.items()},
        }


@dataclass(frozen=True)
class RdPoint:
    """An achievable operating point: per-description rates + distortions."""

    rates: tuple[float, ...]
    distortions: dict[frozenset[int], float]

    def to_json(self) -> dict:
        return {
            "rates": list(self.rates),
            "distortions": {
                "".join(str(k) for k in sorted(K)): float(v)
                for K, v in self.distortions.items()
            },
        }


def timeshare(a: RdPoint, b: RdPoint, w: float) -> RdPoint:
    """Operate scheme `a` a fraction w of the time and `b` otherwise."""
    if not 0.0 <= w <= 1.0:
        raise InvalidInputError("timesharing weight must lie in [0, 1]")
    if len(a.rates) != len(b.rates) or set(a.distortions) != set(b.distortions):
        raise InvalidInputError("timeshared points must share shape")
    rates = tuple(w * x + (1 - w) * y for x, y in zip(a.rates, b.rates))
    dist = {
        K: w * float(a.distortions[K]) + (1 - w) * float(b.distortions[K])
        for K in a.distortions
    }
    return RdPoint(rates, dist)


# ---------------------------------------------------------------------------
# Rate-bound formulas (shared by pmf-based and hot-loop array evaluation)
# ---------------------------------------------------------------------------


class _InfoArray:
    """Entropy/MI calculator over a raw float tensor with named axes.

    Duck-type compatible with the JointPmf information methods, with an
    entropy cache; used inside optimization loops.
    """

    def __init__(self, names: Sequence[str], arr: np.ndarray):
        self.names = list(names)
        self.arr = arr
        self._pos = {n: i for i, n in enumerate(self.names)}
        self._cache: dict[frozenset[str], float] = {}

    def entropy(self, names: Iterable[str]) -> float:
        key = frozenset(names)
        got = self._cache.get(key)
        if got is None:
            drop = tuple(i for n, i in self._pos.items() if n not in key)
            got = ent_bits(self.arr.sum(axis=drop) if drop else self.arr)
            self._cache[key] = got
        return got

    def conditional_entropy(self, names: Iterable[str], given: Iterable[str]) -> float:
        given = list(given)
        if not given:
            return self.entropy(names)
        return max(self.entropy(list(names) + given) - self.entropy(given), 0.0)

    def mutual_information(
        self, a: Iterable[str], b: Iterable[str], given: Iterable[str] = ()
    ) -> float:
        a, b, given = list(a), list(b), list(given)
        h_g = self.entropy(given) if given else 0.0
        return max(
            self.entropy(a + given) + self.entropy(b + given) - self.entropy(a + b + given) - h_g,
            0.0,
        )


def _rate_bounds(info, family: str, L: int) -> dict[frozenset[int], float]:
    """Rate-constraint RHS for the 2-description families and vkg."""
    one, two, both = frozenset({1}), frozenset({2}), frozenset({1, 2})
    if family == "egc-star":
        return {
            one: info.mutual_information(["X"], ["X1"]),
            two: info.mutual_information(["X"], ["X2"]),
            both: info.mutual_information(["X"], ["X1", "X2"])
            + info.mutual_information(["X1"], ["X2"]),
        }
    if family == "egc":
        return {
            one: info.mutual_information(["X"], ["X1"]),
            two: info.mutual_information(["X"], ["X2"]),
            both: info.mutual_information(["X"], ["X1", "X2", "X12"])
            + info.mutual_information(["X1"], ["X2"]),
        }
    if family == "zb":
        return {
            one: info.mutual_information(["X"], ["X0", "X1"]),
            two: info.mutual_information(["X"], ["X0", "X2"]),
            both: 2.0 * info.mutual_information(["X"], ["X0"])
            + info.mutual_information(["X"], ["X1", "X2"], given=["X0"])
            + info.mutual_information(["X1"], ["X2"], given=["X0"]),
        }
    if family in ("vkg", "vkg-star"):
        return {K: psi(info, L, K) for K in all_subsets(L) if K}
    raise InvalidInputError(f"no closed rate-bound form for family {family!r}")


def scheme_distortions(s: AuxScheme, d: DistortionMeasure) -> dict[frozenset[int], object]:
    return {
        K: expected_distortion(s.joint, d, dec, source_axis=SOURCE_AXIS)
        for K, dec in s.decoders.items()
    }


def _point(s: AuxScheme, d: DistortionMeasure | None, family: str) -> RegionPoint:
    if s.family != family:
        raise InvalidInputError(f"scheme tagged {s.family!r}, evaluator expects {family!r}")
    bounds = _rate_bounds(s.joint, family, s.L)
    dist = scheme_distortions(s, d) if d is not None else {}
    return RegionPoint(bounds, dist)


def egc_star_point(s: AuxScheme, d: DistortionMeasure | None = None) -> RegionPoint:
    """Rate RHS (R1, R2, R1+R2) and decoder distortions of a two-side-layer scheme."""
    return _point(s, d, "egc-star")


def egc_point(s: AuxScheme, d: DistortionMeasure | None = None) -> RegionPoint:
    """Same with the refinement layer X12 included in the sum bound and the
    joint decoder."""
    return _point(s, d, "egc")


def zb_point(s: AuxScheme, d: DistortionMeasure | None = None) -> RegionPoint:
    """Common-layer form: R_k >= I(X; X0, Xk) and the doubled common-rate sum
    bound."""
    return _point(s, d, "zb")


def vkg_constraints(s: AuxScheme, d: DistortionMeasure | None = None) -> RegionPoint:
    """psi(K) for every nonempty K plus decoder distortions."""
    if s.family not in ("vkg", "vkg-star"):
        raise InvalidInputError(f"scheme tagged {s.family!r}, evaluator expects vkg")
    bounds = _rate_bounds(s.joint, "vkg", s.L)
    dist = scheme_distortions(s, d) if d is not None else {}
    return RegionPoint(bounds, dist)


def two_description_vertex(point: RegionPoint, which: str) -> RdPoint:
    """Corner of {R1 >= a1, R2 >= a2, R1+R2 >= a12}; "v1" tightens R1 first."""
    a1 = point.rate_bounds[frozenset({1})]
    a2 = point.rate_bounds[frozenset({2})]
    a12 = point.rate_bounds[frozenset({1, 2})]
    if which == "v1":
        rates = (a1, max(a2, a12 - a1))
    elif which == "v2":
        rates = (max(a1, a12 - a2), a2)
    else:
        raise InvalidInputError("vertex must be 'v1' or 'v2'")
    return RdPoint(rates, {K: float(v) for K, v in point.distortions.items()})


def min_weighted_rate(point: RegionPoint, weights: Sequence[float]) -> float:
    """LP minimum of a nonnegative weighted rate sum over a 2-description
    polyhedron (both corners evaluated)."""
    w = [float(x) for x in weights]
    if len(w) != 2 or any(x < 0 for x in w):
        raise InvalidInputError("need two nonnegative weights")
    v1 = two_description_vertex(point, "v1")
    v2 = two_description_vertex(point, "v2")
    return min(np.dot(w, v1.rates), np.dot(w, v2.rates))


# ---------------------------------------------------------------------------
# Refinement-layer elimination (2-description)
# ---------------------------------------------------------------------------


def egc_vertex_to_egc_star(s: AuxScheme, which: str = "v1") -> AuxScheme:
    """Re-encode an egc scheme's refinement layer as side-description noise.

    The X12 layer is decomposed into noise Z independent of (X1, X2) with
    X12 = f(X1, X2, Z); gluing Z onto X2 (vertex v1; onto X1 for v2) yields an
    egc-star scheme whose corresponding vertex has identical rate coordinates
    and, in rational mode, identical decoder distortions.
    """
    if s.family != "egc":
        raise InvalidInputError(f"transform expects an egc scheme, got {s.family!r}")
    if which not in ("v1", "v2"):
        raise InvalidInputError("vertex must be 'v1' or 'v2'")
    joint = s.joint
    if joint.mode == FLOAT:
        joint, _ = joint.snap_to_rational(frl.SNAP_DENOMINATOR)
    dec = frl.frl_decompose(joint, ["X1", "X2"], "X12")
    p_v = joint.marginalize(["X1", "X2"])
    attach = joint.condition(given=["X1", "X2", "X12"], of=["X"])
    composed = frl.frl_compose(p_v, dec, attach)
    z_name = dec.z_axis.name
    n1, n2, nz = joint.axis("X1").size, joint.axis("X2").size, dec.cardinality

    reduced = composed.marginalize(["X", "X1", "X2", z_name])
    glue = "X2" if which == "v1" else "X1"
    new_joint = reduced.merge_axes([glue, z_name], glue).reorder(["X", "X1", "X2"])

    decoders: dict[frozenset[int], Decoder] = {}
    one, two, both = frozenset({1}), frozenset({2}), frozenset({1, 2})
    old1, old2, old12 = (s.decoders.get(K) for K in (one, two, both))

    def rewrite_single(old: Decoder | None, glued: bool) -> Decoder | None:
        if old is None:
            return None
        table = np.asarray(old.table, dtype=int)
        if glued:
            table = np.repeat(table.ravel(), nz)
        return Decoder(old.inputs, table)

    decoders_src = {one: (old1, which == "v2"), two: (old2, which == "v1")}
    for K, (old, glued) in decoders_src.items():
        nd = rewrite_single(old, glued)
        if nd is not None:
            decoders[K] = nd
    if old12 is not None:
        tab = np.asarray(old12.table, dtype=int)  # (n1, n2, n12)
        if which == "v1":
            new = np.empty((n1, n2 * nz), dtype=int)
            for x1 in range(n1):
                for x2 in range(n2):
                    for z in range(nz):
                        new[x1, x2 * nz + z] = tab[x1, x2, dec.f_at(x1 * n2 + x2, z)]
        else:
            new = np.empty((n1 * nz, n2), dtype=int)
            for x1 in range(n1):
                for x2 in range(n2):
                    for z in range(nz):
                        new[x1 * nz + z, x2] = tab[x1, x2, dec.f_at(x1 * n2 + x2, z)]
        decoders[both] = Decoder(("X1", "X2"), new)

    return AuxScheme("egc-star", new_joint, decoders, L=2)


# ---------------------------------------------------------------------------
# Top-layer elimination (L descriptions)
# ---------------------------------------------------------------------------


def vkg_eliminate_top_layer(
    s: AuxScheme, pi: Sequence[int], result_mode: str = RATIONAL
) -> AuxScheme:
    """Remove the top layer X_{1..L} of a vkg scheme, preserving the greedy
    vertex of permutation `pi`.

    The top layer is decomposed against all remaining layers jointly,
    X_{1..L} = f(layers, Z); Z is glued onto the side layer of the last
    description in `pi` and the top axis becomes a constant.  Decoders are
    rewritten so every subset's distortion is unchanged (exactly, in rational
    mode).  `result_mode="float"` converts right after the exact composition,
    which keeps vertex arithmetic cheap for L = 3.
    """
    if s.family != "vkg":
        raise InvalidInputError(f"transform expects a vkg scheme, got {s.family!r}")
    L = s.L
    if L > MAX_L_ELIMINATE:
        raise InvalidInputError(f"layer elimination capped at L={MAX_L_ELIMINATE}, got {L}")
    pi = tuple(int(k) for k in pi)
    if sorted(pi) != list(range(1, L + 1)):
        raise InvalidInputError(f"{pi} is not a permutation of 1..{L}")
    last = pi[-1]
    top = subset_name(frozenset(range(1, L + 1)))
    single = subset_name({last})

    joint = s.joint
    if joint.mode == FLOAT:
        joint, _ = joint.snap_to_rational(frl.SNAP_DENOMINATOR)
    v_names = [subset_name(A) for A in all_subsets(L)[:-1]]  # everything below the top
    v_sizes = [joint.axis(n).size for n in v_names]
    dec = frl.frl_decompose(joint, v_names, top)
    attach = joint.condition(given=v_names + [top], of=[SOURCE_AXIS])
    composed = frl.frl_compose(joint.marginalize(v_names), dec, attach)
    if result_mode == FLOAT:
        composed = composed.to_float()
    z_name = dec.z_axis.name
    nz = dec.cardinality

    keep = [SOURCE_AXIS] + v_names + [z_name]
    reduced = composed.marginalize(keep)
    new_joint = (
        reduced.merge_axes([single, z_name], single)
        .add_constant_axis(top)
        .reorder([SOURCE_AXIS] + [subset_name(A) for A in all_subsets(L)])
    )

    # decoder rewrites ------------------------------------------------------
    single_size = joint.axis(single).size
    v_pos = {n: i for i, n in enumerate(v_names)}

    def v_flat(values: dict[str, int]) -> int:
        idx = 0
        for n, size in zip(v_names, v_sizes):
            idx = idx * size + values[n]
        return idx

    decoders: dict[frozenset[int], Decoder] = {}
    for K, old in s.decoders.items():
        inputs = decoder_inputs("vkg", K, L)
        if last not in K:
            decoders[K] = old
            continue
        if K != frozenset(range(1, L + 1)):
            ax = inputs.index(single)
            decoders[K] = Decoder(old.inputs, np.repeat(np.asarray(old.table, dtype=int), nz, axis=ax))
            continue
        # top decoder: reconstruct the eliminated symbol through f, then apply
        new_sizes = [new_joint.axis(n).size for n in inputs]
        old_tab = np.asarray(old.table, dtype=int)
        new_tab = np.empty(new_sizes, dtype=int)
        single_ax = inputs.index(single)
        top_ax = inputs.index(top)
        for idx in np.ndindex(*new_sizes):
            prod = idx[single_ax]
            s_val, z_val = prod // nz, prod % nz
            vals = {}
            for n, i in zip(inputs, idx):
                if n in v_pos:
                    vals[n] = s_val if n == single else i
            w_val = dec.f_at(v_flat(vals), z_val)
            old_idx = list(idx)
            old_idx[single_ax] = s_val
            old_idx[top_ax] = w_val
            new_tab[idx] = old_tab[tuple(old_idx)]
        decoders[K] = Decoder(inputs, new_tab)

    return AuxScheme("vkg", new_joint, decoders, L=L)


def hierarchy_axes(L: int) -> list[str]:
    """Common layer, side layers, and the prefix layers X_{1..m}, m >= 2."""
    names = ["X0"] + [subset_name({k}) for k in range(1, L + 1)]
    names += [subset_name(frozenset(range(1, m + 1))) for m in range(2, L + 1)]
    return names


def eliminate_hierarchy_layers(s_joint: JointPmf, L: int) -> JointPmf:
    """Successively remove the prefix layers X_{1..L}, ..., X_{1..2} of a
    hierarchical scheme, gluing each extracted noise onto the top remaining
    side layer.

    Input axes: X, X0, X1..XL, X12, X123, ...; output axes: X, X0, X1..XL
    with inflated side alphabets.  Hierarchical weighted rate objectives are
    preserved term by term.
    """
    joint = s_joint
    if joint.mode == FLOAT:
        joint, _ = joint.snap_to_rational(frl.SNAP_DENOMINATOR)
    for m in range(L, 1, -1):
        prefix = subset_name(frozenset(range(1, m + 1)))
        single = subset_name({m})
        v_names = ["X0"] + [subset_name({k}) for k in range(1, m)]
        v_names += [subset_name(frozenset(range(1, j + 1))) for j in range(2, m)]
        v_names += [single]
        dec = frl.frl_decompose(joint, v_names, prefix)
        u_names = [n for n in joint.axis_names if n not in v_names and n != prefix]
        attach = joint.condition(given=v_names + [prefix], of=u_names)
        composed = frl.frl_compose(joint.marginalize(v_names), dec, attach)
        keep = [n for n in composed.axis_names if n != prefix]
        joint = (
            composed.marginalize(keep)
            .merge_axes([single, dec.z_axis.name], single)
        )
    order = [SOURCE_AXIS, "X0"] + [subset_name({k}) for k in range(1, L + 1)]
    return joint.reorder(order)


# ---------------------------------------------------------------------------
# Weighted sum-rate evaluators (hierarchical / individual+central)
# ---------------------------------------------------------------------------


def _side_names(L: int) -> list[str]:
    return [subset_name({k}) for k in range(1, L + 1)]


def ih_weighted_sum_rate(info, L: int, weights: Sequence[float]) -> float:
    """Layer-reduced weighted rate for hierarchical distortion constraints:

        sum_k alpha_k [ I(X; X0) + I(X, X1..X_{k-1} ; X_k | X0) ]

    Weights must be nonincreasing and nonnegative; `info` carries axes
    X, X0, X1..XL (extra axes are ignored).
    """
    w = [float(x) for x in weights]
    if len(w) != L:
        raise InvalidInputError(f"need {L} weights, got {len(w)}")
    if any(x < 0 for x in w):
        raise InvalidInputError("weights must be nonnegative")
    if any(w[i] < w[i + 1] - 1e-12 for i in range(L - 1)):
        raise InvalidInputError("weights must be sorted nonincreasing")
    i_common = info.mutual_information(["X"], ["X0"])
    total = 0.0
    for k in range(1, L + 1):
        prior = [subset_name({i}) for i in range(1, k)]
        term = info.mutual_information(["X", *prior], [subset_name({k})], given=["X0"])
        total += w[k - 1] * (i_common + term)
    return total


def hierarchy_weighted_sum_rate(info, L: int, weights: Sequence[float]) -> float:
    """Weighted rate of a hierarchical scheme that still carries its prefix
    layers X_{1..m}:

        sum_k alpha_k [ I(X;X0) + I(H_{k-1}; X_k | X0)
                        + I(X; X_k, X_{1..k} | X0, H_{k-1}) ]

    where H_m lists the side layers 1..m and prefix layers up to m.
    """
    w = [float(x) for x in weights]
    if len(w) != L:
        raise InvalidInputError(f"need {L} weights, got {len(w)}")
    if any(w[i] < w[i + 1] - 1e-12 for i in range(L - 1)):
        raise InvalidInputError("weights must be sorted nonincreasing")
    i_common = info.mutual_information(["X"], ["X0"])
    total = 0.0
    for k in range(1, L + 1):
        hk_prev = [subset_name({i}) for i in range(1, k)]
        hk_prev += [subset_name(frozenset(range(1, j + 1))) for j in range(2, k)]
        single = subset_name({k})
        prefix = [subset_name(frozenset(range(1, k + 1)))] if k >= 2 else []
        term = 0.0
        if hk_prev:
            term += info.mutual_information(hk_prev, [single], given=["X0"])
        term += info.mutual_information(
            ["X"], [single, *prefix], given=["X0", *hk_prev]
        )
        total += w[k - 1] * (i_common + term)
    return total


def ic_weighted_sum_rate(info, L: int, weights: Sequence[float], central: bool = False) -> float:
    """Weighted rate for individual-plus-central distortion constraints.

    Weights may arrive in any order; they are routed through the descending
    permutation (ties by ascending index).  With `central=True` the scheme's
    central layer X_{1..L} contributes the closing term
    alpha_min * I(X; X_{1..L} | X0, X1..XL).
    """
    w = [float(x) for x in weights]
    if len(w) != L:
        raise InvalidInputError(f"need {L} weights, got {len(w)}")
    if any(x < 0 for x in w):
        raise InvalidInputError("weights must be nonnegative")
    order = sorted(range(1, L + 1), key=lambda k: (-w[k - 1], k))
    i_common = info.mutual_information(["X"], ["X0"])
    total = 0.0
    for pos, k in enumerate(order):
        prior = [subset_name({order[i]}) for i in range(pos)]
        term = info.mutual_information(["X", *prior], [subset_name({k})], given=["X0"])
        total += w[k - 1] * (i_common + term)
    if central:
        top = subset_name(frozenset(range(1, L + 1)))
        total += w[order[-1] - 1] * info.mutual_information(
            ["X"], [top], given=["X0", *_side_names(L)]
        )
    return total


# ---------------------------------------------------------------------------
# Weighted sum-rate optimization under distortion constraints
# ---------------------------------------------------------------------------


@dataclass
class OptimizeResult:
    value: float
    scheme: AuxScheme
    rate_bounds: dict[frozenset[int], float]
    distortions: dict[frozenset[int], float]
    residuals: dict[str, float]
    feasible: bool
    n_evaluations: int
    trace: list = field(default_factory=list)

    def to_json(self) -> dict:
        key = lambda K: "".join(str(k) for k in sorted(K))
        return {
            "value": self.value,
            "rate_bounds": {key(K): v for K, v in self.rate_bounds.items()},
            "distortions": {key(K): v for K, v in self.distortions.items()},
            "residuals": self.residuals,
            "feasible": self.feasible,
            "n_evaluations": self.n_evaluations,
            "scheme": self.scheme.to_json(),
        }


def _weighted_objective(info, family: str, L: int, weights: Sequence[float]) -> float:
    if family in ("egc-star", "egc", "zb"):
        return min_weighted_rate(RegionPoint(_rate_bounds(info, family, L), {}), weights)
    if family in ("vkg", "vkg-star"):
        fn = SubsetFn.from_callable(L, lambda K: 0.0 if not K else psi(info, L, K))
        return min_weighted_sum(fn, weights)[0]
    if family == "ih":
        return ih_weighted_sum_rate(info, L, weights)
    if family == "ic":
        return ic_weighted_sum_rate(info, L, weights)
    raise InvalidInputError(f"cannot optimize family {family!r}")


def default_cardinalities(family: str, L: int, d: DistortionMeasure) -> dict[str, int]:
    """Search-time auxiliary alphabet sizes: the common layer gets up to 4
    symbols, every other layer lives on the reconstruction alphabet."""
    sizes: dict[str, int] = {}
    for name in family_axes(family, L):
        sizes[name] = 4 if name == "X0" else d.recon.size
    return sizes


def optimize_weighted_sum(
    source: JointPmf,
    d: DistortionMeasure,
    constraints: Mapping[frozenset[int], float],
    family: str,
    weights: Sequence[float],
    cardinalities: Mapping[str, int] | None = None,
    budget: Budget = Budget(),
    seed: int = 0,
    lambda0: float = 10.0,
    keep_trace: bool = False,
) -> OptimizeResult:
    """Search for the scheme minimizing a weighted rate sum subject to
    distortion ceilings.

    Alternates exact decoder improvement (each constrained subset is always
    scored with its pointwise-optimal decoder) with random-direction simplex
    perturbations of the conditional law p(auxiliaries | X), accepted when the
    penalized objective decreases.  Returns a certified upper bound: the value
    is re-evaluated from the returned scheme.  Raises InfeasibleError when
    the budget ends without meeting every distortion ceiling.
    """
    family = normalize_family(family)
    L = 2 if family in ("egc-star", "egc", "zb") else len(weights)
    if family in ("egc-star", "egc", "zb") and len(weights) != 2:
        raise InvalidInputError("2-description families need exactly two weights")
    for K in constraints:
        if not K or not K <= set(range(1, L + 1)):
            raise InvalidInputError(f"constraint subset {sorted(K)} not within 1..{L}")
    src = source.to_float()
    if src.axis_names != (SOURCE_AXIS,):
        raise AxisLookupError("source pmf must have the single axis 'X'")
    px = src.values.astype(float).ravel()
    nx = px.size

    sizes = dict(default_cardinalities(family, L, d))
    if cardinalities:
        sizes.update({k: int(v) for k, v in cardinalities.items()})
    aux_names = family_axes(family, L)
    aux_sizes = [sizes[n] for n in aux_names]
    n_cols = int(np.prod(aux_sizes))
    names = ["X"] + aux_names

    cons_list = sorted(constraints.items(), key=lambda kv: sorted(kv[0]))
    # precompute, per constrained subset, the reduction to (X, inputs) cells
    plans = []
    for K, target in cons_list:
        inputs = decoder_inputs(family, K, L)
        axes_keep = [0] + [names.index(n) for n in inputs]
        drop = tuple(i for i in range(len(names)) if i not in axes_keep)
        remaining = sorted(axes_keep)
        perm = tuple(remaining.index(names.index(n)) for n in ["X", *inputs])
        plans.append((K, inputs, drop, perm, float(target)))

    def evaluate(cond: np.ndarray):
        J = (px[:, None] * cond).reshape([nx, *aux_sizes])
        info = _InfoArray(names, J)
        value = _weighted_objective(info, family, L, weights)
        cvals: dict[str, float] = {}
        for K, inputs, drop, perm, _t in plans:
            m = J.sum(axis=drop) if drop else J
            # axes currently ordered as in `names`; bring X first, inputs after
            m = np.transpose(m, perm) if perm != tuple(range(m.ndim)) else m
            cvals["D" + "".join(str(k) for k in sorted(K))] = min_decoder_distortion(
                m.reshape(nx, -1), d.table
            )
        return value, cvals

    engine_constraints = [
        Constraint("D" + "".join(str(k) for k in sorted(K)), "le", t)
        for K, _i, _d, _p, t in plans
    ]
    result = multistart_minimize(
        evaluate,
        nx,
        n_cols,
        engine_constraints,
        budget=budget,
        seed=seed,
        lambda0=lambda0,
        keep_trace=keep_trace,
    )

    axes = [src.axes[0]] + [Alphabet(n, sz) for n, sz in zip(aux_names, aux_sizes)]
    joint = JointPmf(axes, (px[:, None] * result.cond).reshape([nx, *aux_sizes]), FLOAT)
    decoders = {
        K: best_decoder(joint, d, decoder_inputs(family, K, L))[0] for K, _t in cons_list
    }
    scheme = AuxScheme(family, joint, decoders, L=L)
    value = _weighted_objective(joint, family, L, weights)
    distortions = {
        K: float(expected_distortion(joint, d, dec)) for K, dec in decoders.items()
    }
    out = OptimizeResult(
        value=float(value),
        scheme=scheme,
        rate_bounds=_rate_bounds(joint, family, L)
        if family not in ("ih", "ic")
        else {},
        distortions=distortions,
        residuals={
            name: float(v) for name, v in result.violations.items()
        },
        feasible=result.feasible,
        n_evaluations=result.n_evaluations,
        trace=result.trace,
    )
    if not result.feasible:
        err = InfeasibleError(
            "no feasible scheme found: distortion targets unmet after budget "
            f"({result.n_evaluations} evaluations); residuals {out.residuals}"
        )
        err.result = out
        raise err
    return out
