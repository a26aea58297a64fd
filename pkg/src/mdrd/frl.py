"""Constructive noise-substitution decomposition of a conditional law.

Given jointly distributed (U, V, W) on finite alphabets, this module builds a
random variable Z and a deterministic table f : V x Z -> W such that

1. Z is independent of V,
2. W = f(V, Z) reproduces the (V, W) joint exactly (in rational mode),
3. U - (V, W) - Z is a Markov chain once U is re-attached through p(U | V, W).

The construction is a quantile coupling: each conditional row p(W | V=v) is
laid out as consecutive subintervals of [0, 1] in ascending symbol order, the
breakpoint sets of all rows are pooled into a common refinement, and each
refinement interval becomes one atom z with f(v, z) = the symbol whose
v-subinterval covers it.  Atoms whose columns f(., z) coincide are merged
(the lowest-index atom survives).  The atom count obeys

    |Z| <= |V| * (|W| - 1) + 1            always, and hence
    |Z| <= |V| * |W| - 1                  whenever |V| >= 2.

Everything is exact on Fractions; float inputs are snapped to rationals with
denominator <= 10^9 first and the snap error is reported.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .probability import (
    FLOAT,
    RATIONAL,
    Alphabet,
    AxisLookupError,
    Channel,
    InvalidInputError,
    JointPmf,
    clamp_info,
)

SNAP_DENOMINATOR = 10**9


@dataclass(frozen=True)
class FrlDecomposition:
    """Noise pmf plus deterministic table realizing W = f(V, Z)."""

    v_axes: tuple[Alphabet, ...]
    w_axis: Alphabet
    z_axis: Alphabet
    z_pmf: np.ndarray  # 1-D, Fraction entries
    f: np.ndarray  # int table, shape (n_v, |Z|); v flattened row-major over v_axes
    snap_error: float = 0.0

    @property
    def cardinality(self) -> int:
        return self.z_axis.size

    @property
    def n_v(self) -> int:
        return int(np.prod([a.size for a in self.v_axes]))

    def f_at(self, v_flat: int, z: int) -> int:
        return int(self.f[v_flat, z])

    def to_json(self) -> dict:
        return {
            "z_pmf": [f"{p.numerator}/{p.denominator}" for p in self.z_pmf],
            "f": self.f.tolist(),
            "cardinality": self.cardinality,
            "snap_error": self.snap_error,
        }


@dataclass(frozen=True)
class FrlReport:
    """Verification gaps for a decomposition, all in bits except the last."""

    independence_gap: float  # I(V ; Z)
    markov_gap: float  # I(U ; Z | V, W)
    reconstruction_error: float  # max |composed (U,V,W) marginal - input|
    cardinality: int
    exact: bool  # reconstruction identity held exactly (rational mode)

    def ok(self, tol: float = 1e-10) -> bool:
        return (
            self.independence_gap <= tol
            and self.markov_gap <= tol
            and self.reconstruction_error <= tol
        )

    def to_json(self) -> dict:
        return {
            "independence_gap": self.independence_gap,
            "markov_gap": self.markov_gap,
            "reconstruction_error": self.reconstruction_error,
            "cardinality": self.cardinality,
            "exact": self.exact,
        }


def _unique_axis_name(base: str, taken: Sequence[str]) -> str:
    if base not in taken:
        return base
    k = 2
    while f"{base}{k}" in taken:
        k += 1
    return f"{base}{k}"


def frl_decompose(
    p: JointPmf,
    v_axes: Sequence[str],
    w_axis: str,
    z_name: str = "Z",
) -> FrlDecomposition:
    """Decompose p(..., V, W) into noise Z ⫫ V and a table with W = f(V, Z).

    `v_axes` may name several axes (a composite V); every axis of `p` outside
    V and W is treated as U and plays no role in the construction.  Rows of
    p(W | V=v) with zero mass on v get the constant map f_v = 0, which never
    creates atoms.
    """
    v_axes = list(v_axes)
    if w_axis in v_axes:
        raise AxisLookupError("W axis cannot also appear in V")
    w = p.axis(w_axis)
    if w.size < 1:
        raise InvalidInputError("degenerate W alphabet")
    snap_error = 0.0
    if p.mode == FLOAT:
        p, snap_error = p.snap_to_rational(SNAP_DENOMINATOR)
    pvw = p.marginalize(v_axes + [w_axis]).reorder(v_axes + [w_axis])
    n_v = int(np.prod([p.axis(n).size for n in v_axes]))
    table = pvw.values.reshape(n_v, w.size)

    # cumulative layout of each conditional row; dead rows get a point mass at 0
    cums: list[list[Fraction]] = []
    cuts: set[Fraction] = set()
    one = Fraction(1)
    for vi in range(n_v):
        tot = sum(table[vi], Fraction(0))
        if tot == 0:
            cums.append([one] * w.size)  # f_v == 0 everywhere
            continue
        acc = Fraction(0)
        cs = []
        for wi in range(w.size):
            acc += table[vi, wi] / tot
            cs.append(acc)
        cs[-1] = one  # guard against representation drift; exact sums hit 1 anyway
        cums.append(cs)
        cuts.update(c for c in cs[:-1] if 0 < c < 1)

    edges = [Fraction(0)] + sorted(cuts) + [one]
    atoms = []
    columns = []
    for k in range(len(edges) - 1):
        left, right = edges[k], edges[k + 1]
        length = right - left
        if length == 0:
            continue
        col = []
        for vi in range(n_v):
            # first symbol whose cumulative weight exceeds the left edge;
            # zero-mass symbols have empty subintervals and are skipped
            col.append(bisect_right(cums[vi], left))
        atoms.append(length)
        columns.append(tuple(col))

    # merge atoms with identical columns, keeping first occurrence order
    merged: dict[tuple[int, ...], int] = {}
    z_pmf: list[Fraction] = []
    f_cols: list[tuple[int, ...]] = []
    for length, col in zip(atoms, columns):
        if col in merged:
            z_pmf[merged[col]] += length
        else:
            merged[col] = len(z_pmf)
            z_pmf.append(length)
            f_cols.append(col)

    n_z = len(z_pmf)
    assert n_z <= n_v * (w.size - 1) + 1
    if n_v >= 2:
        assert n_z <= n_v * w.size - 1
    zp = np.empty(n_z, dtype=object)
    zp[:] = z_pmf
    f = np.array(f_cols, dtype=int).T.copy()  # (n_v, n_z)
    z_axis = Alphabet(_unique_axis_name(z_name, p.axis_names), n_z)
    return FrlDecomposition(
        tuple(p.axis(n) for n in v_axes), w, z_axis, zp, f, snap_error
    )


def frl_compose(
    p_v: JointPmf,
    dec: FrlDecomposition,
    attach: Channel | None = None,
) -> JointPmf:
    """Joint over (U..., V..., W, Z) with p = p_V ⊗ z_pmf on {w = f(v, z)}.

    `attach`, when given, is the conditional p(U | V, W) whose input axes must
    be (V..., W); its rows are multiplied in to re-attach U.  Undefined attach
    rows may only sit under zero composed mass.
    """
    if p_v.mode != RATIONAL:
        raise InvalidInputError("composition runs in rational mode; snap inputs first")
    v_names = [a.name for a in dec.v_axes]
    if p_v.axis_names != tuple(v_names):
        p_v = p_v.reorder(v_names)
    n_v, n_z, n_w = dec.n_v, dec.cardinality, dec.w_axis.size
    pv = p_v.values.reshape(n_v)

    u_axes: tuple[Alphabet, ...] = ()
    rows = None
    defined = None
    if attach is not None:
        expect = tuple(v_names) + (dec.w_axis.name,)
        got = tuple(a.name for a in attach.inputs)
        if got != expect:
            raise AxisLookupError(f"attach channel inputs {got}, expected {expect}")
        if attach.mode != RATIONAL:
            raise InvalidInputError("attach channel must be rational")
        u_axes = attach.outputs
        n_u = attach.n_outputs
        rows = attach.matrix().reshape(n_v, n_w, n_u)
        defined = np.asarray(attach.defined).reshape(n_v, n_w)
    n_u = int(np.prod([a.size for a in u_axes])) if u_axes else 1

    vals = np.empty((n_u, n_v, n_w, n_z), dtype=object)
    vals[...] = Fraction(0)
    for vi in range(n_v):
        if pv[vi] == 0:
            continue
        for zi in range(n_z):
            mass = pv[vi] * dec.z_pmf[zi]
            if mass == 0:
                continue
            wi = int(dec.f[vi, zi])
            if attach is None:
                vals[0, vi, wi, zi] += mass
            else:
                if not defined[vi, wi]:
                    raise InvalidInputError(
                        "positive mass reaches an undefined attach row; "
                        "attach channel is inconsistent with the decomposition"
                    )
                for ui in range(n_u):
                    vals[ui, vi, wi, zi] += mass * rows[vi, wi, ui]

    axes = u_axes + tuple(dec.v_axes) + (dec.w_axis, dec.z_axis)
    u_shape = tuple(a.size for a in u_axes)
    v_shape = tuple(a.size for a in dec.v_axes)
    vals = vals.reshape(u_shape + v_shape + (n_w, n_z))
    return JointPmf(axes, vals, RATIONAL)


def frl_verify(
    p: JointPmf,
    dec: FrlDecomposition,
    v_axes: Sequence[str],
    w_axis: str,
    tol: float = 1e-10,
) -> FrlReport:
    """Check the three decomposition guarantees against the source joint.

    Builds the full (U, V, W, Z) joint and reports I(V;Z), I(U;Z | V,W), and
    the worst absolute deviation between its (U, V, W) marginal and `p`.
    """
    v_axes = list(v_axes)
    if dec.f.shape != (dec.n_v, dec.cardinality):
        raise InvalidInputError("decomposition table is incomplete")
    if p.mode == FLOAT:
        p, _ = p.snap_to_rational(SNAP_DENOMINATOR)
    u_axes = [n for n in p.axis_names if n not in v_axes and n != w_axis]
    p_v = p.marginalize(v_axes)
    attach = p.condition(given=v_axes + [w_axis], of=u_axes) if u_axes else None
    composed = frl_compose(p_v, dec, attach)

    independence_gap = composed.mutual_information(v_axes, [dec.z_axis.name])
    if u_axes:
        markov_gap = composed.mutual_information(
            u_axes, [dec.z_axis.name], given=v_axes + [w_axis]
        )
    else:
        markov_gap = 0.0

    order = list(p.axis_names)
    recon = composed.marginalize(order).reorder(order)
    diff = recon.values - p.values
    exact = all(x == 0 for x in diff.ravel())
    err = 0.0 if exact else max(abs(float(x)) for x in diff.ravel())
    return FrlReport(
        independence_gap=clamp_info(independence_gap, tol),
        markov_gap=clamp_info(markov_gap, tol),
        reconstruction_error=err,
        cardinality=dec.cardinality,
        exact=exact,
    )
