"""Exact and floating-point probability calculus over named finite alphabets.

Everything downstream (decompositions, rate regions, capacity searches) is
built on three carriers defined here:

- `JointPmf`: a dense probability tensor whose axes are named `Alphabet`s.
  Axes are always addressed by name, never by position.
- `Channel`: a conditional pmf table p(outputs | inputs), with rows that
  condition on zero-probability events explicitly marked undefined.
- `DistortionMeasure`: a nonnegative per-symbol distortion matrix d(x, xhat).

Two arithmetic modes are supported and propagate through every operation:

- ``"rational"``: cell values are `fractions.Fraction`; marginalization,
  conditioning and composition are exact.  Logarithms are still floats, so
  information quantities are float in both modes.
- ``"float"``: cell values are float64; sums are checked to 1 within 1e-12.

All values are immutable after construction and all operations are pure
functions, so concurrent use needs no synchronization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iter_product
from typing import Iterable, Mapping, Sequence

import numpy as np

RATIONAL = "rational"
FLOAT = "float"

#: default tolerance (bits) for independence / Markov predicates
INFO_TOL = 1e-9

#: float-mode tolerance for "this tensor is a pmf"
PMF_SUM_TOL = 1e-12

#: information values more negative than this indicate a real bug, not noise
_NEGATIVE_INFO_PANIC = 1e-6


class MdrdError(Exception):
    """Base class for errors raised by this package."""


class InvalidInputError(MdrdError, ValueError):
    """Inputs violate a contract (bad pmf, malformed table, bad mode...)."""


class AxisLookupError(MdrdError, KeyError):
    """An axis name is unknown, duplicated, or used inconsistently."""


class InfeasibleError(MdrdError):
    """A constrained search exhausted its budget without a feasible point."""


def clamp_info(x: float, tol: float = INFO_TOL) -> float:
    """Clamp a slightly negative information value (bits) to zero.

    Values below -1e-6 bits are treated as genuine errors rather than
    rounding noise.
    """
    if x < -_NEGATIVE_INFO_PANIC:
        raise ArithmeticError(f"information value {x} is too negative to be rounding noise")
    return 0.0 if x < tol and x > -tol else max(x, 0.0)


def entropy_bits(values: np.ndarray) -> float:
    """Shannon entropy in bits of a nonnegative weight array, 0·log 0 := 0."""
    v = np.asarray(values, dtype=float).ravel()
    nz = v[v > 0.0]
    if nz.size == 0:
        return 0.0
    return float(clamp_info(-np.dot(nz, np.log2(nz))))


def binary_entropy(p: float) -> float:
    """H_b(p) in bits."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def as_exact(x) -> Fraction:
    """Coerce a number (int, Fraction, 'num/den' string, or float) to Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, (float, np.floating)):
        return Fraction(float(x))  # exact binary expansion
    raise InvalidInputError(f"cannot interpret {x!r} as an exact rational")


# ---------------------------------------------------------------------------
# Alphabets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Alphabet:
    """A named finite symbol set.

    `labels`, when given, must contain exactly `size` distinct entries; they
    are cosmetic (JSON round trips and product-alphabet bookkeeping).
    """

    name: str
    size: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.size < 1:
            raise InvalidInputError(f"alphabet {self.name!r} must have size >= 1")
        if self.labels is not None:
            if len(self.labels) != self.size or len(set(self.labels)) != self.size:
                raise InvalidInputError(
                    f"alphabet {self.name!r} needs {self.size} distinct labels"
                )

    def label(self, i: int) -> str:
        return self.labels[i] if self.labels is not None else str(i)

    def to_json(self) -> dict:
        out: dict = {"name": self.name, "size": self.size}
        if self.labels is not None:
            out["labels"] = list(self.labels)
        return out

    @staticmethod
    def from_json(obj: Mapping) -> "Alphabet":
        labels = tuple(obj["labels"]) if "labels" in obj and obj["labels"] is not None else None
        return Alphabet(str(obj["name"]), int(obj["size"]), labels)


def product_alphabet(name: str, parts: Sequence[Alphabet]) -> Alphabet:
    """Alphabet over the cartesian product of `parts`, row-major symbol order."""
    size = 1
    for a in parts:
        size *= a.size
    labels = tuple(
        "|".join(a.label(i) for a, i in zip(parts, idx))
        for idx in iter_product(*(range(a.size) for a in parts))
    )
    return Alphabet(name, size, labels)


# ---------------------------------------------------------------------------
# Joint pmfs
# ---------------------------------------------------------------------------


def _coerce_values(values, mode: str, shape: tuple[int, ...]) -> np.ndarray:
    if mode == RATIONAL:
        flat = [as_exact(x) for x in np.asarray(values, dtype=object).ravel()]
        arr = np.empty(len(flat), dtype=object)
        arr[:] = flat
        return arr.reshape(shape)
    arr = np.asarray(values, dtype=float).reshape(shape)
    return arr


class JointPmf:
    """Dense joint pmf over an ordered tuple of named alphabets."""

    __slots__ = ("axes", "values", "mode", "_index")

    def __init__(self, axes: Sequence[Alphabet], values, mode: str = FLOAT, validate: bool = True):
        if mode not in (RATIONAL, FLOAT):
            raise InvalidInputError(f"unknown arithmetic mode {mode!r}")
        axes = tuple(axes)
        names = [a.name for a in axes]
        if len(set(names)) != len(names):
            raise AxisLookupError(f"duplicate axis names in {names}")
        shape = tuple(a.size for a in axes)
        vals = _coerce_values(values, mode, shape)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "mode", mode)
        object.__setattr__(self, "_index", {a.name: i for i, a in enumerate(axes)})
        if validate:
            self._validate()

    def __setattr__(self, *a):  # immutable carrier
        raise AttributeError("JointPmf is immutable")

    def _validate(self):
        if self.mode == RATIONAL:
            for x in self.values.ravel():
                if x < 0:
                    raise InvalidInputError(f"negative probability {x}")
            if sum(self.values.ravel(), Fraction(0)) != 1:
                raise InvalidInputError("rational pmf entries do not sum to 1")
        else:
            v = self.values
            if np.any(v < -PMF_SUM_TOL):
                raise InvalidInputError("negative probability entries")
            if v.min(initial=0.0) < 0.0:
                np.clip(v, 0.0, None, out=v)
            if abs(float(v.sum()) - 1.0) > PMF_SUM_TOL:
                raise InvalidInputError(f"pmf entries sum to {float(v.sum())}, not 1")

    # -- axis bookkeeping ---------------------------------------------------

    @property
    def axis_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.axes)

    def axis(self, name: str) -> Alphabet:
        try:
            return self.axes[self._index[name]]
        except KeyError:
            raise AxisLookupError(f"unknown axis {name!r}; have {self.axis_names}") from None

    def _positions(self, names: Iterable[str]) -> list[int]:
        out = []
        for n in names:
            if n not in self._index:
                raise AxisLookupError(f"unknown axis {n!r}; have {self.axis_names}")
            out.append(self._index[n])
        if len(set(out)) != len(out):
            raise AxisLookupError(f"axis names repeat in {list(names)}")
        return out

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def uniform(axes: Sequence[Alphabet], mode: str = FLOAT) -> "JointPmf":
        shape = tuple(a.size for a in axes)
        n = int(np.prod(shape))
        if mode == RATIONAL:
            vals = np.empty(n, dtype=object)
            vals[:] = [Fraction(1, n)] * n
            return JointPmf(axes, vals.reshape(shape), RATIONAL)
        return JointPmf(axes, np.full(shape, 1.0 / n), FLOAT)

    def to_float(self) -> "JointPmf":
        if self.mode == FLOAT:
            return self
        return JointPmf(self.axes, self.values.astype(float), FLOAT, validate=False)

    def snap_to_rational(self, max_denominator: int = 10**9) -> tuple["JointPmf", float]:
        """Snap float cells to rationals with bounded denominator, renormalized.

        Returns the snapped pmf and the max absolute cell deviation from the
        input.  A rational-mode input is returned unchanged with error 0.
        """
        if self.mode == RATIONAL:
            return self, 0.0
        snapped = [Fraction(float(x)).limit_denominator(max_denominator) for x in self.values.ravel()]
        total = sum(snapped, Fraction(0))
        if total == 0:
            raise InvalidInputError("cannot snap the all-zero tensor to a pmf")
        snapped = [x / total for x in snapped]
        arr = np.empty(len(snapped), dtype=object)
        arr[:] = snapped
        out = JointPmf(self.axes, arr.reshape(self.values.shape), RATIONAL)
        err = max(abs(float(s) - float(x)) for s, x in zip(snapped, self.values.ravel()))
        return out, err

    # -- core operations ------------------------------------------------------

    def reorder(self, names: Sequence[str]) -> "JointPmf":
        """Transpose to the given complete axis-name order."""
        pos = self._positions(names)
        if len(pos) != len(self.axes):
            raise AxisLookupError("reorder needs the complete axis list")
        return JointPmf(
            tuple(self.axes[i] for i in pos),
            self.values.transpose(pos),
            self.mode,
            validate=False,
        )

    def marginalize(self, keep: Iterable[str]) -> "JointPmf":
        """Sum out every axis not in `keep`; surviving axes keep their order."""
        keep = list(keep)
        keep_pos = set(self._positions(keep))
        drop = tuple(i for i in range(len(self.axes)) if i not in keep_pos)
        vals = self.values.sum(axis=drop) if drop else self.values
        axes = tuple(a for i, a in enumerate(self.axes) if i in keep_pos)
        if not axes:
            raise AxisLookupError("cannot marginalize away every axis")
        return JointPmf(axes, vals, self.mode, validate=False)

    def condition(self, given: Sequence[str], of: Sequence[str]) -> "Channel":
        """Conditional law p(of | given) as a Channel.

        Rows whose conditioning tuple has zero probability are marked
        undefined (all-zero row, excluded from downstream sums).
        """
        given, of = list(given), list(of)
        if set(given) & set(of):
            raise AxisLookupError(f"conditioning sets overlap: {set(given) & set(of)}")
        marg = self.marginalize(given + of).reorder(given + of)
        gshape = tuple(self.axis(n).size for n in given)
        oshape = tuple(self.axis(n).size for n in of)
        ng = int(np.prod(gshape)) if gshape else 1
        no = int(np.prod(oshape))
        table = marg.values.reshape(ng, no)
        if self.mode == RATIONAL:
            rows = np.empty((ng, no), dtype=object)
            defined = np.empty(ng, dtype=bool)
            for g in range(ng):
                tot = sum(table[g], Fraction(0))
                if tot == 0:
                    rows[g, :] = [Fraction(0)] * no
                    defined[g] = False
                else:
                    rows[g, :] = [x / tot for x in table[g]]
                    defined[g] = True
        else:
            tot = table.sum(axis=1)
            defined = tot > 0.0
            rows = np.zeros((ng, no))
            rows[defined] = table[defined] / tot[defined, None]
        return Channel(
            tuple(self.axis(n) for n in given),
            tuple(self.axis(n) for n in of),
            rows.reshape(gshape + oshape),
            defined.reshape(gshape) if gshape else defined.reshape(()),
            self.mode,
        )

    # -- information measures (always float bits) -----------------------------

    def entropy(self, names: Iterable[str]) -> float:
        """H(names) in bits."""
        return entropy_bits(self.marginalize(list(names)).values)

    def conditional_entropy(self, names: Iterable[str], given: Iterable[str]) -> float:
        """H(names | given) = H(names, given) - H(given), in bits."""
        names, given = list(names), list(given)
        if set(names) & set(given):
            raise AxisLookupError("conditional entropy sets overlap")
        if not given:
            return self.entropy(names)
        return clamp_info(self.entropy(names + given) - self.entropy(given))

    def mutual_information(
        self, a: Iterable[str], b: Iterable[str], given: Iterable[str] = ()
    ) -> float:
        """I(a ; b | given) in bits, clamped to be nonnegative."""
        a, b, given = list(a), list(b), list(given)
        for s, t in ((a, b), (a, given), (b, given)):
            if set(s) & set(t):
                raise AxisLookupError("mutual information axis sets must be pairwise disjoint")
        h_ag = self.entropy(a + given)
        h_bg = self.entropy(b + given)
        h_abg = self.entropy(a + b + given)
        h_g = self.entropy(given) if given else 0.0
        return clamp_info(h_ag + h_bg - h_abg - h_g)

    def is_independent(
        self, a: Iterable[str], b: Iterable[str], given: Iterable[str] = (), tol: float = INFO_TOL
    ) -> bool:
        return self.mutual_information(a, b, given) <= tol

    def is_markov(
        self, a: Iterable[str], b: Iterable[str], c: Iterable[str], tol: float = INFO_TOL
    ) -> bool:
        """True iff a - b - c is a Markov chain, i.e. I(a ; c | b) <= tol."""
        return self.mutual_information(a, c, given=b) <= tol

    # -- structural edits ------------------------------------------------------

    def rename_axis(self, old: str, new: str) -> "JointPmf":
        axes = tuple(
            Alphabet(new, a.size, a.labels) if a.name == old else a for a in self.axes
        )
        if old not in self._index:
            raise AxisLookupError(f"unknown axis {old!r}")
        return JointPmf(axes, self.values, self.mode, validate=False)

    def merge_axes(self, names: Sequence[str], new_name: str) -> "JointPmf":
        """Replace the listed axes by a single product axis at the position of
        the first listed axis.  Cell order within the product is row-major in
        the listed order."""
        names = list(names)
        if len(names) < 2:
            raise AxisLookupError("merge_axes needs at least two axes")
        pos = self._positions(names)
        first = self._index[names[0]]
        rest = [i for i in range(len(self.axes)) if i not in set(pos)]
        insert_at = sum(1 for i in rest if i < first)
        order = rest[:insert_at] + pos + rest[insert_at:]
        vals = self.values.transpose(order)
        lead = vals.shape[:insert_at]
        tail = vals.shape[insert_at + len(pos):]
        merged_size = int(np.prod([self.axes[i].size for i in pos]))
        vals = vals.reshape(lead + (merged_size,) + tail)
        new_axis = product_alphabet(new_name, [self.axes[i] for i in pos])
        axes = (
            tuple(self.axes[i] for i in rest[:insert_at])
            + (new_axis,)
            + tuple(self.axes[i] for i in rest[insert_at:])
        )
        return JointPmf(axes, vals, self.mode, validate=False)

    def add_constant_axis(self, name: str, position: int | None = None) -> "JointPmf":
        """Insert a size-1 axis (a constant random variable)."""
        axes = list(self.axes)
        position = len(axes) if position is None else position
        axes.insert(position, Alphabet(name, 1))
        vals = np.expand_dims(self.values, axis=position)
        return JointPmf(tuple(axes), vals, self.mode, validate=False)

    def map_axis(self, name: str, table: Sequence[int], new_alphabet: Alphabet) -> "JointPmf":
        """Push the named axis through a deterministic symbol map g.

        `table[i]` is the image of symbol i; cells with the same image are
        accumulated.  Used for data-processing checks and decoder pushforwards.
        """
        pos = self._index[name]
        table = list(table)
        if len(table) != self.axes[pos].size:
            raise InvalidInputError("map table must cover the whole axis")
        if any(not (0 <= int(t) < new_alphabet.size) for t in table):
            raise InvalidInputError("map table entries out of range")
        shape = list(self.values.shape)
        shape[pos] = new_alphabet.size
        if self.mode == RATIONAL:
            vals = np.empty(shape, dtype=object)
            vals[...] = Fraction(0)
        else:
            vals = np.zeros(shape)
        src = np.moveaxis(self.values, pos, 0)
        dst = np.moveaxis(vals, pos, 0)
        for i, t in enumerate(table):
            dst[int(t)] = dst[int(t)] + src[i]
        axes = tuple(new_alphabet if i == pos else a for i, a in enumerate(self.axes))
        return JointPmf(axes, vals, self.mode, validate=False)

    # -- serialization ---------------------------------------------------------

    def to_json(self) -> dict:
        if self.mode == RATIONAL:
            vals = np.vectorize(lambda f: f"{f.numerator}/{f.denominator}", otypes=[object])(
                self.values
            ).tolist()
        else:
            vals = self.values.tolist()
        return {"axes": [a.to_json() for a in self.axes], "values": vals, "mode": self.mode}

    @staticmethod
    def from_json(obj: Mapping, mode: str | None = None) -> "JointPmf":
        axes = tuple(Alphabet.from_json(a) for a in obj["axes"])
        m = mode or obj.get("mode", FLOAT)
        return JointPmf(axes, obj["values"], m)

    def __repr__(self) -> str:
        dims = ",".join(f"{a.name}:{a.size}" for a in self.axes)
        return f"JointPmf({dims}, mode={self.mode})"


# ---------------------------------------------------------------------------
# Channels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Channel:
    """Conditional pmf p(outputs | inputs) with per-row defined flags."""

    inputs: tuple[Alphabet, ...]
    outputs: tuple[Alphabet, ...]
    rows: np.ndarray  # shape (*input sizes, *output sizes)
    defined: np.ndarray  # bool, shape (*input sizes)
    mode: str = FLOAT

    def __post_init__(self):
        in_shape = tuple(a.size for a in self.inputs)
        out_shape = tuple(a.size for a in self.outputs)
        if self.rows.shape != in_shape + out_shape:
            raise InvalidInputError(
                f"channel rows shaped {self.rows.shape}, expected {in_shape + out_shape}"
            )

    @property
    def n_inputs(self) -> int:
        return int(np.prod([a.size for a in self.inputs])) if self.inputs else 1

    @property
    def n_outputs(self) -> int:
        return int(np.prod([a.size for a in self.outputs]))

    def matrix(self) -> np.ndarray:
        """Rows-by-outputs view, shape (n_inputs, n_outputs)."""
        return self.rows.reshape(self.n_inputs, self.n_outputs)

    def row(self, idx: tuple[int, ...]) -> np.ndarray:
        return self.rows[idx]

    def is_defined(self, idx: tuple[int, ...]) -> bool:
        return bool(self.defined[idx])

    def to_float(self) -> "Channel":
        if self.mode == FLOAT:
            return self
        return Channel(
            self.inputs, self.outputs, self.rows.astype(float), self.defined, FLOAT
        )

    def to_json(self) -> dict:
        if self.mode == RATIONAL:
            rows = np.vectorize(lambda f: f"{f.numerator}/{f.denominator}", otypes=[object])(
                self.rows
            ).tolist()
        else:
            rows = self.rows.tolist()
        return {
            "inputs": [a.to_json() for a in self.inputs],
            "outputs": [a.to_json() for a in self.outputs],
            "rows": rows,
            "defined": np.asarray(self.defined, dtype=bool).tolist(),
        }

    @staticmethod
    def from_rows(
        inputs: Sequence[Alphabet], outputs: Sequence[Alphabet], rows, mode: str = FLOAT
    ) -> "Channel":
        inputs, outputs = tuple(inputs), tuple(outputs)
        in_shape = tuple(a.size for a in inputs)
        out_shape = tuple(a.size for a in outputs)
        vals = _coerce_values(rows, mode, in_shape + out_shape)
        flat = vals.reshape(-1, int(np.prod(out_shape)))
        for r in range(flat.shape[0]):
            s = sum(flat[r], Fraction(0)) if mode == RATIONAL else float(flat[r].sum())
            ok = (s == 1) if mode == RATIONAL else abs(s - 1.0) <= 1e-9
            if not ok:
                raise InvalidInputError(f"channel row {r} sums to {s}, not 1")
        defined = np.ones(in_shape if in_shape else (), dtype=bool)
        return Channel(inputs, outputs, vals, defined, mode)


def joint_from_channel(p_in: JointPmf, ch: Channel) -> JointPmf:
    """Joint pmf over (inputs..., outputs...) from an input marginal and a channel.

    Input axes of `ch` must exactly match the axes of `p_in` (same order).
    Undefined channel rows must carry zero input mass.
    """
    if tuple(a.name for a in ch.inputs) != p_in.axis_names:
        raise AxisLookupError(
            f"channel inputs {[a.name for a in ch.inputs]} do not match pmf axes {p_in.axis_names}"
        )
    if p_in.mode != ch.mode:
        raise InvalidInputError("mode mismatch between marginal and channel")
    n_in, n_out = ch.n_inputs, ch.n_outputs
    pin = p_in.values.reshape(n_in)
    rows = ch.matrix()
    dflat = np.asarray(ch.defined).reshape(n_in)
    if p_in.mode == RATIONAL:
        vals = np.empty((n_in, n_out), dtype=object)
        for i in range(n_in):
            if pin[i] != 0 and not dflat[i]:
                raise InvalidInputError("positive input mass on an undefined channel row")
            vals[i, :] = [pin[i] * r for r in rows[i]]
    else:
        if np.any((pin > 0) & ~dflat):
            raise InvalidInputError("positive input mass on an undefined channel row")
        vals = pin[:, None] * rows
    axes = p_in.axes + ch.outputs
    shape = tuple(a.size for a in axes)
    return JointPmf(axes, vals.reshape(shape), p_in.mode, validate=False)


# ---------------------------------------------------------------------------
# Distortion
# ---------------------------------------------------------------------------


class DistortionMeasure:
    """Per-symbol distortion d(x, xhat) >= 0 between a source and a
    reconstruction alphabet."""

    def __init__(self, source: Alphabet, recon: Alphabet, table):
        tab = np.asarray(table, dtype=object)
        if tab.shape != (source.size, recon.size):
            raise InvalidInputError(
                f"distortion table shaped {tab.shape}, expected {(source.size, recon.size)}"
            )
        self.source = source
        self.recon = recon
        self._raw = tab
        self.table = np.asarray(
            [[float(x) for x in row] for row in tab.tolist()], dtype=float
        )
        if not np.all(np.isfinite(self.table)) or np.any(self.table < 0):
            raise InvalidInputError("distortion entries must be finite and nonnegative")
        self._exact: np.ndarray | None = None

    def exact_table(self) -> np.ndarray:
        """Fraction-valued view, for exact expectations in rational mode."""
        if self._exact is None:
            flat = [as_exact(x) for x in self._raw.ravel()]
            arr = np.empty(len(flat), dtype=object)
            arr[:] = flat
            self._exact = arr.reshape(self._raw.shape)
        return self._exact

    @staticmethod
    def hamming(source: Alphabet, recon: Alphabet | None = None) -> "DistortionMeasure":
        recon = recon or Alphabet("Xhat", source.size)
        if recon.size != source.size:
            raise InvalidInputError("hamming distortion needs equal alphabet sizes")
        return DistortionMeasure(source, recon, (1 - np.eye(source.size, dtype=int)).tolist())

    def to_json(self) -> dict:
        return {
            "source": self.source.name,
            "recon": self.recon.name,
            "table": self.table.tolist(),
        }


@dataclass(frozen=True)
class Decoder:
    """Deterministic reconstruction map: joint symbols of `inputs` -> recon index."""

    inputs: tuple[str, ...]
    table: np.ndarray  # int array, shape = input alphabet sizes

    def __call__(self, idx: tuple[int, ...]) -> int:
        return int(self.table[idx])

    def to_json(self) -> dict:
        return {"inputs": list(self.inputs), "table": np.asarray(self.table).tolist()}

    @staticmethod
    def from_json(obj: Mapping) -> "Decoder":
        return Decoder(tuple(obj["inputs"]), np.asarray(obj["table"], dtype=int))


def expected_distortion(
    p: JointPmf, d: DistortionMeasure, decoder: Decoder, source_axis: str = "X"
):
    """E[d(X, decoder(aux))] under p.

    Exact Fraction in rational mode, float otherwise.  The decoder table must
    cover every input tuple (dense array); the source axis must be present.
    """
    names = [source_axis, *decoder.inputs]
    marg = p.marginalize(names).reorder(names)
    in_sizes = tuple(p.axis(n).size for n in decoder.inputs)
    tab = np.asarray(decoder.table, dtype=int)
    if tab.shape != in_sizes:
        raise InvalidInputError(
            f"decoder table shaped {tab.shape} does not cover inputs {in_sizes}"
        )
    if tab.size and (tab.min() < 0 or tab.max() >= d.recon.size):
        raise InvalidInputError("decoder outputs fall outside the reconstruction alphabet")
    dtab = d.exact_table() if p.mode == RATIONAL else d.table
    # per-cell distortion: rows of d indexed by x, columns by decoder output
    per_cell = dtab[:, tab.ravel()]  # shape (|X|, prod(inputs))
    vals = marg.values.reshape(d.source.size, -1)
    if p.mode == RATIONAL:
        return sum((vals * per_cell).ravel(), Fraction(0))
    return float((vals * per_cell).sum())


def best_decoder(
    p: JointPmf, d: DistortionMeasure, inputs: Sequence[str], source_axis: str = "X"
) -> tuple[Decoder, float]:
    """Pointwise-optimal decoder over `inputs` and its expected distortion.

    For each input tuple the reconstruction minimizing the conditional
    expected distortion is chosen (ties to the lowest index).  Float path.
    """
    inputs = list(inputs)
    names = [source_axis, *inputs]
    marg = p.marginalize(names).reorder(names).to_float()
    in_sizes = tuple(p.axis(n).size for n in inputs)
    vals = marg.values.reshape(d.source.size, -1)
    scores = d.table.T @ vals  # (|recon|, n_inputs): E[d | input] * p(input)
    choice = np.argmin(scores, axis=0)
    dist = float(scores[choice, np.arange(scores.shape[1])].sum())
    return Decoder(tuple(inputs), choice.reshape(in_sizes) if in_sizes else choice.reshape(())), dist


# ---------------------------------------------------------------------------
# Random pmfs (seeded helpers used by searches, suites, and tests)
# ---------------------------------------------------------------------------


def random_pmf(rng: np.random.Generator, axes: Sequence[Alphabet]) -> JointPmf:
    """Float pmf drawn from a flat Dirichlet over all cells."""
    shape = tuple(a.size for a in axes)
    v = rng.dirichlet(np.ones(int(np.prod(shape))))
    return JointPmf(axes, v.reshape(shape), FLOAT, validate=False)


def random_rational_pmf(
    rng: np.random.Generator,
    axes: Sequence[Alphabet],
    max_numerator: int = 12,
    allow_zeros: bool = True,
) -> JointPmf:
    """Exact pmf with small integer numerators over their common sum."""
    shape = tuple(a.size for a in axes)
    n = int(np.prod(shape))
    lo = 0 if allow_zeros else 1
    nums = rng.integers(lo, max_numerator + 1, size=n)
    while nums.sum() == 0:
        nums = rng.integers(lo, max_numerator + 1, size=n)
    total = int(nums.sum())
    vals = np.empty(n, dtype=object)
    vals[:] = [Fraction(int(k), total) for k in nums]
    return JointPmf(axes, vals.reshape(shape), RATIONAL, validate=False)
