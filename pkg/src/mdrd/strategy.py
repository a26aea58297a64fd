"""State-informed channel capacity, directly and through strategy codebooks.

For a memoryless channel p(y | x, s) whose state s is known at both ends,
the capacity max over p(x | s) of I(X; Y | S) decomposes into independent
per-state capacities.  The same number is reached by coding over the
alphabet of strategies (maps s -> x): pick Z from a distribution over all
|X|^|S| strategies and transmit X = f_Z(S).  The noise-substitution
decomposition converts any per-state input law into such a strategy
distribution with the conditional mutual information preserved.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as iter_product
from typing import Mapping, Sequence

import numpy as np

from . import frl
from .probability import (
    Alphabet,
    Channel,
    InvalidInputError,
    JointPmf,
)

#: strategy alphabets above this size are rejected (|X| ** |S|)
MAX_STRATEGIES = 4096


@dataclass(frozen=True)
class StateChannel:
    """State pmf plus the channel law, as dense arrays."""

    states: Alphabet
    inputs: Alphabet
    outputs: Alphabet
    p_state: np.ndarray  # (|S|,)
    law: np.ndarray  # (|S|, |X|, |Y|), rows p(y | x, s)

    def __post_init__(self):
        ps = np.asarray(self.p_state, dtype=float)
        law = np.asarray(self.law, dtype=float)
        if ps.shape != (self.states.size,) or abs(ps.sum() - 1.0) > 1e-9 or ps.min() < 0:
            raise InvalidInputError("state distribution is not a pmf")
        if law.shape != (self.states.size, self.inputs.size, self.outputs.size):
            raise InvalidInputError(f"channel law shaped {law.shape}, expected (|S|,|X|,|Y|)")
        if np.any(law < 0) or np.abs(law.sum(axis=2) - 1.0).max() > 1e-9:
            raise InvalidInputError("channel rows must be pmfs over the output")
        object.__setattr__(self, "p_state", ps)
        object.__setattr__(self, "law", law)

    def to_json(self) -> dict:
        return {
            "states": self.states.to_json(),
            "inputs": self.inputs.to_json(),
            "outputs": self.outputs.to_json(),
            "p_state": self.p_state.tolist(),
            "law": self.law.tolist(),
        }

    @staticmethod
    def from_json(obj: Mapping) -> "StateChannel":
        return StateChannel(
            Alphabet.from_json(obj["states"]),
            Alphabet.from_json(obj["inputs"]),
            Alphabet.from_json(obj["outputs"]),
            np.asarray(obj["p_state"], dtype=float),
            np.asarray(obj["law"], dtype=float),
        )


def arimoto_capacity(
    w: np.ndarray, tol: float = 1e-12, max_iter: int = 50_000
) -> tuple[float, np.ndarray]:
    """Capacity (bits) of a discrete memoryless channel row matrix.

    Alternating maximization with the standard two-sided stopping rule: the
    iterate's support function brackets the capacity, so the returned value
    is within `tol` of the true maximum.
    """
    w = np.asarray(w, dtype=float)
    n_in, n_out = w.shape
    live = w > 0.0
    logw = np.where(live, np.log2(np.where(live, w, 1.0)), 0.0)
    p = np.full(n_in, 1.0 / n_in)
    value = 0.0
    for _ in range(max_iter):
        q = p @ w
        kl = np.where(live, w * (logw - np.log2(np.where(q > 0, q, 1.0))[None, :]), 0.0).sum(axis=1)
        upper = float(kl.max())
        lower = float(p @ kl)
        value = 0.5 * (upper + lower)
        if upper - lower < tol:
            break
        scaled = kl - kl.max()
        p = p * np.exp2(scaled)
        p /= p.sum()
    return max(value, 0.0), p


@dataclass(frozen=True)
class CapacityResult:
    value: float
    per_state: tuple[float, ...]
    p_input_given_state: np.ndarray  # (|S|, |X|)

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "per_state": list(self.per_state),
            "p_input_given_state": self.p_input_given_state.tolist(),
        }


def capacity_direct(ch: StateChannel, tol: float = 1e-12) -> CapacityResult:
    """max I(X; Y | S): the objective splits into one maximization per state,
    weighted by the state pmf."""
    per_state = []
    p_xs = np.zeros((ch.states.size, ch.inputs.size))
    for s in range(ch.states.size):
        c_s, p_s = arimoto_capacity(ch.law[s], tol=tol)
        per_state.append(c_s)
        p_xs[s] = p_s
    value = float(np.dot(ch.p_state, per_state))
    return CapacityResult(value, tuple(per_state), p_xs)


def strategy_maps(ch: StateChannel) -> list[tuple[int, ...]]:
    """All maps state -> input, ordered lexicographically by their value table."""
    n = ch.inputs.size ** ch.states.size
    if n > MAX_STRATEGIES:
        raise InvalidInputError(
            f"strategy alphabet of size {n} exceeds the cap {MAX_STRATEGIES}"
        )
    return list(iter_product(range(ch.inputs.size), repeat=ch.states.size))


def strategy_channel(ch: StateChannel) -> np.ndarray:
    """Row matrix of the induced channel strategy -> (state, output)."""
    maps = strategy_maps(ch)
    ns, ny = ch.states.size, ch.outputs.size
    rows = np.zeros((len(maps), ns * ny))
    for zi, f in enumerate(maps):
        for s in range(ns):
            rows[zi, s * ny : (s + 1) * ny] = ch.p_state[s] * ch.law[s, f[s]]
    return rows


@dataclass(frozen=True)
class StrategyCapacityResult:
    value: float
    p_strategy: np.ndarray
    maps: tuple[tuple[int, ...], ...]

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "p_strategy": self.p_strategy.tolist(),
            "maps": [list(m) for m in self.maps],
        }


def capacity_strategy(ch: StateChannel, tol: float = 1e-12) -> StrategyCapacityResult:
    """max over strategy distributions of I(Z; Y | S).

    Because the (state, output) pair has a state marginal independent of Z,
    I(Z; S, Y) = I(Z; Y | S), so this is a plain capacity computation over
    the strategy-indexed channel.
    """
    rows = strategy_channel(ch)
    value, p_z = arimoto_capacity(rows, tol=tol)
    return StrategyCapacityResult(float(value), p_z, tuple(strategy_maps(ch)))


def state_input_joint(ch: StateChannel, p_input_given_state: np.ndarray) -> JointPmf:
    """Joint pmf over (S, X, Y) from a per-state input law."""
    pxs = np.asarray(p_input_given_state, dtype=float)
    if pxs.shape != (ch.states.size, ch.inputs.size):
        raise InvalidInputError("per-state input law has the wrong shape")
    joint = ch.p_state[:, None, None] * pxs[:, :, None] * ch.law
    axes = [
        Alphabet("S", ch.states.size, ch.states.labels),
        Alphabet("X", ch.inputs.size, ch.inputs.labels),
        Alphabet("Y", ch.outputs.size, ch.outputs.labels),
    ]
    total = joint.sum()
    if abs(total - 1.0) > 1e-9:
        raise InvalidInputError("state/input/channel arrays are inconsistent")
    return JointPmf(axes, joint / total, "float")


@dataclass(frozen=True)
class FrlStrategy:
    decomposition: frl.FrlDecomposition
    composed: JointPmf  # over (Y, S, X, Z)
    info_direct: float  # I(X; Y | S) on the composed joint
    info_strategy: float  # I(Z; Y | S) on the composed joint

    def to_json(self) -> dict:
        return {
            "z_pmf": self.decomposition.to_json()["z_pmf"],
            "f": self.decomposition.f.tolist(),
            "info_direct": self.info_direct,
            "info_strategy": self.info_strategy,
        }


def strategy_from_frl(ch: StateChannel, p_input_given_state: np.ndarray) -> FrlStrategy:
    """Turn a per-state input law into an explicit (noise, map) strategy pair.

    Decomposing X against V = S yields Z independent of S with X = f(S, Z);
    each noise symbol z indexes the strategy f(., z), and I(Z; Y | S) equals
    I(X; Y | S) because Y depends on Z only through (S, X).
    """
    joint = state_input_joint(ch, p_input_given_state)
    snapped, _ = joint.snap_to_rational(frl.SNAP_DENOMINATOR)
    dec = frl.frl_decompose(snapped, ["S"], "X")
    attach = snapped.condition(given=["S", "X"], of=["Y"])
    composed = frl.frl_compose(snapped.marginalize(["S"]), dec, attach).to_float()
    z = dec.z_axis.name
    return FrlStrategy(
        decomposition=dec,
        composed=composed,
        info_direct=composed.mutual_information(["X"], ["Y"], given=["S"]),
        info_strategy=composed.mutual_information([z], ["Y"], given=["S"]),
    )
