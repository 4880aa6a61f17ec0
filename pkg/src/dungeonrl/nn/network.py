"""Four-branch recurrent policy/baseline network.

Three map branches (10x10 global, 5x5 and 3x3 local windows) each run
token embedding -> 3x3 conv -> 3x3 conv with ReLU; the 11-token
property vector runs its own embedding -> dense. Everything is
concatenated into a trunk dense layer, the previous action's one-hot
is appended, and an LSTM carries state across the episode. The policy
head emits 17 action logits (softmax applied downstream); the baseline
head is a single linear unit.

``width_scale`` shrinks every layer width proportionally for cheap CPU
runs; scale 1 is the full-size architecture.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..observe import GLOBAL_SIZE, MAP_VOCAB, NO_PREV_ACTION, PROP_VOCAB, ObservationBundle
from . import autograd as ag
from .autograd import Tensor

POLICY_HEAD = "policy"
BASELINE_HEAD = "baseline"

_MAP_BRANCHES = (("gmap", GLOBAL_SIZE * GLOBAL_SIZE), ("lmap5", 25), ("lmap3", 9))


class GradientError(Exception):
    """Non-finite gradient, tagged with the offending tensor name."""


@dataclass(frozen=True)
class NetworkSpec:
    width_scale: float = 1.0
    map_vocab: int = MAP_VOCAB
    map_embed: int = 32
    conv1_filters: int = 32
    conv2_filters: int = 64
    prop_vocab: int = PROP_VOCAB
    prop_embed: int = 64
    prop_dense: int = 256
    trunk_dense: int = 256
    lstm_width: int = 256
    n_actions: int = 17

    def scaled(self, width: int) -> int:
        return max(1, round(width * self.width_scale))

    @property
    def d_map_embed(self):
        return self.scaled(self.map_embed)

    @property
    def d_conv1(self):
        return self.scaled(self.conv1_filters)

    @property
    def d_conv2(self):
        return self.scaled(self.conv2_filters)

    @property
    def d_prop_embed(self):
        return self.scaled(self.prop_embed)

    @property
    def d_prop_dense(self):
        return self.scaled(self.prop_dense)

    @property
    def d_trunk(self):
        return self.scaled(self.trunk_dense)

    @property
    def d_lstm(self):
        return self.scaled(self.lstm_width)

    @property
    def d_trunk_in(self):
        flat = sum(cells * self.d_conv2 for _, cells in _MAP_BRANCHES)
        return flat + self.d_prop_dense

    def to_dict(self) -> dict:
        return {
            "width_scale": self.width_scale,
            "map_vocab": self.map_vocab,
            "map_embed": self.map_embed,
            "conv1_filters": self.conv1_filters,
            "conv2_filters": self.conv2_filters,
            "prop_vocab": self.prop_vocab,
            "prop_embed": self.prop_embed,
            "prop_dense": self.prop_dense,
            "trunk_dense": self.trunk_dense,
            "lstm_width": self.lstm_width,
            "n_actions": self.n_actions,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkSpec":
        return cls(**data)


@dataclass
class LstmState:
    """Recurrent carry; reset to zeros at every episode start."""

    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, spec: NetworkSpec, dtype=np.float32) -> "LstmState":
        return cls(h=np.zeros(spec.d_lstm, dtype=dtype),
                   c=np.zeros(spec.d_lstm, dtype=dtype))


class PolicyParams:
    """All learnable tensors of one network, addressable by name."""

    def __init__(self, spec: NetworkSpec, head: str, tensors: dict):
        if head not in (POLICY_HEAD, BASELINE_HEAD):
            raise ValueError(f"unknown head kind {head!r}")
        self.spec = spec
        self.head = head
        self.tensors = tensors

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def names(self):
        return list(self.tensors)

    def items(self):
        return self.tensors.items()

    def param_count(self) -> int:
        return sum(t.data.size for t in self.tensors.values())

    def zero_grads(self):
        for t in self.tensors.values():
            t.grad = None

    @property
    def dtype(self):
        return self.tensors["trunk.fc.w"].dtype


def _layer_shapes(spec: NetworkSpec, head: str) -> dict:
    shapes = {}
    for prefix, _ in _MAP_BRANCHES:
        shapes[f"{prefix}.embed"] = ("embed", (spec.map_vocab, spec.d_map_embed))
        shapes[f"{prefix}.conv1.w"] = ("conv", (3, 3, spec.d_map_embed, spec.d_conv1))
        shapes[f"{prefix}.conv1.b"] = ("bias", (spec.d_conv1,))
        shapes[f"{prefix}.conv2.w"] = ("conv", (3, 3, spec.d_conv1, spec.d_conv2))
        shapes[f"{prefix}.conv2.b"] = ("bias", (spec.d_conv2,))
    shapes["prop.embed"] = ("embed", (spec.prop_vocab, spec.d_prop_embed))
    shapes["prop.fc.w"] = ("dense", (11 * spec.d_prop_embed, spec.d_prop_dense))
    shapes["prop.fc.b"] = ("bias", (spec.d_prop_dense,))
    shapes["trunk.fc.w"] = ("dense", (spec.d_trunk_in, spec.d_trunk))
    shapes["trunk.fc.b"] = ("bias", (spec.d_trunk,))
    lstm_in = spec.d_trunk + spec.n_actions
    shapes["lstm.wx"] = ("dense", (lstm_in, 4 * spec.d_lstm))
    shapes["lstm.wh"] = ("dense", (spec.d_lstm, 4 * spec.d_lstm))
    shapes["lstm.b"] = ("bias", (4 * spec.d_lstm,))
    out = spec.n_actions if head == POLICY_HEAD else 1
    shapes["head.w"] = ("dense", (spec.d_lstm, out))
    shapes["head.b"] = ("bias", (out,))
    return shapes


def init_params(spec: NetworkSpec, seed: int, head: str = POLICY_HEAD,
                dtype=np.float32) -> PolicyParams:
    """Deterministic initialization: fan-in-scaled uniform for dense and
    conv kernels, zeros for biases, small uniform for embeddings."""
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, (kind, shape) in _layer_shapes(spec, head).items():
        if kind == "bias":
            data = np.zeros(shape, dtype=dtype)
        elif kind == "embed":
            data = rng.uniform(-0.05, 0.05, size=shape).astype(dtype)
        else:
            fan_in = int(np.prod(shape[:-1]))
            bound = float(np.sqrt(1.0 / fan_in))
            data = rng.uniform(-bound, bound, size=shape).astype(dtype)
        tensors[name] = Tensor(data, requires_grad=True, name=name)
    return PolicyParams(spec, head, tensors)


def one_hot_prev(prev_actions, n_actions: int, dtype) -> np.ndarray:
    """(B,) previous-action indices to one-hot rows; the episode-start
    sentinel (-1) becomes an all-zero row."""
    prev = np.asarray(prev_actions)
    out = np.zeros((prev.shape[0], n_actions), dtype=dtype)
    valid = prev >= 0
    out[np.nonzero(valid)[0], prev[valid]] = 1.0
    return out


def _map_branch(params: PolicyParams, prefix: str, grid) -> Tensor:
    """grid (B, H, W) int -> flat (B, H*W*conv2) features."""
    x = ag.embedding(params[f"{prefix}.embed"], grid)
    x = ag.relu(ag.add(ag.conv3x3_same(x, params[f"{prefix}.conv1.w"]),
                       params[f"{prefix}.conv1.b"]))
    x = ag.relu(ag.add(ag.conv3x3_same(x, params[f"{prefix}.conv2.w"]),
                       params[f"{prefix}.conv2.b"]))
    b, h, w, c = x.shape
    return ag.reshape(x, (b, h * w * c))


def trunk_features(params: PolicyParams, global_maps, local5s, local3s,
                   properties) -> Tensor:
    """Shared pre-LSTM computation for a batch of observations."""
    spec = params.spec
    branches = [
        _map_branch(params, "gmap", global_maps),
        _map_branch(params, "lmap5", local5s),
        _map_branch(params, "lmap3", local3s),
    ]
    p = ag.embedding(params["prop.embed"], properties)
    p = ag.reshape(p, (p.shape[0], 11 * spec.d_prop_embed))
    p = ag.relu(ag.add(ag.matmul(p, params["prop.fc.w"]), params["prop.fc.b"]))
    branches.append(p)
    trunk = ag.concat(branches, axis=1)
    return ag.relu(ag.add(ag.matmul(trunk, params["trunk.fc.w"]), params["trunk.fc.b"]))


def lstm_step(params: PolicyParams, x: Tensor, h: Tensor, c: Tensor):
    """One LSTM step over a (B, trunk+actions) input; gate order i,f,g,o."""
    width = params.spec.d_lstm
    gates = ag.add(ag.add(ag.matmul(x, params["lstm.wx"]),
                          ag.matmul(h, params["lstm.wh"])),
                   params["lstm.b"])
    i = ag.sigmoid(ag.slice_cols(gates, 0, width))
    f = ag.sigmoid(ag.slice_cols(gates, width, 2 * width))
    g = ag.tanh(ag.slice_cols(gates, 2 * width, 3 * width))
    o = ag.sigmoid(ag.slice_cols(gates, 3 * width, 4 * width))
    new_c = ag.add(ag.mul(f, c), ag.mul(i, g))
    new_h = ag.mul(o, ag.tanh(new_c))
    return new_h, new_c


def step_batch(params: PolicyParams, global_maps, local5s, local3s, properties,
               prev_onehot, h: Tensor, c: Tensor):
    """Full forward for a batch of observations at one time step.

    Returns (head output (B, out), new_h, new_c); the policy head's
    output is raw logits.
    """
    trunk = trunk_features(params, global_maps, local5s, local3s, properties)
    x = ag.concat([trunk, Tensor(prev_onehot)], axis=1)
    new_h, new_c = lstm_step(params, x, h, c)
    out = ag.add(ag.matmul(new_h, params["head.w"]), params["head.b"])
    return out, new_h, new_c


def _check_obs(obs: ObservationBundle, spec: NetworkSpec):
    if obs.global_map.shape != (GLOBAL_SIZE, GLOBAL_SIZE):
        raise ValueError(f"global map shape {obs.global_map.shape}")
    if obs.local5.shape != (5, 5) or obs.local3.shape != (3, 3):
        raise ValueError("local map shape mismatch")
    if obs.properties.shape != (11,):
        raise ValueError(f"property vector shape {obs.properties.shape}")
    if not (NO_PREV_ACTION <= obs.prev_action < spec.n_actions):
        raise ValueError(f"prev_action out of range: {obs.prev_action}")


def _single_step(params: PolicyParams, obs: ObservationBundle, state: LstmState):
    spec = params.spec
    _check_obs(obs, spec)
    dtype = params.dtype
    prev = one_hot_prev([obs.prev_action], spec.n_actions, dtype)
    with ag.no_grad():
        out, h, c = step_batch(
            params,
            obs.global_map[None], obs.local5[None], obs.local3[None],
            obs.properties[None], prev,
            Tensor(state.h[None].astype(dtype, copy=False)),
            Tensor(state.c[None].astype(dtype, copy=False)),
        )
    new_state = LstmState(h=h.data[0], c=c.data[0])
    return out.data[0], new_state


def policy_forward(params: PolicyParams, obs: ObservationBundle,
                   state: LstmState):
    """Action distribution (17 probabilities summing to 1) plus the
    advanced recurrent state."""
    if params.head != POLICY_HEAD:
        raise ValueError("policy_forward needs policy-head parameters")
    logits, new_state = _single_step(params, obs, state)
    shifted = logits - logits.max()
    probs = np.exp(shifted)
    probs /= probs.sum()
    return probs, new_state


def baseline_forward(params: PolicyParams, obs: ObservationBundle,
                     state: LstmState):
    """Scalar state-value estimate plus the advanced recurrent state."""
    if params.head != BASELINE_HEAD:
        raise ValueError("baseline_forward needs baseline-head parameters")
    out, new_state = _single_step(params, obs, state)
    return float(out[0]), new_state


def sample_action(probs, rng: np.random.Generator) -> int:
    """Categorical draw from a probability vector."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-3:
        raise ValueError("sample_action needs a normalized probability vector")
    cum = np.cumsum(p)
    r = rng.random() * cum[-1]
    return int(min(np.searchsorted(cum, r, side="right"), len(p) - 1))


def check_finite_grads(params: PolicyParams):
    """Fail fast, naming the first tensor with a non-finite gradient."""
    for name, t in params.items():
        if t.grad is not None and not np.all(np.isfinite(t.grad)):
            raise GradientError(f"non-finite gradient in {name}")
