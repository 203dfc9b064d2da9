"""Forward-pass executors over loadable weight bundles.

A bundle holds every tensor the controller's network agent needs:
feature reduction (384 -> hidden), a GRU cell (input 5 -> hidden), the
traffic-light/stop-sign bias encoder (2 -> hidden), the waypoint head
(hidden -> 2) and the two-layer MLP agent (hidden -> mlp_hidden -> 3).

File format (version 1): 8-byte magic ``SDCW0001``, a little-endian
uint32 header length, a UTF-8 JSON header listing tensor names, shapes
and payload offsets, then the concatenated little-endian float32
payload.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"SDCW0001"
FORMAT_NAME = "sdcdrive.weights/1"

FEATURE_DIM = 384
GRU_INPUT_DIM = 5  # current waypoint (2) + route point (2) + speed (1)
DEFAULT_HIDDEN = 232
DEFAULT_MLP_HIDDEN = 64


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=np.float64)))


def linear(w: np.ndarray, b: np.ndarray, x: np.ndarray) -> np.ndarray:
    return w @ x + b


def gru_cell(x: np.ndarray, h: np.ndarray, p: dict[str, np.ndarray]) -> np.ndarray:
    """One step of a standard update/reset/candidate-gate GRU cell.

    h' = z * h + (1 - z) * tanh(W_h x + U_h (r * h) + b_h), with
    z and r the sigmoid update and reset gates.
    """
    x = np.asarray(x, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    z = sigmoid(p["w_z"] @ x + p["u_z"] @ h + p["b_z"])
    r = sigmoid(p["w_r"] @ x + p["u_r"] @ h + p["b_r"])
    cand = np.tanh(p["w_h"] @ x + p["u_h"] @ (r * h) + p["b_h"])
    return z * h + (1.0 - z) * cand


_GATE_TENSORS = [f"gru.{kind}_{gate}" for gate in "zrh" for kind in ("w", "u", "b")]
REQUIRED_TENSORS = (
    ["reduce.weight", "reduce.bias"]
    + _GATE_TENSORS
    + ["tlss.weight", "tlss.bias", "head.weight", "head.bias",
       "mlp.w1", "mlp.b1", "mlp.w2", "mlp.b2"]
)


@dataclass
class WeightBundle:
    """Validated, named tensors for the controller network agent."""

    tensors: dict[str, np.ndarray]

    def __post_init__(self):
        missing = [n for n in REQUIRED_TENSORS if n not in self.tensors]
        if missing:
            raise ValueError(f"weight bundle missing tensors: {missing}")
        h = self.tensors["reduce.weight"].shape[0]
        m = self.tensors["mlp.w1"].shape[0]
        expected = {
            "reduce.weight": (h, FEATURE_DIM), "reduce.bias": (h,),
            "tlss.weight": (h, 2), "tlss.bias": (h,),
            "head.weight": (2, h), "head.bias": (2,),
            "mlp.w1": (m, h), "mlp.b1": (m,),
            "mlp.w2": (3, m), "mlp.b2": (3,),
        }
        for gate in "zrh":
            expected[f"gru.w_{gate}"] = (h, GRU_INPUT_DIM)
            expected[f"gru.u_{gate}"] = (h, h)
            expected[f"gru.b_{gate}"] = (h,)
        for name, shape in expected.items():
            got = self.tensors[name].shape
            if got != shape:
                raise ValueError(f"tensor {name} has shape {got}, expected {shape}")
        self.hidden = h
        self.mlp_hidden = m

    def gru_params(self) -> dict[str, np.ndarray]:
        return {k.split(".", 1)[1]: v for k, v in self.tensors.items() if k.startswith("gru.")}

    def save(self, path) -> None:
        names = sorted(self.tensors)
        offset = 0
        entries = []
        for name in names:
            t = self.tensors[name]
            entries.append({"name": name, "shape": list(t.shape),
                            "dtype": "<f4", "offset": offset})
            offset += t.size * 4
        header = json.dumps({
            "format": FORMAT_NAME,
            "hidden": self.hidden,
            "mlp_hidden": self.mlp_hidden,
            "tensors": entries,
        }).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(np.array(len(header), dtype="<u4").tobytes())
            fh.write(header)
            for name in names:
                fh.write(np.ascontiguousarray(self.tensors[name], dtype="<f4").tobytes())

    @classmethod
    def load(cls, path) -> "WeightBundle":
        raw = Path(path).read_bytes()
        if raw[:8] != MAGIC:
            raise ValueError(f"{path}: not a weight bundle (bad magic)")
        hlen = int(np.frombuffer(raw[8:12], dtype="<u4")[0])
        header = json.loads(raw[12:12 + hlen].decode("utf-8"))
        if header.get("format") != FORMAT_NAME:
            raise ValueError(f"{path}: unsupported format {header.get('format')!r}")
        payload = raw[12 + hlen:]
        tensors = {}
        for entry in header["tensors"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            start = entry["offset"]
            arr = np.frombuffer(payload, dtype="<f4", count=count, offset=start)
            tensors[entry["name"]] = arr.reshape(shape).astype(np.float64)
        return cls(tensors)


def _shapes(hidden: int, mlp_hidden: int) -> dict[str, tuple]:
    shapes = {
        "reduce.weight": (hidden, FEATURE_DIM), "reduce.bias": (hidden,),
        "tlss.weight": (hidden, 2), "tlss.bias": (hidden,),
        "head.weight": (2, hidden), "head.bias": (2,),
        "mlp.w1": (mlp_hidden, hidden), "mlp.b1": (mlp_hidden,),
        "mlp.w2": (3, mlp_hidden), "mlp.b2": (3,),
    }
    for gate in "zrh":
        shapes[f"gru.w_{gate}"] = (hidden, GRU_INPUT_DIM)
        shapes[f"gru.u_{gate}"] = (hidden, hidden)
        shapes[f"gru.b_{gate}"] = (hidden,)
    return shapes


def make_zero_bundle(hidden: int = DEFAULT_HIDDEN,
                     mlp_hidden: int = DEFAULT_MLP_HIDDEN) -> WeightBundle:
    return WeightBundle({n: np.zeros(s) for n, s in _shapes(hidden, mlp_hidden).items()})


def make_random_bundle(seed: int, hidden: int = DEFAULT_HIDDEN,
                       mlp_hidden: int = DEFAULT_MLP_HIDDEN) -> WeightBundle:
    """Seeded Gaussian weights scaled by 1/sqrt(fan_in); biases zero."""
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in _shapes(hidden, mlp_hidden).items():
        if name.endswith(("bias", "b_z", "b_r", "b_h", "b1", "b2")):
            tensors[name] = np.zeros(shape)
        else:
            fan_in = shape[-1]
            tensors[name] = rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=shape)
    return WeightBundle(tensors)


def make_constant_delta_bundle(dx: float, dy: float, hidden: int = DEFAULT_HIDDEN,
                               mlp_hidden: int = DEFAULT_MLP_HIDDEN) -> WeightBundle:
    """All-zero bundle whose waypoint head always emits (dx, dy)."""
    bundle = make_zero_bundle(hidden, mlp_hidden)
    bundle.tensors["head.bias"] = np.array([dx, dy], dtype=np.float64)
    return bundle
