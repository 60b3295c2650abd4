"""Policy/value network: torch module for training, numpy twin for inference.

MCTS is inference-bound on CPU, so self-play and serving run a pure-numpy
re-implementation of the forward pass built from the torch state dict (the
two are asserted equal in the tests). Checkpoints use a versioned binary
format with the architecture descriptor and the move-table checksum in the
header; loading refuses mismatched tables or corrupted payloads.
"""

from __future__ import annotations

import hashlib
import io
import json
import struct
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .encoding import NUM_PLANES, STATE_SHAPE

CHECKPOINT_MAGIC = b"XQNET\x00"
CHECKPOINT_VERSION = 1


class CheckpointError(RuntimeError):
    pass


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class Architecture:
    action_size: int
    filters: int = 32
    blocks: int = 0

    def to_dict(self) -> dict:
        return {"action_size": self.action_size, "filters": self.filters,
                "blocks": self.blocks}

    @classmethod
    def from_dict(cls, d: dict) -> "Architecture":
        return cls(action_size=int(d["action_size"]), filters=int(d["filters"]),
                   blocks=int(d["blocks"]))


class ResidualBlock(nn.Module):
    def __init__(self, filters: int):
        super().__init__()
        self.conv1 = nn.Conv2d(filters, filters, 3, padding=1)
        self.conv2 = nn.Conv2d(filters, filters, 3, padding=1)

    def forward(self, x):
        y = F.relu(self.conv1(x))
        y = self.conv2(y)
        return F.relu(x + y)


class PolicyValueNet(nn.Module):
    """Convolutional trunk with policy and value heads.

    The final layers start at zero so a fresh network plays the uniform
    policy with value 0, which keeps low-simulation searches deterministic.
    """

    def __init__(self, arch: Architecture):
        super().__init__()
        self.arch = arch
        f = arch.filters
        self.conv_in = nn.Conv2d(NUM_PLANES, f, 3, padding=1)
        self.blocks = nn.ModuleList(ResidualBlock(f) for _ in range(arch.blocks))
        self.conv_out = nn.Conv2d(f, f, 3, padding=1)
        self.policy_conv = nn.Conv2d(f, 4, 1)
        self.policy_fc = nn.Linear(4 * 90, arch.action_size)
        self.value_conv = nn.Conv2d(f, 2, 1)
        self.value_fc1 = nn.Linear(2 * 90, 64)
        self.value_fc2 = nn.Linear(64, 1)
        nn.init.zeros_(self.policy_fc.weight)
        nn.init.zeros_(self.policy_fc.bias)
        nn.init.zeros_(self.value_fc2.weight)
        nn.init.zeros_(self.value_fc2.bias)

    def forward(self, x):
        x = F.relu(self.conv_in(x))
        for block in self.blocks:
            x = block(x)
        x = F.relu(self.conv_out(x))
        logits = self.policy_fc(F.relu(self.policy_conv(x)).flatten(1))
        v = F.relu(self.value_conv(x)).flatten(1)
        v = F.relu(self.value_fc1(v))
        v = torch.tanh(self.value_fc2(v))
        return logits, v.squeeze(-1)


def new_net(action_size: int, filters: int = 32, blocks: int = 0,
            seed: int | None = None) -> PolicyValueNet:
    if seed is not None:
        torch.manual_seed(seed)
    return PolicyValueNet(Architecture(action_size, filters, blocks))


# ---------------------------------------------------------------------------
# Training step (squared value error, policy cross-entropy, L2 penalty).


@dataclass
class LossParts:
    total: float
    value: float
    policy: float
    l2: float


def loss_terms(z: torch.Tensor, v: torch.Tensor, pi: torch.Tensor,
               log_p: torch.Tensor, theta_sq: torch.Tensor,
               alpha: float, beta: float) -> tuple[torch.Tensor, ...]:
    value_loss = torch.mean((z - v) ** 2)
    policy_loss = -torch.mean(torch.sum(pi * log_p, dim=1))
    l2 = beta * theta_sq
    return value_loss + alpha * policy_loss + l2, value_loss, policy_loss, l2


def train_step(net: PolicyValueNet, optimizer: torch.optim.Optimizer,
               states: np.ndarray, pis: np.ndarray, zs: np.ndarray,
               alpha: float = 1.0, beta: float = 1e-4) -> LossParts:
    """One optimizer step on a (state, search-policy, outcome) batch."""
    if len(states) == 0:
        raise ValueError("empty training batch")
    net.train()
    x = torch.as_tensor(states, dtype=torch.float32)
    pi = torch.as_tensor(pis, dtype=torch.float32)
    z = torch.as_tensor(zs, dtype=torch.float32)
    logits, v = net(x)
    log_p = F.log_softmax(logits, dim=1)
    theta_sq = sum(torch.sum(p ** 2) for p in net.parameters())
    total, value_loss, policy_loss, l2 = loss_terms(z, v, pi, log_p, theta_sq,
                                                    alpha, beta)
    if not torch.isfinite(total):
        raise TrainingError(
            f"non-finite loss: value={value_loss.item()} policy={policy_loss.item()} "
            f"l2={l2.item()} batch={len(states)}")
    optimizer.zero_grad()
    total.backward()
    optimizer.step()
    return LossParts(total=float(total.item()), value=float(value_loss.item()),
                     policy=float(policy_loss.item()), l2=float(l2.item()))


# ---------------------------------------------------------------------------
# Numpy inference twin.


_COL_INDEX = None


def _im2col_indices():
    """Flat gather indices mapping each (cell, 3x3 patch slot) to a padded board."""
    global _COL_INDEX
    if _COL_INDEX is None:
        idx = np.zeros((90, 9), dtype=np.int64)
        for r in range(10):
            for c in range(9):
                n = 0
                for dr in (-1, 0, 1):
                    for dc in (-1, 0, 1):
                        rr, cc = r + dr + 1, c + dc + 1
                        idx[r * 9 + c, n] = rr * 11 + cc
                        n += 1
        _COL_INDEX = idx
    return _COL_INDEX


def _conv3x3(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """3x3 same-padding convolution on (C, 10, 9) via im2col."""
    c = x.shape[0]
    padded = np.zeros((c, 12, 11), dtype=np.float32)
    padded[:, 1:11, 1:10] = x
    cols = padded.reshape(c, -1)[:, _im2col_indices()]      # (C, 90, 9)
    cols = cols.transpose(1, 0, 2).reshape(90, c * 9)       # (90, C*9)
    w = weight.transpose(1, 2, 3, 0).reshape(c * 9, -1)     # (C*9, OUT)
    out = cols @ w + bias
    return out.T.reshape(-1, 10, 9)


class NumpyNet:
    """Inference-only forward pass mirroring PolicyValueNet exactly."""

    def __init__(self, arch: Architecture, params: dict[str, np.ndarray]):
        self.arch = arch
        self.params = {k: np.ascontiguousarray(v, dtype=np.float32)
                       for k, v in params.items()}

    @classmethod
    def from_torch(cls, net: PolicyValueNet) -> "NumpyNet":
        params = {k: v.detach().cpu().numpy() for k, v in net.state_dict().items()}
        return cls(net.arch, params)

    def forward(self, planes: np.ndarray) -> tuple[np.ndarray, float]:
        p = self.params
        x = np.maximum(_conv3x3(planes, p["conv_in.weight"], p["conv_in.bias"]), 0.0)
        for b in range(self.arch.blocks):
            y = np.maximum(_conv3x3(x, p[f"blocks.{b}.conv1.weight"],
                                    p[f"blocks.{b}.conv1.bias"]), 0.0)
            y = _conv3x3(y, p[f"blocks.{b}.conv2.weight"], p[f"blocks.{b}.conv2.bias"])
            x = np.maximum(x + y, 0.0)
        x = np.maximum(_conv3x3(x, p["conv_out.weight"], p["conv_out.bias"]), 0.0)

        pw = p["policy_conv.weight"][:, :, 0, 0]   # (4, F)
        ph = np.maximum(np.tensordot(pw, x, axes=(1, 0))
                        + p["policy_conv.bias"][:, None, None], 0.0)
        logits = p["policy_fc.weight"] @ ph.reshape(-1) + p["policy_fc.bias"]

        vw = p["value_conv.weight"][:, :, 0, 0]    # (2, F)
        vh = np.maximum(np.tensordot(vw, x, axes=(1, 0))
                        + p["value_conv.bias"][:, None, None], 0.0)
        vh = np.maximum(p["value_fc1.weight"] @ vh.reshape(-1) + p["value_fc1.bias"], 0.0)
        v = np.tanh(p["value_fc2.weight"] @ vh + p["value_fc2.bias"])
        return logits, float(v[0])


# ---------------------------------------------------------------------------
# Checkpoints.


def serialize_checkpoint(net: PolicyValueNet, movetable_checksum: str,
                         version_tag: str, extra: dict | None = None) -> bytes:
    header = {
        "arch": net.arch.to_dict(),
        "movetable_checksum": movetable_checksum,
        "version_tag": version_tag,
        "extra": extra or {},
    }
    header_bytes = json.dumps(header, sort_keys=True).encode()
    buf = io.BytesIO()
    buf.write(CHECKPOINT_MAGIC)
    buf.write(struct.pack("<HI", CHECKPOINT_VERSION, len(header_bytes)))
    buf.write(header_bytes)
    state = net.state_dict()
    for key in sorted(state.keys()):
        arr = state[key].detach().cpu().numpy().astype(np.float32)
        name = key.encode()
        buf.write(struct.pack("<H", len(name)))
        buf.write(name)
        buf.write(struct.pack("<B", arr.ndim))
        for dim in arr.shape:
            buf.write(struct.pack("<I", dim))
        raw = arr.tobytes()
        buf.write(struct.pack("<Q", len(raw)))
        buf.write(raw)
    payload = buf.getvalue()
    digest = hashlib.sha256(payload).digest()
    return payload + digest


def deserialize_checkpoint(blob: bytes, movetable_checksum: str | None = None
                           ) -> tuple[PolicyValueNet, dict]:
    if len(blob) < len(CHECKPOINT_MAGIC) + 38:
        raise CheckpointError("checkpoint truncated")
    payload, digest = blob[:-32], blob[-32:]
    if hashlib.sha256(payload).digest() != digest:
        raise CheckpointError("checkpoint checksum mismatch (corrupt file)")
    buf = io.BytesIO(payload)
    if buf.read(len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    version, header_len = struct.unpack("<HI", buf.read(6))
    if version > CHECKPOINT_VERSION:
        raise CheckpointError(
            f"checkpoint version {version} is newer than supported {CHECKPOINT_VERSION}")
    header = json.loads(buf.read(header_len).decode())
    if movetable_checksum is not None \
            and header["movetable_checksum"] != movetable_checksum:
        raise CheckpointError("move table checksum mismatch; refusing to load policy")
    arch = Architecture.from_dict(header["arch"])
    net = PolicyValueNet(arch)
    state = {}
    expected = {k: v for k, v in net.state_dict().items()}
    while True:
        size_bytes = buf.read(2)
        if not size_bytes:
            break
        (name_len,) = struct.unpack("<H", size_bytes)
        name = buf.read(name_len).decode()
        (ndim,) = struct.unpack("<B", buf.read(1))
        shape = tuple(struct.unpack("<I", buf.read(4))[0] for _ in range(ndim))
        (raw_len,) = struct.unpack("<Q", buf.read(8))
        raw = buf.read(raw_len)
        if len(raw) != raw_len:
            raise CheckpointError("checkpoint truncated inside parameter payload")
        arr = np.frombuffer(raw, dtype=np.float32).reshape(shape)
        state[name] = torch.from_numpy(arr.copy())
    if set(state) != set(expected):
        raise CheckpointError("checkpoint parameters do not match architecture")
    net.load_state_dict(state)
    return net, header
