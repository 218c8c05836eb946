"""Versioned binary checkpoints with bit-exact round-trip.

Layout: an 8-byte magic+version header, a little-endian uint32 manifest
length, a JSON manifest (config hash, step counters, RNG and collector
state, array table), then raw little-endian float64 array payloads. Every
float64 travels as raw bytes, so load(save(x)) == x exactly and resumed
training continues bit-for-bit.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .policies import PolicySet

MAGIC = b"SATCKPT\x01"
FORMAT_VERSION = 1


class CheckpointError(RuntimeError):
    """Unreadable, corrupt, or incompatible checkpoint file."""


def _array_entries(policies: PolicySet) -> list[tuple[str, np.ndarray]]:
    entries = []
    for i, actor in enumerate(policies.actors):
        entries.append((f"actor{i}.params", actor.params))
        entries.append((f"actor{i}.adam_m", actor.opt.m))
        entries.append((f"actor{i}.adam_v", actor.opt.v))
    for i, critic in enumerate(policies.critics):
        entries.append((f"critic{i}.params", critic.params))
        entries.append((f"critic{i}.adam_m", critic.opt.m))
        entries.append((f"critic{i}.adam_v", critic.opt.v))
    return entries


def save_checkpoint(
    path: str | Path,
    policies: PolicySet,
    config_hash: str,
    global_step: int,
    update_idx: int,
    collector_state: dict | None = None,
    extra: dict | None = None,
) -> None:
    entries = _array_entries(policies)
    table = []
    offset = 0
    payload = bytearray()
    for name, arr in entries:
        data = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        table.append({"name": name, "shape": list(arr.shape), "offset": offset})
        payload.extend(data)
        offset += len(data)
    manifest = {
        "format_version": FORMAT_VERSION,
        "config_hash": config_hash,
        "global_step": global_step,
        "update_idx": update_idx,
        "n_agents": policies.n_agents,
        "shared_critic": policies.shared_critic,
        "adam_t": {
            **{f"actor{i}": a.opt.t for i, a in enumerate(policies.actors)},
            **{f"critic{i}": c.opt.t for i, c in enumerate(policies.critics)},
        },
        "arrays": table,
        "collector": collector_state,
        "extra": extra or {},
    }
    blob = json.dumps(manifest).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(bytes(payload))


@dataclass
class Checkpoint:
    manifest: dict
    arrays: dict[str, np.ndarray]

    @property
    def config_hash(self) -> str:
        return self.manifest["config_hash"]

    @property
    def global_step(self) -> int:
        return self.manifest["global_step"]

    @property
    def update_idx(self) -> int:
        return self.manifest["update_idx"]

    @property
    def collector_state(self) -> dict | None:
        return self.manifest.get("collector")


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < len(MAGIC) + 4 or raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file (bad magic)")
    manifest_len = struct.unpack("<I", raw[len(MAGIC): len(MAGIC) + 4])[0]
    start = len(MAGIC) + 4
    try:
        manifest = json.loads(raw[start: start + manifest_len].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt manifest ({exc})") from None
    if manifest.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"{path}: format version {manifest.get('format_version')} != {FORMAT_VERSION}"
        )
    payload = raw[start + manifest_len:]
    arrays = {}
    for entry in manifest["arrays"]:
        shape = tuple(entry["shape"])
        n = int(np.prod(shape)) if shape else 1
        begin = entry["offset"]
        end = begin + n * 8
        if end > len(payload):
            raise CheckpointError(f"{path}: truncated payload for {entry['name']}")
        arrays[entry["name"]] = np.frombuffer(
            payload[begin:end], dtype="<f8"
        ).astype(np.float64).reshape(shape)
    return Checkpoint(manifest=manifest, arrays=arrays)


def restore_policies(checkpoint: Checkpoint, policies: PolicySet) -> None:
    """Load parameters and optimizer state into an already-built PolicySet."""
    manifest = checkpoint.manifest
    if manifest["n_agents"] != policies.n_agents or (
        manifest["shared_critic"] != policies.shared_critic
    ):
        raise CheckpointError("checkpoint/policy structure mismatch")
    for i, actor in enumerate(policies.actors):
        actor.params = checkpoint.arrays[f"actor{i}.params"].copy()
        actor.opt.m = checkpoint.arrays[f"actor{i}.adam_m"].copy()
        actor.opt.v = checkpoint.arrays[f"actor{i}.adam_v"].copy()
        actor.opt.t = manifest["adam_t"][f"actor{i}"]
    for i, critic in enumerate(policies.critics):
        critic.params = checkpoint.arrays[f"critic{i}.params"].copy()
        critic.opt.m = checkpoint.arrays[f"critic{i}.adam_m"].copy()
        critic.opt.v = checkpoint.arrays[f"critic{i}.adam_v"].copy()
        critic.opt.t = manifest["adam_t"][f"critic{i}"]
