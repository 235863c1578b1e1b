"""Checkpoint files: a JSON manifest line followed by one flat tensor per line.

Round trips are exact; floats go through repr so load(save(p)) == p bitwise.
"""

from __future__ import annotations

import json
import os

import numpy as np

from tagflow.errors import IoFailure, ParseFailure, VersionMismatch
from tagflow.nn.mlp import MlpSpec, PolicyParams

CKPT_VERSION = 1


def _tensor_groups(params: PolicyParams):
    yield "w", params.weights
    yield "b", params.biases
    yield "ema_w", params.ema_weights
    yield "ema_b", params.ema_biases
    yield "m_w", params.m_w
    yield "v_w", params.v_w
    yield "m_b", params.m_b
    yield "v_b", params.v_b


def save_checkpoint(params: PolicyParams, path, meta: dict | None = None) -> None:
    """Write params plus a free-form metadata dict (schedule, encode dims...)."""
    header = {
        "version": CKPT_VERSION,
        "widths": list(params.spec.widths),
        "activations": list(params.spec.activations),
        "step": params.step,
        "meta": meta or {},
    }
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(header) + "\n")
            for group, tensors in _tensor_groups(params):
                for i, tensor in enumerate(tensors):
                    record = {
                        "name": f"{group}{i}",
                        "shape": list(tensor.shape),
                        "data": tensor.ravel().tolist(),
                    }
                    fh.write(json.dumps(record) + "\n")
            if params.input_scale is not None:
                record = {
                    "name": "input_scale",
                    "shape": list(params.input_scale.shape),
                    "data": params.input_scale.tolist(),
                }
                fh.write(json.dumps(record) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write checkpoint to {path}: {exc}") from exc


def load_checkpoint(path) -> tuple[PolicyParams, dict]:
    if not os.path.exists(path):
        raise IoFailure(f"checkpoint not found: {path}")
    tensors: dict[str, np.ndarray] = {}
    header = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseFailure(lineno, f"invalid JSON: {exc}") from exc
            if lineno == 1:
                if data.get("version") != CKPT_VERSION:
                    raise VersionMismatch(
                        f"checkpoint version {data.get('version')!r}, expected {CKPT_VERSION}"
                    )
                header = data
                continue
            try:
                tensors[data["name"]] = np.asarray(data["data"], dtype=float).reshape(data["shape"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseFailure(lineno, f"bad tensor record: {exc}") from exc
    if header is None:
        raise ParseFailure(1, "missing checkpoint header")

    spec = MlpSpec(tuple(header["widths"]), tuple(header["activations"]))
    n = spec.n_layers

    def group(prefix: str) -> list[np.ndarray]:
        try:
            return [tensors[f"{prefix}{i}"] for i in range(n)]
        except KeyError as exc:
            raise ParseFailure(2, f"checkpoint missing tensor {exc}") from exc

    params = PolicyParams(
        spec,
        group("w"),
        group("b"),
        group("ema_w"),
        group("ema_b"),
        group("m_w"),
        group("v_w"),
        group("m_b"),
        group("v_b"),
        step=header["step"],
        input_scale=tensors.get("input_scale"),
    )
    return params, header.get("meta", {})
