"""Versioned binary container for trained models.

Layout: magic "CSTK", format version u16, length-prefixed JSON metadata,
then named little-endian float64 arrays with explicit shapes. Everything is
little-endian regardless of platform.
"""
from __future__ import annotations

import io
import json
import struct
from pathlib import Path

import numpy as np

from cogspeech.errors import ParseError, ValidationError
from cogspeech.nn.cnn import CnnModel, CnnSpec, ConvTrunk
from cogspeech.nn.fusion import FusionHead, FusionModel, FusionSpec
from cogspeech.nn.logistic import LogisticModel

MAGIC = b"CSTK"
FORMAT_VERSION = 1


def write_container(buf, meta: dict, arrays: list[tuple[str, np.ndarray]]) -> None:
    buf.write(MAGIC)
    buf.write(struct.pack("<H", FORMAT_VERSION))
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    buf.write(struct.pack("<I", len(meta_bytes)))
    buf.write(meta_bytes)
    buf.write(struct.pack("<I", len(arrays)))
    for name, array in arrays:
        name_bytes = name.encode("utf-8")
        buf.write(struct.pack("<H", len(name_bytes)))
        buf.write(name_bytes)
        array = np.ascontiguousarray(array, dtype="<f8")
        buf.write(struct.pack("<B", array.ndim))
        for dim in array.shape:
            buf.write(struct.pack("<I", dim))
        buf.write(array.tobytes())


def read_container(buf) -> tuple[dict, dict[str, np.ndarray]]:
    def take(n: int) -> bytes:
        chunk = buf.read(n)
        if len(chunk) != n:
            raise ParseError("model container truncated")
        return chunk

    if take(4) != MAGIC:
        raise ParseError("not a model container (bad magic)")
    (version,) = struct.unpack("<H", take(2))
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported container version {version}")
    (meta_len,) = struct.unpack("<I", take(4))
    meta = json.loads(take(meta_len).decode("utf-8"))
    (n_arrays,) = struct.unpack("<I", take(4))
    arrays: dict[str, np.ndarray] = {}
    for _ in range(n_arrays):
        (name_len,) = struct.unpack("<H", take(2))
        name = take(name_len).decode("utf-8")
        (ndim,) = struct.unpack("<B", take(1))
        shape = tuple(struct.unpack("<I", take(4))[0] for _ in range(ndim))
        count = int(np.prod(shape)) if shape else 1
        data = np.frombuffer(take(count * 8), dtype="<f8").reshape(shape)
        arrays[name] = data.astype(np.float64).copy()
    return meta, arrays


def _save(path: Path, meta: dict, arrays: list[tuple[str, np.ndarray]]) -> None:
    buf = io.BytesIO()
    write_container(buf, meta, arrays)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(buf.getvalue())


def save_model(path, model) -> None:
    path = Path(path)
    if isinstance(model, CnnModel):
        spec = model.spec
        meta = {
            "kind": "cnn",
            "spec": {
                "input_dim": spec.input_dim,
                "filter_heights": list(spec.filter_heights),
                "filters_per_height": spec.filters_per_height,
                "dropout_rate": spec.dropout_rate,
                "output_classes": spec.output_classes,
            },
        }
        arrays = _trunk_arrays(model.trunk) + [
            ("dense_w", model.dense_w),
            ("dense_b", model.dense_b),
        ]
        _save(path, meta, arrays)
    elif isinstance(model, LogisticModel):
        meta = {"kind": "logistic", "spec": {"l2": model.l2}}
        _save(path, meta, [("weights", model.weights), ("bias", np.array([model.bias]))])
    elif isinstance(model, FusionModel):
        cnn = model.spec.cnn
        meta = {
            "kind": "fusion",
            "spec": {
                "cnn": {
                    "input_dim": cnn.input_dim,
                    "filter_heights": list(cnn.filter_heights),
                    "filters_per_height": cnn.filters_per_height,
                    "dropout_rate": cnn.dropout_rate,
                    "output_classes": cnn.output_classes,
                },
                "embed_dim": model.spec.embed_dim,
                "hidden_units": model.spec.hidden_units,
            },
        }
        arrays = _trunk_arrays(model.trunk) + [
            ("head_w1", model.head.w1),
            ("head_b1", model.head.b1),
            ("head_w2", model.head.w2),
            ("head_b2", model.head.b2),
        ]
        _save(path, meta, arrays)
    else:
        raise ValidationError(f"cannot serialize model of type {type(model).__name__}")


def _trunk_arrays(trunk: ConvTrunk) -> list[tuple[str, np.ndarray]]:
    out = []
    for h, f, b in zip(trunk.heights, trunk.filters, trunk.biases):
        out.append((f"filters_h{h}", f))
        out.append((f"biases_h{h}", b))
    return out


def _load_trunk(heights, arrays) -> ConvTrunk:
    return ConvTrunk(
        heights=tuple(heights),
        filters=[arrays[f"filters_h{h}"] for h in heights],
        biases=[arrays[f"biases_h{h}"] for h in heights],
    )


def load_model(path):
    with open(path, "rb") as fp:
        meta, arrays = read_container(fp)
    kind = meta.get("kind")
    spec = meta.get("spec", {})
    if kind == "cnn":
        cnn_spec = CnnSpec(
            input_dim=spec["input_dim"],
            filter_heights=tuple(spec["filter_heights"]),
            filters_per_height=spec["filters_per_height"],
            dropout_rate=spec["dropout_rate"],
            output_classes=spec["output_classes"],
        )
        return CnnModel(
            spec=cnn_spec,
            trunk=_load_trunk(cnn_spec.filter_heights, arrays),
            dense_w=arrays["dense_w"],
            dense_b=arrays["dense_b"],
        )
    if kind == "logistic":
        return LogisticModel(
            weights=arrays["weights"], bias=float(arrays["bias"][0]), l2=spec["l2"]
        )
    if kind == "fusion":
        cnn = spec["cnn"]
        fusion_spec = FusionSpec(
            cnn=CnnSpec(
                input_dim=cnn["input_dim"],
                filter_heights=tuple(cnn["filter_heights"]),
                filters_per_height=cnn["filters_per_height"],
                dropout_rate=cnn["dropout_rate"],
                output_classes=cnn["output_classes"],
            ),
            embed_dim=spec["embed_dim"],
            hidden_units=spec["hidden_units"],
        )
        head = FusionHead(
            w1=arrays["head_w1"], b1=arrays["head_b1"],
            w2=arrays["head_w2"], b2=arrays["head_b2"],
        )
        return FusionModel(
            spec=fusion_spec,
            trunk=_load_trunk(fusion_spec.cnn.filter_heights, arrays),
            head=head,
        )
    raise ParseError(f"unknown model kind {kind!r}")
