"""JSON model files.

Layout (``format_version`` 1)::

    {
      "format": "engine-testbench-mlp",
      "format_version": 1,
      "layer_sizes": [...],
      "hidden_activation": "tanh",
      "output_activation": "identity",
      "input_norm": {"shift": [...], "scale": [...]},
      "output_norm": {"shift": [...], "scale": [...]},
      "layers": [{"weights": "<base64 <f8>", "shape": [n_in, n_out], "biases": "<base64 <f8>"}, ...],
      "metadata": {...}
    }

Weight blobs are raw little-endian float64 bytes in row-major order.
"""

import base64
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from .mlp import MlpParams

FORMAT = "engine-testbench-mlp"
FORMAT_VERSION = 1


def _encode(a):
    return base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode("ascii")


def _decode(s, shape):
    return np.frombuffer(base64.b64decode(s), dtype="<f8").astype(float).reshape(shape)


def model_to_dict(params, metadata=None):
    return {
        "format": FORMAT,
        "format_version": FORMAT_VERSION,
        "layer_sizes": list(params.layer_sizes),
        "hidden_activation": params.hidden_activation,
        "output_activation": params.output_activation,
        "input_norm": {"shift": params.input_shift.tolist(), "scale": params.input_scale.tolist()},
        "output_norm": {"shift": params.output_shift.tolist(), "scale": params.output_scale.tolist()},
        "layers": [
            {"shape": list(w.shape), "weights": _encode(w), "biases": _encode(b)}
            for w, b in zip(params.weights, params.biases)
        ],
        "metadata": metadata or {},
    }


def model_from_dict(doc):
    if doc.get("format") != FORMAT:
        raise ConfigError(f"not a model file (format={doc.get('format')!r})")
    if doc.get("format_version") != FORMAT_VERSION:
        raise ConfigError(f"unsupported model format_version {doc.get('format_version')!r}")
    ws, bs = [], []
    for layer in doc["layers"]:
        shape = tuple(layer["shape"])
        ws.append(_decode(layer["weights"], shape))
        bs.append(_decode(layer["biases"], (shape[1],)))
    params = MlpParams(
        tuple(doc["layer_sizes"]), tuple(ws), tuple(bs),
        doc["hidden_activation"], doc["output_activation"],
        np.array(doc["input_norm"]["shift"]), np.array(doc["input_norm"]["scale"]),
        np.array(doc["output_norm"]["shift"]), np.array(doc["output_norm"]["scale"]),
    )
    return params, doc.get("metadata", {})


def write_json_atomic(path, obj):
    """Write deterministic JSON (sorted keys) via a temporary file and rename."""
    path = Path(path)
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_model(params, path, metadata=None):
    write_json_atomic(path, model_to_dict(params, metadata))


def load_model(path):
    """Returns ``(params, metadata)``."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read model file {path}: {exc}") from exc
    return model_from_dict(doc)
