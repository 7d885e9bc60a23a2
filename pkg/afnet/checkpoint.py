# Model checkpoint - single JSON file with base64 float32 blobs
import base64
from pathlib import Path
from typing import Dict

import numpy as np

from afnet.errors import ValidationError
from afnet.layers import LayerSpec
from afnet.nn import Model, build_model
from tools.atomic_io import load_json, write_json_atomic

FORMAT_VERSION = 1


def _encode(array: np.ndarray) -> Dict:
    data = np.ascontiguousarray(array, dtype="<f4").tobytes()
    return {"shape": list(array.shape), "data": base64.b64encode(data).decode("ascii")}


def _decode(blob: Dict) -> np.ndarray:
    raw = base64.b64decode(blob["data"])
    array = np.frombuffer(raw, dtype="<f4").astype(np.float32)
    shape = tuple(blob["shape"])
    if array.size != int(np.prod(shape)):
        raise ValidationError(f"blob holds {array.size} values, shape {list(shape)} needs more")
    return array.reshape(shape)


def model_to_dict(model: Model) -> Dict:
    return {
        "format": FORMAT_VERSION,
        "rng_seed": model.rng_seed,
        "input_shape": list(model.input_shape),
        "n_classes": model.n_classes,
        "epochs_trained": model.epochs_trained,
        "layers": [spec.to_dict() for spec in model.layers],
        "params": [{name: _encode(v) for name, v in p.items()} for p in model.params],
        "state": [{name: _encode(v) for name, v in s.items()} for s in model.state],
    }


def model_from_dict(data: Dict) -> Model:
    if data.get("format") != FORMAT_VERSION:
        raise ValidationError(
            f"unsupported checkpoint format {data.get('format')!r}, expected {FORMAT_VERSION}"
        )

    specs = [LayerSpec.from_dict(d) for d in data["layers"]]
    model = build_model(specs, data["input_shape"], data["n_classes"], data["rng_seed"])

    for module, params, state in zip(model.modules, data["params"], data["state"]):
        for store, saved in ((module.params, params), (module.state, state)):
            if set(saved) != set(store):
                raise ValidationError(
                    f"layer {module.index}: saved tensors {sorted(saved)} != expected {sorted(store)}"
                )
            for name, blob in saved.items():
                value = _decode(blob)
                if value.shape != store[name].shape:
                    raise ValidationError(
                        f"layer {module.index} '{name}': shape {list(value.shape)} != {list(store[name].shape)}"
                    )
                store[name] = value
        module.zero_grads()

    model.epochs_trained = data.get("epochs_trained", 0)
    return model


def save_model(model: Model, path) -> Path:
    return write_json_atomic(path, model_to_dict(model))


def load_model(path) -> Model:
    return model_from_dict(load_json(path))
