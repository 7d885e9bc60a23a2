# Atomic file output - reports are never left half-written
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Union

PathLike = Union[str, Path]


def write_text_atomic(path: PathLike, text: str, encoding: str = "utf-8") -> Path:
    """Write to a temp file in the same directory, then rename over ``path``"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding=encoding, newline="") as f:
            f.write(text)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.remove(tmp_name)
        raise
    return path


def write_json_atomic(path: PathLike, data: Any) -> Path:
    """JSON with stable key order so identical data gives identical bytes"""
    text = json.dumps(data, indent=2, ensure_ascii=False, sort_keys=True) + "\n"
    return write_text_atomic(path, text)


def load_json(path: PathLike) -> Any:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)
