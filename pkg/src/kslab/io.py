"""CSV and manifest output, and strict parsing of JSON run configs."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import types
import typing
from pathlib import Path

import numpy as np

from .errors import ConfigError

SCHEMA_VERSION = 1


def fmt(v) -> str:
    """17 significant digits for reals, plain text otherwise."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.write_text(csv_text(header, rows), encoding="utf-8", newline="\n")
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return lines[0].split(","), [ln.split(",") for ln in lines[1:] if ln]


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(path, manifest: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_plain(manifest), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


# --- domain CSVs -------------------------------------------------------------


def window_rows(w):
    return zip(w.sites, w.values)


def convergent_rows(c):
    return [(k, a, p, q) for k, (a, p, q) in enumerate(c.entries)]


def read_convergents(path):
    """Rows of a ``k,a_k,p_k,q_k`` table as integer tuples."""
    header, rows = read_csv(path)
    if header != ["k", "a_k", "p_k", "q_k"]:
        raise ConfigError(f"unexpected header {header}", str(path))
    return [tuple(int(v) for v in r) for r in rows]


# --- configs -----------------------------------------------------------------


def parse(cls, data, path: str = ""):
    """Build dataclass ``cls`` from a JSON object, rejecting unknown and missing keys.

    Errors carry the dotted key path.
    """
    if not isinstance(data, dict):
        raise ConfigError(f"expected an object, got {type(data).__name__}", path or "<root>")
    hints = typing.get_type_hints(cls)
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(fields))
    if unknown:
        raise ConfigError(f"unknown key '{unknown[0]}'", _join(path, unknown[0]))
    kwargs = {}
    for name, f in fields.items():
        p = _join(path, name)
        if name not in data:
            if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
                raise ConfigError(f"missing required key '{name}'", p)
            continue
        kwargs[name] = _coerce(hints[name], data[name], p)
    obj = cls(**kwargs)
    check = getattr(obj, "check", None)
    if check is not None:
        check(path)
    return obj


def _join(path, key):
    return f"{path}.{key}" if path else str(key)


def _coerce(tp, v, path):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin is typing.Union or origin is types.UnionType:
        if v is None and type(None) in args:
            return None
        errors = []
        for a in args:
            if a is type(None):
                continue
            try:
                return _coerce(a, v, path)
            except ConfigError as e:
                errors.append(e)
        raise errors[0] if errors else ConfigError("null not allowed", path)
    if dataclasses.is_dataclass(tp):
        return parse(tp, v, path)
    if origin in (list, tuple):
        if not isinstance(v, list):
            raise ConfigError("expected a list", path)
        inner = args[0] if args else typing.Any
        return [_coerce(inner, x, f"{path}[{i}]") for i, x in enumerate(v)]
    if origin is dict:
        if not isinstance(v, dict):
            raise ConfigError("expected an object", path)
        return dict(v)
    if tp is typing.Any:
        return v
    if tp is bool:
        if not isinstance(v, bool):
            raise ConfigError("expected true/false", path)
        return v
    if tp is int:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError("expected an integer", path)
        return v
    if tp is float:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError("expected a number", path)
        return float(v)
    if tp is str:
        if not isinstance(v, str):
            raise ConfigError("expected a string", path)
        return v
    return v


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError("config file not found", str(path)) from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e}", str(path)) from None
