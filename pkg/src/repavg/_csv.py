from __future__ import annotations

import io
import sys
from contextlib import contextmanager


def fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if x is None:
        return ""
    return f"{float(x):.17g}"


def meta_line(**fields) -> str:
    from . import __version__
    from .streams import RNG_ALGORITHM

    fields.setdefault("rng", RNG_ALGORITHM)
    fields.setdefault("version", __version__)
    body = " ".join(f"{k}={_meta_value(v)}" for k, v in fields.items())
    return f"# params: {body}\n"


def _meta_value(v) -> str:
    if isinstance(v, (list, tuple)):
        return ",".join(_meta_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v).replace(" ", "_")


def render(meta: str, header: str, rows) -> str:
    buf = io.StringIO()
    buf.write(meta)
    buf.write(header + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


@contextmanager
def open_output(path):
    if path is None or path == "-":
        yield sys.stdout
    elif hasattr(path, "write"):
        yield path
    else:
        with open(path, "w", newline="") as fh:
            yield fh
