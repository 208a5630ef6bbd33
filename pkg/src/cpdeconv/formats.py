"""Binary cube/factor/kernel files, flat config files, CSV/JSON reports.

All binary files are little-endian. Layouts:

    cube    "HSC1" | p q n : u32 | dtype : u8 (2 = f64) | p*q*n f64, slice-major
    factors "HSF1" | p q n r : u32 | A (p*r) | B (q*r) | C (n*r), f64 column-major
    kernels "HSK1" | p q n : u32 | n centered P x Q planes, f64 row-major

Writers go through a temporary file in the target directory followed by an
atomic rename, so a failed write never leaves a partial file behind.
"""

from __future__ import annotations

import csv
import io
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .fourier_conv import KernelBank
from .objective import RegWeights
from .palm import SolveReport, SolverConfig
from .tensor_model import CpdFactors, HsiCube

CUBE_MAGIC = b"HSC1"
FACTOR_MAGIC = b"HSF1"
KERNEL_MAGIC = b"HSK1"
DTYPE_F64 = 2
F64 = np.dtype("<f8")

CONFIG_KEYS = (
    "rank", "lambda1", "lambda2", "lambda3", "lambda_a", "lambda_b",
    "beta", "eta", "epsilon", "max_iter", "max_backtrack", "seed", "init_scale",
)
_INT_KEYS = {"rank", "max_iter", "max_backtrack", "seed"}


class FormatError(OSError):
    """File exists but does not follow the expected layout."""


class ConfigError(ValueError):
    pass


def atomic_write(path, data: bytes):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def _read(path) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _payload(raw: bytes, offset: int, count: int, path) -> np.ndarray:
    need = offset + 8 * count
    if len(raw) != need:
        raise FormatError(f"{path}: expected {need} bytes, found {len(raw)}")
    return np.frombuffer(raw, dtype=F64, count=count, offset=offset).astype(np.float64)


def _check_magic(raw: bytes, magic: bytes, path):
    if raw[:4] != magic:
        raise FormatError(f"{path}: bad magic {raw[:4]!r}, expected {magic!r}")


def cube_to_bytes(cube: HsiCube) -> bytes:
    head = CUBE_MAGIC + struct.pack("<IIIB", cube.p, cube.q, cube.n, DTYPE_F64)
    return head + cube.data.astype(F64).tobytes()


def write_cube(path, cube: HsiCube):
    atomic_write(path, cube_to_bytes(cube))


def read_cube(path) -> HsiCube:
    raw = _read(path)
    if len(raw) < 17:
        raise FormatError(f"{path}: too short for a cube header")
    _check_magic(raw, CUBE_MAGIC, path)
    p, q, n, dtype = struct.unpack_from("<IIIB", raw, 4)
    if dtype != DTYPE_F64:
        raise FormatError(f"{path}: unsupported dtype code {dtype}")
    return HsiCube(_payload(raw, 17, p * q * n, path).reshape(n, p, q))


def factors_to_bytes(f: CpdFactors) -> bytes:
    head = FACTOR_MAGIC + struct.pack("<IIII", f.p, f.q, f.n, f.r)
    return head + b"".join(m.astype(F64).tobytes(order="F") for m in (f.a, f.b, f.c))


def write_factors(path, f: CpdFactors):
    atomic_write(path, factors_to_bytes(f))


def read_factors(path) -> CpdFactors:
    raw = _read(path)
    if len(raw) < 20:
        raise FormatError(f"{path}: too short for a factor header")
    _check_magic(raw, FACTOR_MAGIC, path)
    p, q, n, r = struct.unpack_from("<IIII", raw, 4)
    flat = _payload(raw, 20, (p + q + n) * r, path)
    a = flat[: p * r].reshape((p, r), order="F")
    b = flat[p * r : (p + q) * r].reshape((q, r), order="F")
    c = flat[(p + q) * r :].reshape((n, r), order="F")
    return CpdFactors(a, b, c)


def kernels_to_bytes(kb: KernelBank) -> bytes:
    head = KERNEL_MAGIC + struct.pack("<III", kb.p, kb.q, kb.n)
    return head + kb.kernels.astype(F64).tobytes()


def write_kernels(path, kb: KernelBank):
    atomic_write(path, kernels_to_bytes(kb))


def read_kernels(path) -> KernelBank:
    raw = _read(path)
    if len(raw) < 16:
        raise FormatError(f"{path}: too short for a kernel header")
    _check_magic(raw, KERNEL_MAGIC, path)
    p, q, n = struct.unpack_from("<III", raw, 4)
    return KernelBank(_payload(raw, 16, p * q * n, path).reshape(n, p, q))


def parse_config(text: str) -> SolverConfig:
    """Parse ``key = value`` lines (``#`` comments). Every key in CONFIG_KEYS is required.

    ``init_scale = auto`` selects the data-driven default.
    """
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate config key {key!r}")
        values[key] = val
    for key in CONFIG_KEYS:
        if key not in values:
            raise ConfigError(f"missing config key {key!r}")

    parsed = {}
    for key, val in values.items():
        try:
            if key == "init_scale" and val.lower() == "auto":
                parsed[key] = None
            elif key in _INT_KEYS:
                parsed[key] = int(val)
            else:
                parsed[key] = float(val)
        except ValueError:
            raise ConfigError(f"bad value for {key!r}: {val!r}") from None
    reg = RegWeights(*(parsed.pop(k) for k in ("lambda1", "lambda2", "lambda3", "lambda_a", "lambda_b")))
    return SolverConfig(reg=reg, **parsed)


def read_config(path) -> SolverConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def format_config(cfg: SolverConfig) -> str:
    r = cfg.reg
    rows = [
        ("rank", cfg.rank), ("lambda1", r.lambda1), ("lambda2", r.lambda2), ("lambda3", r.lambda3),
        ("lambda_a", r.lambda_a), ("lambda_b", r.lambda_b), ("beta", cfg.beta), ("eta", cfg.eta),
        ("epsilon", cfg.epsilon), ("max_iter", cfg.max_iter), ("max_backtrack", cfg.max_backtrack),
        ("seed", cfg.seed), ("init_scale", "auto" if cfg.init_scale is None else repr(cfg.init_scale)),
    ]
    return "".join(f"{k} = {v!r}\n" if isinstance(v, float) else f"{k} = {v}\n" for k, v in rows)


REPORT_COLUMNS = ("iter", "objective", "c", "d", "e", "backtracks_a", "backtracks_b", "backtracks_c")


def report_to_csv(report: SolveReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for k, (obj, steps, counts) in enumerate(
        zip(report.objective_trace, report.step_trace, report.backtrack_counts), 1
    ):
        w.writerow([k, repr(float(obj)), *(repr(float(s)) for s in steps), *counts])
    return buf.getvalue()


def write_report(path, report: SolveReport):
    atomic_write(path, report_to_csv(report).encode())


def write_json(path, obj):
    atomic_write(path, (json.dumps(obj, indent=2) + "\n").encode())
