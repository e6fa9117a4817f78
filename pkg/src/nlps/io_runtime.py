"""Run configuration, snapshot files, diagnostics CSV and PPM rendering.

Snapshot layout (version 1, all little-endian)::

    offset  size   content
    0       4      magic b"NLPS"
    4       1      version 0x01
    5       4      u32 n
    9       8      f64 length
    17      8      f64 time
    25      8      u64 step
    33      8 n^2  f64 m, flat index j*n + i
    ...     8 n^2  f64 phi

Total size is ``33 + 16 n^2`` bytes.
"""

from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .diagnostics import CSV_COLUMNS, DiagnosticsRow
from .dynamics import EvaporationModel, EvapKind, PhysicsParams, TimeParams
from .errors import ConfigError, SnapshotFormatError
from .grid import Field, GridSpec, State, make_grid, random_ternary_init, sample_field
from .kernel import (
    KernelGrids,
    KernelSpec,
    default_radius,
    make_bump_kernel,
    sample_kernel_grids,
)

__all__ = [
    "InitConfig",
    "RunConfig",
    "parse_config",
    "load_config",
    "config_to_dict",
    "write_snapshot",
    "read_snapshot",
    "snapshot_name",
    "SNAPSHOT_MAGIC",
    "SNAPSHOT_VERSION",
    "append_diagnostics_row",
    "read_diagnostics_csv",
    "format_double",
    "Palette",
    "field_to_rgb",
    "render_ppm",
    "write_ppm",
    "read_ppm",
]


# ------------------------------------------------------------------ config


INIT_TYPES = ("spin_random", "file", "sinusoid")


@dataclass(frozen=True)
class InitConfig:
    type: str = "spin_random"
    solvent_ratio: float = 0.8
    seed: int = 0
    path: Optional[str] = None
    # sinusoid: m = m_amplitude sin(kx) sin(ky), phi = phi_mean + phi_amplitude cos(kx) cos(ky)
    phi_mean: float = 0.5
    phi_amplitude: float = 0.0
    m_amplitude: float = 0.2
    mode: int = 1


@dataclass(frozen=True)
class RunConfig:
    grid: GridSpec
    kernel_radius: float
    physics: PhysicsParams
    time: TimeParams
    init: InitConfig
    output_dir: Optional[str] = None
    base_dir: Optional[str] = field(default=None, compare=False)

    def kernel_spec(self) -> KernelSpec:
        return make_bump_kernel(self.kernel_radius)

    def kernel_grids(self) -> KernelGrids:
        return sample_kernel_grids(self.kernel_spec(), self.grid)

    def initial_state(self) -> State:
        init = self.init
        if init.type == "spin_random":
            return random_ternary_init(init.solvent_ratio, init.seed, self.grid)
        if init.type == "sinusoid":
            k = 2.0 * math.pi * init.mode / self.grid.length
            m = sample_field(
                lambda x, y: init.m_amplitude * np.sin(k * x) * np.sin(k * y), self.grid
            )
            phi = sample_field(
                lambda x, y: init.phi_mean + init.phi_amplitude * np.cos(k * x) * np.cos(k * y),
                self.grid,
            )
            return State(m, phi, 0.0, 0)
        path = Path(init.path)
        if not path.is_absolute() and self.base_dir is not None:
            path = Path(self.base_dir) / path
        s = read_snapshot(path)
        if s.spec != self.grid:
            raise ConfigError(
                f"init.path snapshot has n={s.spec.n}, L={s.spec.length}; "
                f"config grid is n={self.grid.n}, L={self.grid.length}"
            )
        return State(s.m, s.phi, 0.0, 0)

    def replace(self, **changes) -> "RunConfig":
        from dataclasses import replace

        return replace(self, **changes)


_SCHEMA = {
    "grid": {"n", "length"},
    "kernel": {"radius"},
    "physics": {"beta", "evaporation"},
    "physics.evaporation": {"kind", "alpha"},
    "time": {"dt", "t_end", "snapshot_every", "diagnostics_every"},
    "init": {
        "type",
        "solvent_ratio",
        "seed",
        "path",
        "phi_mean",
        "phi_amplitude",
        "m_amplitude",
        "mode",
    },
    "output": {"dir"},
}
_TOP = {"grid", "kernel", "physics", "time", "init", "output"}
_REQUIRED = {"grid": {"n"}, "physics": {"beta"}, "time": {"t_end"}}


def _section(doc: dict, key: str, where: str) -> dict:
    val = doc.get(key, {})
    if not isinstance(val, dict):
        raise ConfigError(f"'{where}' must be an object")
    allowed = _SCHEMA[where]
    unknown = sorted(set(val) - allowed)
    if unknown:
        raise ConfigError(
            f"unknown key '{where}.{unknown[0]}' (allowed: {', '.join(sorted(allowed))})"
        )
    for req in _REQUIRED.get(where, ()):
        if req not in val:
            raise ConfigError(f"missing required key '{where}.{req}'")
    return val


def _num(sec: dict, key: str, where: str, default=None) -> float:
    val = sec.get(key, default)
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"'{where}.{key}' must be a number, got {val!r}")
    val = float(val)
    if not math.isfinite(val):
        raise ConfigError(f"'{where}.{key}' must be finite")
    return val


def _int(sec: dict, key: str, where: str, default=None) -> int:
    val = sec.get(key, default)
    if isinstance(val, bool) or not isinstance(val, int):
        if isinstance(val, float) and val.is_integer():
            return int(val)
        raise ConfigError(f"'{where}.{key}' must be an integer, got {val!r}")
    return val


def _wrap(where: str, fn, *args, **kwargs):
    """Re-raise module validation errors with the config key prefixed."""
    try:
        return fn(*args, **kwargs)
    except ConfigError as exc:
        msg = str(exc)
        if where not in msg:
            msg = f"{where}: {msg}"
        raise ConfigError(msg) from None


def parse_config(text: bytes | str, base_dir: Optional[str] = None) -> RunConfig:
    """Parse and validate a JSON run configuration.

    Unknown keys anywhere are rejected. Defaults: ``grid.length = 1``,
    ``kernel.radius = 0.05 * length``, ``physics.evaporation = none``,
    ``time.dt = "auto"``, ``time.snapshot_every = 0``,
    ``time.diagnostics_every = 100``, ``init.type = "spin_random"``.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigError(f"config is not valid UTF-8 (byte {exc.start})") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(doc) - _TOP)
    if unknown:
        raise ConfigError(f"unknown key '{unknown[0]}' (allowed: {', '.join(sorted(_TOP))})")
    for req in ("grid", "physics", "time"):
        if req not in doc:
            raise ConfigError(f"missing required section '{req}'")

    g = _section(doc, "grid", "grid")
    n = _int(g, "n", "grid")
    length = _num(g, "length", "grid", 1.0)
    grid = _wrap("grid", make_grid, n, length)

    k = _section(doc, "kernel", "kernel")
    radius = _num(k, "radius", "kernel", default_radius(length))
    _wrap("kernel", make_bump_kernel, radius)
    if not radius < 0.5 * length:
        raise ConfigError(
            f"kernel.radius: kernel radius exceeds half-domain (R={radius}, L/2={0.5 * length})"
        )

    p = _section(doc, "physics", "physics")
    beta = _num(p, "beta", "physics")
    if beta <= 0:
        raise ConfigError(f"physics.beta must be > 0, got {beta}")
    e = _section(p, "evaporation", "physics.evaporation")
    kind = e.get("kind", "none")
    if kind not in ("none", "linear"):
        raise ConfigError(f"physics.evaporation.kind must be 'none' or 'linear', got {kind!r}")
    alpha = _num(e, "alpha", "physics.evaporation", 0.0)
    evap = _wrap("physics.evaporation", EvaporationModel, EvapKind(kind), alpha)
    physics = PhysicsParams(beta, evap)

    t = _section(doc, "time", "time")
    dt = t.get("dt", "auto")
    if dt == "auto":
        dt = None
    else:
        dt = _num(t, "dt", "time")
    time = _wrap(
        "time",
        TimeParams,
        t_end=_num(t, "t_end", "time"),
        dt=dt,
        snapshot_every=_int(t, "snapshot_every", "time", 0),
        diagnostics_every=_int(t, "diagnostics_every", "time", 100),
    )

    i = _section(doc, "init", "init")
    itype = i.get("type", "spin_random")
    if itype not in INIT_TYPES:
        raise ConfigError(f"init.type must be one of {INIT_TYPES}, got {itype!r}")
    seed = _int(i, "seed", "init", 0)
    if not 0 <= seed < 2**64:
        raise ConfigError("init.seed must be an unsigned 64-bit integer")
    s_ratio = _num(i, "solvent_ratio", "init", 0.8)
    if not 0.0 <= s_ratio <= 1.0:
        raise ConfigError(f"init.solvent_ratio must lie in [0, 1], got {s_ratio}")
    path = i.get("path")
    if itype == "file" and not isinstance(path, str):
        raise ConfigError("init.path is required (string) when init.type is 'file'")
    init = InitConfig(
        type=itype,
        solvent_ratio=s_ratio,
        seed=seed,
        path=path,
        phi_mean=_num(i, "phi_mean", "init", 0.5),
        phi_amplitude=_num(i, "phi_amplitude", "init", 0.0),
        m_amplitude=_num(i, "m_amplitude", "init", 0.2),
        mode=_int(i, "mode", "init", 1),
    )
    if itype == "sinusoid":
        if init.phi_amplitude < 0 or init.m_amplitude < 0 or init.mode < 0:
            raise ConfigError("init: sinusoid amplitudes and mode must be >= 0")
        if init.m_amplitude + init.phi_amplitude > init.phi_mean or (
            init.phi_mean + init.phi_amplitude > 1.0
        ):
            raise ConfigError(
                "init: sinusoid data must satisfy 0 <= |m| <= phi <= 1 "
                "(m_amplitude + phi_amplitude <= phi_mean <= 1 - phi_amplitude)"
            )

    o = _section(doc, "output", "output")
    out_dir = o.get("dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError("output.dir must be a string")

    return RunConfig(grid, radius, physics, time, init, out_dir, base_dir)


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_bytes(), base_dir=str(path.parent))


def config_to_dict(cfg: RunConfig) -> dict:
    """Inverse of :func:`parse_config` (up to defaults)."""
    init: dict[str, Any] = {"type": cfg.init.type}
    if cfg.init.type == "spin_random":
        init.update(solvent_ratio=cfg.init.solvent_ratio, seed=cfg.init.seed)
    elif cfg.init.type == "file":
        init["path"] = cfg.init.path
    else:
        init.update(
            phi_mean=cfg.init.phi_mean,
            phi_amplitude=cfg.init.phi_amplitude,
            m_amplitude=cfg.init.m_amplitude,
            mode=cfg.init.mode,
        )
    doc = {
        "grid": {"n": cfg.grid.n, "length": cfg.grid.length},
        "kernel": {"radius": cfg.kernel_radius},
        "physics": {
            "beta": cfg.physics.beta,
            "evaporation": {
                "kind": cfg.physics.evap.kind.value,
                "alpha": cfg.physics.evap.alpha,
            },
        },
        "time": {
            "dt": "auto" if cfg.time.dt is None else cfg.time.dt,
            "t_end": cfg.time.t_end,
            "snapshot_every": cfg.time.snapshot_every,
            "diagnostics_every": cfg.time.diagnostics_every,
        },
        "init": init,
    }
    if cfg.output_dir is not None:
        doc["output"] = {"dir": cfg.output_dir}
    return doc


# ---------------------------------------------------------------- snapshot

SNAPSHOT_MAGIC = b"NLPS"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sBIddQ")


def snapshot_name(step: int) -> str:
    return f"snap_{step:08d}.nlps"


def write_snapshot(s: State, path) -> None:
    spec = s.spec
    header = _HEADER.pack(
        SNAPSHOT_MAGIC, SNAPSHOT_VERSION, spec.n, spec.length, float(s.time), int(s.step)
    )
    payload = (
        np.ascontiguousarray(s.m.data, dtype="<f8").tobytes()
        + np.ascontiguousarray(s.phi.data, dtype="<f8").tobytes()
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_snapshot(path) -> State:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4:
        raise SnapshotFormatError("truncated magic", len(raw))
    if raw[:4] != SNAPSHOT_MAGIC:
        raise SnapshotFormatError(f"bad magic {raw[:4]!r}", 0)
    if len(raw) < 5:
        raise SnapshotFormatError("truncated version byte", len(raw))
    if raw[4] != SNAPSHOT_VERSION:
        raise SnapshotFormatError(f"unsupported version {raw[4]}", 4)
    if len(raw) < _HEADER.size:
        raise SnapshotFormatError("truncated header", len(raw))
    _, _, n, length, time, step = _HEADER.unpack_from(raw, 0)
    if n < 4:
        raise SnapshotFormatError(f"invalid grid size n={n}", 5)
    if not (math.isfinite(length) and length > 0):
        raise SnapshotFormatError(f"invalid domain length {length}", 9)
    if not (math.isfinite(time) and time >= 0):
        raise SnapshotFormatError(f"invalid time {time}", 17)
    need = _HEADER.size + 16 * n * n
    if len(raw) < need:
        raise SnapshotFormatError(f"truncated payload: expected {need} bytes", len(raw))
    if len(raw) > need:
        raise SnapshotFormatError(f"trailing data after {need} bytes", need)
    off = _HEADER.size
    m = np.frombuffer(raw, dtype="<f8", count=n * n, offset=off)
    phi = np.frombuffer(raw, dtype="<f8", count=n * n, offset=off + 8 * n * n)
    spec = GridSpec(n=n, length=length)
    return State(Field(spec, m.astype(np.float64)), Field(spec, phi.astype(np.float64)), time, step)


# --------------------------------------------------------------------- csv


def format_double(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def append_diagnostics_row(row: DiagnosticsRow, path) -> None:
    path = Path(path)
    new = not path.exists() or path.stat().st_size == 0
    with open(path, "a", newline="") as fh:
        if new:
            fh.write(",".join(CSV_COLUMNS) + "\n")
        fh.write(",".join(format_double(v) for v in row.values()) + "\n")


def read_diagnostics_csv(path) -> list[DiagnosticsRow]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected diagnostics header: {header}")
        for rec in reader:
            vals = []
            for name, tok in zip(CSV_COLUMNS, rec):
                if name == "step":
                    vals.append(int(tok))
                else:
                    vals.append(None if tok == "" else float(tok))
            rows.append(DiagnosticsRow(*vals))
    return rows


# --------------------------------------------------------------------- ppm


class Palette(str, Enum):
    SPIN = "spin"
    CONCENTRATION = "concentration"


def _channel(t: np.ndarray) -> np.ndarray:
    return np.floor(255.0 * t + 0.5).astype(np.uint8)


def field_to_rgb(data: np.ndarray, palette: Palette) -> np.ndarray:
    """Map a field to ``(n, n, 3)`` uint8 colors.

    SPIN: red at 0, blue at +1, yellow at -1. CONCENTRATION: red at 0, blue at 1.
    Values outside the palette domain are clamped.
    """
    palette = Palette(palette)
    a = np.asarray(data, dtype=np.float64)
    rgb = np.zeros(a.shape + (3,), dtype=np.uint8)
    if palette is Palette.SPIN:
        a = np.clip(a, -1.0, 1.0)
        pos = np.clip(a, 0.0, 1.0)
        neg = np.clip(-a, 0.0, 1.0)
        is_pos = a >= 0.0
        rgb[..., 0] = np.where(is_pos, _channel(1.0 - pos), 255)
        rgb[..., 1] = np.where(is_pos, 0, _channel(neg))
        rgb[..., 2] = np.where(is_pos, _channel(pos), 0)
    else:
        a = np.clip(a, 0.0, 1.0)
        rgb[..., 0] = _channel(1.0 - a)
        rgb[..., 2] = _channel(a)
    return rgb


def write_ppm(path, rgb: np.ndarray) -> None:
    h, w, _ = rgb.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(rgb, dtype=np.uint8).tobytes())


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    parts = raw.split(b"\n", 3)
    if parts[0] != b"P6":
        raise ValueError("not a binary PPM")
    w, h = (int(v) for v in parts[1].split())
    if int(parts[2]) != 255:
        raise ValueError("unsupported maxval")
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w, 3)


def render_ppm(f: Field, palette: Palette, path) -> None:
    """Binary PPM with one pixel per cell; data row ``j = 0`` is the top image row."""
    write_ppm(path, field_to_rgb(f.data, palette))
