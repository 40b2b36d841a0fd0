"""Run configuration files and output serialization.

Config files are UTF-8 ``key = value`` lines; ``#`` starts a comment and
vectors are comma-separated triples::

    # inertia, either I1..I3 (I1 > I2 > I3 > 0) or a1..a3
    I1 = 1
    I2 = 0.5
    I3 = 0.3333333333333333
    ctrl_a = 1
    ctrl_b = 1
    ctrl_c = 1
    epsilon = 0.5
    x0 = 1, 1, 1
    rtol = 1e-10        # optional integrator keys fall back to defaults

Unknown or repeated keys are errors.

Trajectories are written as CSV with header ``t,x1,x2,x3,H,C,diss_residual``,
floats in 17 significant digits (``format(v, ".17g")``), LF line endings.
JSON documents start with ``"schema": 1`` and keep the key order of the
``*_record`` functions below; floats use Python's shortest round-trip repr.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .integrate import Direction, IntegratorSettings, Trajectory
from .model import InvalidConfig, SystemConfig

SCHEMA_VERSION = 1
CSV_HEADER = ("t", "x1", "x2", "x3", "H", "C", "diss_residual")

_INERTIA_KEYS = ("I1", "I2", "I3")
_INVERSE_KEYS = ("a1", "a2", "a3")
_REQUIRED_KEYS = ("ctrl_a", "ctrl_b", "ctrl_c", "epsilon")
_FLOAT_SETTINGS = ("rtol", "atol", "h_init", "h_max", "t_end")
_KNOWN_KEYS = frozenset(
    _INERTIA_KEYS
    + _INVERSE_KEYS
    + _REQUIRED_KEYS
    + _FLOAT_SETTINGS
    + ("direction", "max_steps", "x0", "seed", "output_path")
)


class ParseError(ValueError):
    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class InvariantViolation(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    system: SystemConfig
    x0: tuple | None = None
    settings: IntegratorSettings = field(default_factory=IntegratorSettings)
    seed: int = 0
    output_path: str | None = None


def fmt(value) -> str:
    """17 significant digits: exact round trip for doubles."""
    return format(float(value), ".17g")


def _parse_float(text, lineno, key):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(lineno, f"{key}: expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise ParseError(lineno, f"{key}: value must be finite, got {text!r}")
    return value


def _parse_int(text, lineno, key):
    try:
        value = int(text)
    except ValueError:
        raise ParseError(lineno, f"{key}: expected an integer, got {text!r}") from None
    return value


def parse_config(text: str) -> RunConfig:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(lineno, f"expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ParseError(lineno, f"unknown key {key!r}")
        if key in raw:
            raise ParseError(lineno, f"duplicate key {key!r}")
        if not value:
            raise ParseError(lineno, f"{key}: missing value")
        raw[key] = (lineno, value)

    def num(key):
        lineno, value = raw[key]
        return _parse_float(value, lineno, key)

    has_inertia = [k in raw for k in _INERTIA_KEYS]
    has_inverse = [k in raw for k in _INVERSE_KEYS]
    if any(has_inertia) and any(has_inverse):
        raise InvariantViolation("give either I1, I2, I3 or a1, a2, a3, not both")
    if any(has_inertia) and not all(has_inertia):
        raise InvariantViolation("I1, I2, I3 must all be given")
    if any(has_inverse) and not all(has_inverse):
        raise InvariantViolation("a1, a2, a3 must all be given")
    if not any(has_inertia) and not any(has_inverse):
        raise InvariantViolation("missing inertia: give I1, I2, I3 or a1, a2, a3")
    for key in _REQUIRED_KEYS:
        if key not in raw:
            raise InvariantViolation(f"missing required key {key!r}")

    controls = [num(k) for k in _REQUIRED_KEYS]
    try:
        if all(has_inertia):
            system = SystemConfig.from_moments(*(num(k) for k in _INERTIA_KEYS), *controls)
        else:
            system = SystemConfig(*(num(k) for k in _INVERSE_KEYS), *controls)
    except InvalidConfig as exc:
        raise InvariantViolation(str(exc)) from None

    x0 = None
    if "x0" in raw:
        lineno, value = raw["x0"]
        parts = [p.strip() for p in value.split(",")]
        if len(parts) != 3:
            raise ParseError(lineno, f"x0: expected three comma-separated values, got {value!r}")
        x0 = tuple(_parse_float(p, lineno, "x0") for p in parts)

    kwargs = {k: num(k) for k in _FLOAT_SETTINGS if k in raw}
    if "direction" in raw:
        lineno, value = raw["direction"]
        try:
            kwargs["direction"] = Direction(value.lower())
        except ValueError:
            raise ParseError(lineno, f"direction must be forward or backward, got {value!r}") from None
    if "max_steps" in raw:
        kwargs["max_steps"] = _parse_int(raw["max_steps"][1], raw["max_steps"][0], "max_steps")
    try:
        settings = IntegratorSettings(**kwargs)
    except ValueError as exc:
        raise InvariantViolation(str(exc)) from None

    seed = 0
    if "seed" in raw:
        seed = _parse_int(raw["seed"][1], raw["seed"][0], "seed")
        if seed < 0:
            raise InvariantViolation(f"seed must be a nonnegative integer, got {seed}")
    output_path = raw["output_path"][1] if "output_path" in raw else None
    return RunConfig(system, x0, settings, seed, output_path)


def serialize_config(rc: RunConfig) -> str:
    s = rc.system
    st = rc.settings
    lines = [
        f"a1 = {s.a1!r}",
        f"a2 = {s.a2!r}",
        f"a3 = {s.a3!r}",
        f"ctrl_a = {s.ctrl_a!r}",
        f"ctrl_b = {s.ctrl_b!r}",
        f"ctrl_c = {s.ctrl_c!r}",
        f"epsilon = {s.epsilon!r}",
    ]
    if rc.x0 is not None:
        lines.append("x0 = " + ", ".join(repr(float(v)) for v in rc.x0))
    lines += [f"{k} = {getattr(st, k)!r}" for k in _FLOAT_SETTINGS]
    lines.append(f"direction = {st.direction.value}")
    lines.append(f"max_steps = {st.max_steps}")
    lines.append(f"seed = {rc.seed}")
    if rc.output_path is not None:
        lines.append(f"output_path = {rc.output_path}")
    return "\n".join(lines) + "\n"


def trajectory_csv(traj: Trajectory) -> str:
    buf = io.StringIO(newline="")
    buf.write(",".join(CSV_HEADER) + "\n")
    for t, x, H, C, r in zip(traj.times, traj.states, traj.H_series, traj.C_series, traj.diss_residual):
        buf.write(",".join(fmt(v) for v in (t, x[0], x[1], x[2], H, C, r)) + "\n")
    return buf.getvalue()


def _vec(x):
    return [float(v) for v in np.asarray(x).ravel()]


def equilibrium_record(eq) -> dict:
    return {
        "family": eq.family.value,
        "param": eq.param,
        "point": _vec(eq.point),
        "norm": eq.norm,
        "residual": eq.residual,
    }


def verdict_record(verdict) -> dict:
    return {
        "kind": verdict.kind.value,
        "provenance": verdict.provenance.value,
        "notes": verdict.notes,
    }


def limit_record(report) -> dict:
    return {
        "x_m": _vec(report.x_m),
        "x_M": _vec(report.x_M),
        "norm2_m": float(report.x_m @ report.x_m),
        "norm2_M": float(report.x_M @ report.x_M),
        "d_forward": report.d_forward,
        "d_backward": report.d_backward,
        "norms_monotone": report.norms_monotone,
        "flagged": report.flagged,
    }


def system_record(cfg: SystemConfig) -> dict:
    return {
        "a1": cfg.a1,
        "a2": cfg.a2,
        "a3": cfg.a3,
        "ctrl_a": cfg.ctrl_a,
        "ctrl_b": cfg.ctrl_b,
        "ctrl_c": cfg.ctrl_c,
        "epsilon": cfg.epsilon,
    }


def document(kind, body: dict) -> dict:
    doc = {"schema": SCHEMA_VERSION, "kind": kind}
    doc.update(body)
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def write_text(path, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
