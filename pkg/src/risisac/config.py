"""Scenario configuration and the plain-text ``key = value`` loader."""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def dbm_to_watts(x_dbm):
    return 10.0 ** ((np.asarray(x_dbm, dtype=float) - 30.0) / 10.0)


@dataclass
class SystemConfig:
    """All scalars describing one scenario. Linear units throughout.

    Defaults follow the simulation section of the reference scenario
    (M=6, K=4, -90 dBm noise, L=1024, 50 m / 3 m / 8 m geometry) except N,
    which defaults to a desk-scale 16.
    """

    M: int = 6
    K: int = 4
    N: int = 16
    L: int = 1024
    Pt: float = 1.0
    sigma_r2: float = 1e-12
    sigma_k2: np.ndarray | float = 1e-12
    sigma_t2: float = 1.0
    alpha_t: complex = 1.0 + 0.0j
    kappa: float = float(db_to_linear(3.0))
    d_BR: float = 50.0
    d_RT: float = 3.0
    d_RU: float = 8.0
    theta_BR: float = math.pi / 4
    theta_RB: float = -math.pi / 4
    theta_2: float = math.pi / 4
    # BS-RIS, RIS-target, RIS-user, BS-target, BS-user
    pathloss_exponents: tuple = (2.2, 2.2, 2.3, 2.4, 3.5)
    pathloss_ref_db: float = -30.0
    user_angles: tuple | None = None
    Gamma_t: float = float(db_to_linear(7.0))
    eps_crb: float = 0.02
    penalty_init: tuple = (1.0, 1.0, 1.0, 1.0)
    penalty_floor: float = 1e-6
    shrink: float = 0.8
    max_iters: int = 50
    tol: float = 1e-4
    seed: int = 0
    pure_los: bool = False

    def __post_init__(self):
        self.sigma_k2 = np.broadcast_to(np.asarray(self.sigma_k2, dtype=float), (self.K,)).copy()
        self.pathloss_exponents = tuple(float(e) for e in self.pathloss_exponents)
        self.penalty_init = tuple(float(p) for p in np.atleast_1d(self.penalty_init))
        if len(self.penalty_init) == 1:
            self.penalty_init = self.penalty_init * 4
        self.alpha_t = complex(self.alpha_t)
        self.validate()

    def validate(self):
        for name in ("M", "K", "N", "L"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        positive = ("Pt", "sigma_r2", "sigma_t2", "d_BR", "d_RU", "shrink")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.d_RT < 0:
            raise ValueError("d_RT must be nonnegative")
        if np.any(self.sigma_k2 <= 0):
            raise ValueError("sigma_k2 must be strictly positive")
        if len(self.pathloss_exponents) != 5:
            raise ValueError("pathloss_exponents needs five entries")
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")
        if self.user_angles is not None and len(self.user_angles) != self.K:
            raise ValueError("user_angles must have K entries")

    def with_(self, **changes) -> "SystemConfig":
        """Copy with fields replaced; K changes resize a scalar noise vector."""
        if "K" in changes and "sigma_k2" not in changes:
            changes["sigma_k2"] = float(self.sigma_k2[0])
        return replace(self, **changes)


# keys carrying dB values and the target field + converter
_DB_KEYS = {
    "Pt_dBm": ("Pt", dbm_to_watts),
    "sigma_r2_dBm": ("sigma_r2", dbm_to_watts),
    "sigma_k2_dBm": ("sigma_k2", dbm_to_watts),
    "kappa_dB": ("kappa", db_to_linear),
    "Gamma_t_dB": ("Gamma_t", db_to_linear),
}

_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
    ast.USub: operator.neg,
    ast.UAdd: operator.pos,
}


def _eval_number(text: str):
    """Evaluate a numeric literal or simple arithmetic such as ``pi/4``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)):
            return node.value
        if isinstance(node, ast.Name) and node.id in ("pi", "inf"):
            return math.pi if node.id == "pi" else math.inf
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError(f"unsupported value: {text!r}")

    return ev(ast.parse(text.strip(), mode="eval"))


def _parse_value(text: str):
    text = text.strip()
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    if "," in text:
        return tuple(_eval_number(part) for part in text.split(",") if part.strip())
    return _eval_number(text)


def parse_config(text: str, **overrides) -> SystemConfig:
    """Parse ``key = value`` lines (``#`` starts a comment) into a config."""
    known = {f.name for f in fields(SystemConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        parsed = _parse_value(val)
        if key in _DB_KEYS:
            target, conv = _DB_KEYS[key]
            parsed = conv(parsed)
            parsed = tuple(np.atleast_1d(parsed)) if np.ndim(parsed) else float(parsed)
            key = target
        elif key not in known:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        values[key] = parsed
    for name in ("M", "K", "N", "L", "max_iters", "seed"):
        if name in values:
            values[name] = int(values[name])
    values.update(overrides)
    return SystemConfig(**values)


def load_config(path, **overrides) -> SystemConfig:
    return parse_config(Path(path).read_text(), **overrides)
