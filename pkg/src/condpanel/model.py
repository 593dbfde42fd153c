"""Domain vocabulary for the AR(1) dynamic panel logit with Markov feedback.

Periods are indexed ``t = 0..T``; ``t = 0`` carries only the initial outcome
``y0`` and is never counted toward the horizon ``T``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

DEFAULT_BOX = 20.0


class FeedbackSpec(enum.Enum):
    """Which past variables the covariate's Markov kernel conditions on.

    ``SPEC1``: ``X_t`` depends on ``(X_{t-1}, Y_{t-1})``; the initial condition
    is ``(y0, x1)``.  ``SPEC2``: ``X_t`` depends on ``Y_{t-1}`` only; the
    initial condition is ``y0``.
    """

    SPEC1 = 1
    SPEC2 = 2

    @classmethod
    def parse(cls, value) -> "FeedbackSpec":
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower()
        for prefix in ("spec", ""):
            if text.startswith(prefix) and text[len(prefix):] in ("1", "2"):
                return cls(int(text[len(prefix):]))
        raise ValueError(f"unknown feedback spec {value!r}; expected 1 or 2")

    @property
    def n_free_x(self):
        """Offset between T and the number of covariates stored on a Path."""
        return 1 if self is FeedbackSpec.SPEC1 else 0


def to_fraction(value) -> Fraction:
    """Parse an exact rational from an int, Fraction, or ``"p/q"`` literal.

    Floats are rejected unless they are integral, since a binary float rarely
    equals the rational the user meant.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not support values")
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isfinite(value) and float(value).is_integer():
            return Fraction(int(value))
        raise ValueError(f"non-integral float {value!r}; pass an exact 'p/q' literal")
    if isinstance(value, str):
        text = value.strip()
        if not text:
            raise ValueError("empty rational literal")
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse rational {value!r}") from exc
    raise TypeError(f"cannot interpret {value!r} as a rational")


@dataclass(frozen=True)
class Theta:
    """Parameter pair: ``rho`` on the lagged outcome, ``beta`` on the covariate."""

    rho: float
    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.rho) and math.isfinite(self.beta)):
            raise ValueError(f"theta must be finite, got ({self.rho}, {self.beta})")

    def as_array(self) -> np.ndarray:
        return np.array([self.rho, self.beta], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "Theta":
        return cls(float(arr[0]), float(arr[1]))

    def in_box(self, box: float = DEFAULT_BOX) -> bool:
        return abs(self.rho) <= box and abs(self.beta) <= box


@dataclass(frozen=True)
class Support:
    """Finite, strictly increasing covariate support held as exact rationals."""

    values: tuple

    def __post_init__(self):
        vals = tuple(to_fraction(v) for v in self.values)
        if len(vals) < 2:
            raise ValueError("support needs at least two values")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("support values must be strictly increasing")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "_index", {v: i for i, v in enumerate(vals)})

    @classmethod
    def default(cls, size: int = 2) -> "Support":
        return cls(tuple(range(size)))

    @classmethod
    def parse(cls, text: str) -> "Support":
        """Parse a comma-separated list such as ``"0,1"`` or ``"0,1/2,1"``."""
        parts = [p for p in str(text).split(",") if p.strip()]
        return cls(tuple(to_fraction(p) for p in parts))

    @property
    def size(self) -> int:
        return len(self.values)

    def __len__(self):
        return len(self.values)

    def __contains__(self, value) -> bool:
        try:
            return to_fraction(value) in self._index
        except (TypeError, ValueError):
            return False

    def index(self, value) -> int:
        try:
            return self._index[value]
        except (KeyError, TypeError):
            return self._index[to_fraction(value)]

    def as_float_array(self) -> np.ndarray:
        return np.array([float(v) for v in self.values])

    def __str__(self):
        return ",".join(str(v) for v in self.values)


@dataclass(frozen=True, order=True)
class InitialCondition:
    """Initial outcome ``y0`` plus, under SPEC1 only, the first covariate ``x1``."""

    y0: int
    x1: Fraction | None = None

    def __post_init__(self):
        if self.x1 is not None and not isinstance(self.x1, Fraction):
            object.__setattr__(self, "x1", to_fraction(self.x1))

    @property
    def spec(self) -> FeedbackSpec:
        return FeedbackSpec.SPEC2 if self.x1 is None else FeedbackSpec.SPEC1

    def key(self) -> str:
        """Short text label, ``"y0"`` or ``"y0,x1"``; used in reports and configs."""
        return str(self.y0) if self.x1 is None else f"{self.y0},{self.x1}"

    @classmethod
    def from_key(cls, key: str) -> "InitialCondition":
        parts = [p.strip() for p in str(key).split(",")]
        y0 = int(parts[0])
        if len(parts) == 1:
            return cls(y0)
        if len(parts) == 2:
            return cls(y0, to_fraction(parts[1]))
        raise ValueError(f"bad initial condition key {key!r}")


def initial_conditions(spec: FeedbackSpec, support: Support) -> list[InitialCondition]:
    """All initial conditions, in canonical order (y0 first, then x1)."""
    if spec is FeedbackSpec.SPEC2:
        return [InitialCondition(0), InitialCondition(1)]
    return [InitialCondition(y0, x1) for y0 in (0, 1) for x1 in support.values]


@dataclass(frozen=True)
class Path:
    """One individual's realised history.

    ``x`` holds ``x_2..x_T`` under SPEC1 (``x_1`` lives in ``init``) and
    ``x_1..x_T`` under SPEC2; ``y`` always holds ``y_1..y_T``.
    """

    init: InitialCondition
    x: tuple
    y: tuple

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(self.x))
        object.__setattr__(self, "y", tuple(self.y))

    @property
    def T(self) -> int:
        return len(self.y)

    @property
    def spec(self) -> FeedbackSpec:
        return self.init.spec

    def full_x(self) -> tuple:
        """Covariates ``x_1..x_T`` regardless of spec."""
        if self.init.x1 is None:
            return self.x
        return (self.init.x1,) + self.x

    def full_y(self) -> tuple:
        """Outcomes ``y_0..y_T``."""
        return (self.init.y0,) + self.y


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple = ()

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.valid


def validate_path(p: Path, support: Support, spec: FeedbackSpec) -> ValidationResult:
    """Check every Path invariant against ``support`` and ``spec``.

    Never raises; all problems are collected in the returned verdict.
    """
    problems = []
    init = p.init
    if init.y0 not in (0, 1) or isinstance(init.y0, bool):
        problems.append(f"y0 must be 0 or 1, got {init.y0!r}")
    if spec is FeedbackSpec.SPEC1:
        if init.x1 is None:
            problems.append("x1 required under Spec1")
        elif init.x1 not in support:
            problems.append(f"covariate off support: x1={init.x1}")
    elif init.x1 is not None:
        problems.append("x1 must be absent under Spec2")
    T = len(p.y)
    if T < 1:
        problems.append("horizon T must be at least 1")
    expected_x = T - spec.n_free_x
    if len(p.x) != max(expected_x, 0):
        problems.append(f"expected {max(expected_x, 0)} covariates for T={T}, got {len(p.x)}")
    for t, v in enumerate(p.y, start=1):
        if isinstance(v, bool) or v not in (0, 1):
            problems.append(f"outcome y_{t} must be 0 or 1, got {v!r}")
    first = 1 + spec.n_free_x
    for t, v in enumerate(p.x, start=first):
        if v not in support:
            problems.append(f"covariate off support: x_{t}={v}")
    return ValidationResult(tuple(problems))


@dataclass(frozen=True)
class PanelDataset:
    """Balanced panel of ``N >= 1`` paths sharing spec, support and horizon."""

    spec: FeedbackSpec
    support: Support
    T: int
    individuals: tuple
    ids: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "individuals", tuple(self.individuals))
        if not self.individuals:
            raise ValueError("a panel needs at least one individual")
        ids = tuple(str(i) for i in self.ids) if self.ids else tuple(
            str(i + 1) for i in range(len(self.individuals)))
        if len(ids) != len(self.individuals):
            raise ValueError("ids and individuals differ in length")
        if len(set(ids)) != len(ids):
            raise ValueError("individual ids must be unique")
        object.__setattr__(self, "ids", ids)

    @property
    def N(self) -> int:
        return len(self.individuals)

    def validate(self) -> ValidationResult:
        problems = []
        for pid, p in zip(self.ids, self.individuals):
            if p.T != self.T:
                problems.append(f"id {pid}: horizon {p.T} != panel horizon {self.T}")
            problems.extend(f"id {pid}: {msg}" for msg in
                            validate_path(p, self.support, self.spec).violations)
        return ValidationResult(tuple(problems))

    @cached_property
    def x_index(self) -> np.ndarray:
        """``(N, T)`` int array of support indices of ``x_1..x_T``."""
        idx = self.support.index
        return np.array([[idx(v) for v in p.full_x()] for p in self.individuals],
                        dtype=np.int64).reshape(self.N, self.T)

    @cached_property
    def y_array(self) -> np.ndarray:
        """``(N, T+1)`` int array of ``y_0..y_T``."""
        return np.array([p.full_y() for p in self.individuals],
                        dtype=np.int64).reshape(self.N, self.T + 1)

    @classmethod
    def from_arrays(cls, spec, support: Support, x_index, y, ids: Sequence = ()) -> "PanelDataset":
        """Build from an ``(N, T)`` array of support indices and ``(N, T+1)`` outcomes."""
        spec = FeedbackSpec.parse(spec)
        x_index = np.asarray(x_index, dtype=np.int64)
        y = np.asarray(y, dtype=np.int64)
        N, T = x_index.shape
        vals = support.values
        paths = []
        for i in range(N):
            xs = tuple(vals[j] for j in x_index[i])
            ys = tuple(int(v) for v in y[i, 1:])
            if spec is FeedbackSpec.SPEC1:
                init = InitialCondition(int(y[i, 0]), xs[0])
                xs = xs[1:]
            else:
                init = InitialCondition(int(y[i, 0]))
            paths.append(Path(init, xs, ys))
        ds = cls(spec, support, T, tuple(paths), tuple(ids))
        ds.__dict__["x_index"] = x_index
        ds.__dict__["y_array"] = y
        return ds

    def subset(self, rows: Iterable[int]) -> "PanelDataset":
        rows = list(rows)
        return PanelDataset(self.spec, self.support, self.T,
                            tuple(self.individuals[r] for r in rows),
                            tuple(self.ids[r] for r in rows))
