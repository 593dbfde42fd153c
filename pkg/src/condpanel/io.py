"""Panel CSV codec, DGP config loading and canonical JSON reports.

CSV layout: columns ``id,t,x,y`` with one row per individual and period
``t = 0..T``.  ``x`` is empty at ``t = 0``; under Spec1 the ``t = 1`` row
carries ``x1``, which becomes part of the initial condition.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from fractions import Fraction
from pathlib import Path as FsPath

import numpy as np

from . import __version__
from .likelihood import FeedbackKernel
from .model import (FeedbackSpec, InitialCondition, PanelDataset, Path, Support, Theta,
                    initial_conditions, to_fraction)
from .simulation import DGPConfig, DirichletKernelLaw, FixedKernel, Normal, PointMass, TwoPoint

CSV_COLUMNS = ("id", "t", "x", "y")


class PanelFormatError(ValueError):
    pass


class ConfigError(ValueError):
    pass


def _parse_int(text, line, name):
    try:
        return int(text)
    except (TypeError, ValueError):
        raise PanelFormatError(f"line {line}: {name} must be an integer, got {text!r}") from None


def read_panel(source, spec, support: Support) -> PanelDataset:
    """Parse panel CSV text from an open file object."""
    spec = FeedbackSpec.parse(spec)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise PanelFormatError("line 1: empty file") from None
    if tuple(h.strip() for h in header) != CSV_COLUMNS:
        raise PanelFormatError(f"line 1: header must be {','.join(CSV_COLUMNS)}, got {','.join(header)}")
    rows: dict = {}
    order = []
    for line, rec in enumerate(reader, start=2):
        if not rec or all(not f.strip() for f in rec):
            continue
        if len(rec) != 4:
            raise PanelFormatError(f"line {line}: malformed row, expected 4 fields, got {len(rec)}")
        pid, t_txt, x_txt, y_txt = (f.strip() for f in rec)
        if not pid:
            raise PanelFormatError(f"line {line}: malformed row, empty id")
        t = _parse_int(t_txt, line, "t")
        if t < 0:
            raise PanelFormatError(f"line {line}: malformed row, negative t")
        y = _parse_int(y_txt, line, "y")
        if y not in (0, 1):
            raise PanelFormatError(f"line {line}: non-binary y={y_txt}")
        if t == 0:
            if x_txt:
                raise PanelFormatError(f"line {line}: malformed row, x must be empty at t=0")
            x = None
        else:
            try:
                x = to_fraction(x_txt)
            except (TypeError, ValueError):
                raise PanelFormatError(f"line {line}: malformed row, bad x {x_txt!r}") from None
            if x not in support:
                raise PanelFormatError(f"line {line}: off-support x={x_txt}")
        if pid not in rows:
            rows[pid] = {}
            order.append(pid)
        if t in rows[pid]:
            raise PanelFormatError(f"line {line}: malformed row, duplicate (id={pid}, t={t})")
        rows[pid][t] = (x, y, line)
    if not order:
        raise PanelFormatError("no data rows")
    horizons = {}
    for pid in order:
        ts = sorted(rows[pid])
        if ts != list(range(len(ts))):
            first_line = min(v[2] for v in rows[pid].values())
            raise PanelFormatError(f"line {first_line}: ragged panel, id {pid} has periods {ts}")
        horizons[pid] = len(ts) - 1
    Ts = set(horizons.values())
    if len(Ts) != 1:
        raise PanelFormatError(f"ragged panel: horizons differ across ids {sorted(Ts)}")
    T = Ts.pop()
    if T < 1:
        raise PanelFormatError("ragged panel: need at least one period after t=0")
    paths = []
    for pid in order:
        r = rows[pid]
        xs = tuple(r[t][0] for t in range(1, T + 1))
        ys = tuple(r[t][1] for t in range(1, T + 1))
        if spec is FeedbackSpec.SPEC1:
            init = InitialCondition(r[0][1], xs[0])
            xs = xs[1:]
        else:
            init = InitialCondition(r[0][1])
        paths.append(Path(init, xs, ys))
    return PanelDataset(spec, support, T, tuple(paths), tuple(order))


def load_panel(path, spec, support: Support) -> PanelDataset:
    with open(path, newline="") as fh:
        return read_panel(fh, spec, support)


def panel_to_csv(ds: PanelDataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for pid, p in zip(ds.ids, ds.individuals):
        writer.writerow([pid, 0, "", p.init.y0])
        for t, (x, y) in enumerate(zip(p.full_x(), p.y), start=1):
            writer.writerow([pid, t, str(x), y])
    return buf.getvalue()


def write_panel(ds: PanelDataset, path) -> None:
    FsPath(path).write_text(panel_to_csv(ds))


# canonical JSON -----------------------------------------------------------

def _fmt_float(v: float) -> str:
    if math.isnan(v) or math.isinf(v):
        return "null"
    text = format(v, ".17g")
    if not any(c in text for c in ".en"):
        text += ".0"
    return text


def _canon(obj) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, Fraction):
        return json.dumps(str(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=True)
    if isinstance(obj, dict):
        items = sorted(((str(k), v) for k, v in obj.items()), key=lambda kv: kv[0])
        return "{" + ",".join(f"{json.dumps(k)}:{_canon(v)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_canon(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return _canon(obj.tolist())
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def canonical_json(obj) -> str:
    """Sorted keys, no whitespace, floats with 17 significant digits."""
    return _canon(obj) + "\n"


def digest(*parts) -> str:
    h = hashlib.sha256()
    for part in parts:
        data = part if isinstance(part, bytes) else str(part).encode()
        h.update(len(data).to_bytes(8, "big"))
        h.update(data)
    return "sha256:" + h.hexdigest()


def envelope(command: str, input_digest: str, payload, timestamp=None) -> dict:
    return {
        "tool_version": __version__,
        "command": command,
        "input_digest": input_digest,
        "timestamp": timestamp,
        "payload": payload,
    }


# DGP config ---------------------------------------------------------------

def _heterogeneity(desc):
    if not isinstance(desc, dict) or "type" not in desc:
        raise ConfigError(f"heterogeneity entry must be an object with 'type': {desc!r}")
    kind = str(desc["type"]).lower().replace("_", "")
    args = {k: v for k, v in desc.items() if k != "type"}
    try:
        if kind in ("pointmass", "point"):
            return PointMass(float(args.get("c", 0.0)))
        if kind == "normal":
            return Normal(float(args.get("mu", 0.0)), float(args.get("sigma", 1.0)))
        if kind in ("twopoint",):
            return TwoPoint(float(args["a"]), float(args["b"]), float(args.get("p", 0.5)))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad heterogeneity parameters {desc!r}: {exc}") from None
    raise ConfigError(f"unknown heterogeneity type {desc['type']!r}")


def _row_key(text, spec: FeedbackSpec):
    parts = [p.strip() for p in str(text).split(",")]
    if spec is FeedbackSpec.SPEC2:
        if len(parts) != 1:
            raise ConfigError(f"Spec2 kernel row key is y, got {text!r}")
        return int(parts[0])
    if len(parts) != 2:
        raise ConfigError(f"Spec1 kernel row key is 'x,y', got {text!r}")
    return (to_fraction(parts[0]), int(parts[1]))


def config_from_dict(raw: dict, seed_override: int | None = None) -> DGPConfig:
    """Build a :class:`DGPConfig` from parsed JSON.

    Keys: ``theta0`` (``{"rho", "beta"}``), ``spec``, ``support``, ``T``,
    ``N``, ``heterogeneity`` (``{"default": ..., "by_init": {"y0[,x1]": ...}}``),
    ``kernel_law`` (``{"type": "dirichlet", "concentration": [...] | {row: [...]}}``
    or ``{"type": "fixed", "rows": {row: [...]}}``), ``init_law``, ``seed``.
    """
    try:
        spec = FeedbackSpec.parse(raw["spec"])
        support = Support(tuple(to_fraction(v) for v in raw.get("support", [0, 1])))
        th = raw["theta0"]
        theta0 = Theta(float(th["rho"]), float(th["beta"])) if isinstance(th, dict) \
            else Theta(float(th[0]), float(th[1]))
        T, N = int(raw["T"]), int(raw["N"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from None
    het_raw = raw.get("heterogeneity", {}) or {}
    het = {}
    all_inits = initial_conditions(spec, support)
    default = het_raw.get("default")
    for init in all_inits:
        if default is not None:
            het[init] = _heterogeneity(default)
    for key, desc in (het_raw.get("by_init") or {}).items():
        try:
            init = InitialCondition.from_key(key)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if init not in all_inits:
            raise ConfigError(f"heterogeneity given for unknown initial condition {key!r}")
        het[init] = _heterogeneity(desc)
    kl = raw.get("kernel_law", {"type": "dirichlet"}) or {"type": "dirichlet"}
    kind = str(kl.get("type", "dirichlet")).lower()
    try:
        if kind == "dirichlet":
            conc = kl.get("concentration")
            if isinstance(conc, dict):
                conc = {_row_key(k, spec): v for k, v in conc.items()}
            kernel_law = DirichletKernelLaw(conc)
        elif kind == "fixed":
            rows = {_row_key(k, spec): v for k, v in kl["rows"].items()}
            kernel_law = FixedKernel(FeedbackKernel(spec, support, rows))
        else:
            raise ConfigError(f"unknown kernel_law type {kl.get('type')!r}")
        seed = int(raw.get("seed", 0)) if seed_override is None else int(seed_override)
        return DGPConfig(theta0=theta0, spec=spec, support=support, T=T, N=N,
                         heterogeneity=het, kernel_law=kernel_law,
                         init_law=raw.get("init_law"), seed=seed)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from None


def load_config(path, seed_override: int | None = None) -> tuple[DGPConfig, dict]:
    text = FsPath(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return config_from_dict(raw, seed_override), raw
