"""Run configuration, CSV tables and manifests.

Config files are INI (``configparser``) with the sections below; every key is
optional and falls back to the defaults in :data:`DEFAULTS`.

    [run]        command, seed, output
    [grid]       nx, nt, x_max, T
    [physics]    L, l, s, epsilon, a_values, beta, amplitude, tau, X, n_max, draws,
                 h_amp, g_amp, t1, t2, window
    [tolerances] tol, max_iter

Values are parsed as Python literals where possible (``a_values = 0.5, 0.2``
becomes a tuple).
"""

from __future__ import annotations

import ast
import configparser
import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["RunConfig", "DEFAULTS", "load_config", "write_csv", "read_csv", "write_manifest",
           "config_hash", "fmt"]

DEFAULTS = {
    "run": {"command": "", "seed": 0, "output": "out"},
    "grid": {"nx": 129, "nt": 17, "x_max": 20.0, "T": 1.0},
    "physics": {"L": 1.0, "l": None, "s": None, "epsilon": 0.1, "a_values": (0.5, 0.2, 0.1, 0.05, 0.02),
                "beta": 0.5, "amplitude": 1.0, "tau": 0.4, "X": 20.0, "n_max": 8, "draws": 100,
                "h_amp": 0.0, "g_amp": 0.0, "t1": None, "t2": None, "window": None},
    "tolerances": {"tol": 1e-10, "max_iter": 50},
}


def _literal(text: str):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


@dataclass
class RunConfig:
    command: str
    seed: int = 0
    output: str = "out"
    grid: dict = field(default_factory=dict)
    physics: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = {**DEFAULTS["grid"], **self.grid}
        self.physics = {**DEFAULTS["physics"], **self.physics}
        self.tolerances = {**DEFAULTS["tolerances"], **self.tolerances}
        self.validate()

    def validate(self):
        g, p, t = self.grid, self.physics, self.tolerances
        if int(g["nx"]) < 4 or int(g["nt"]) < 4:
            raise ValueError("grid.nx and grid.nt must be at least 4")
        for key in ("x_max", "T"):
            if not float(g[key]) > 0:
                raise ValueError(f"grid.{key} must be positive")
        if not float(p["L"]) > 0:
            raise ValueError("physics.L must be positive")
        if p["l"] is not None and not (0 < float(p["l"]) < float(p["L"])):
            raise ValueError("physics.l must satisfy 0 < l < L")
        if not float(p["epsilon"]) > 0:
            raise ValueError("physics.epsilon must be positive")
        if p["s"] is not None and not float(p["s"]) > 0:
            raise ValueError("physics.s must be positive")
        a = np.atleast_1d(np.asarray(p["a_values"], dtype=float))
        if np.any(a <= 0):
            raise ValueError("physics.a_values must be positive")
        if int(p["n_max"]) < 1:
            raise ValueError("physics.n_max must be >= 1")
        if not float(t["tol"]) > 0 or int(t["max_iter"]) < 1:
            raise ValueError("tolerances.tol must be positive and max_iter >= 1")
        if int(self.seed) < 0:
            raise ValueError("seed must be nonnegative")

    def resolved(self) -> dict:
        def clean(d):
            return {k: (list(v) if isinstance(v, tuple) else v) for k, v in sorted(d.items())}
        return {"command": self.command, "seed": int(self.seed), "grid": clean(self.grid),
                "physics": clean(self.physics), "tolerances": clean(self.tolerances)}


def load_config(path: str | Path | None, overrides: dict | None = None) -> RunConfig:
    """Read an INI file (optional) and apply ``overrides`` given as
    ``{"section.key": value}``; ``None`` values are ignored."""
    sections = {k: dict(v) for k, v in DEFAULTS.items()}
    if path is not None:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        if not cp.read(path):
            raise ValueError(f"cannot read config file {path}")
        for sec in cp.sections():
            if sec not in sections:
                raise ValueError(f"unknown config section [{sec}]")
            for key, raw in cp.items(sec):
                sections[sec][key] = _literal(raw)
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        sec, key = dotted.split(".", 1)
        sections[sec][key] = value
    run = sections["run"]
    return RunConfig(str(run["command"]), int(run["seed"]), str(run["output"]),
                     sections["grid"], sections["physics"], sections["tolerances"])


def config_hash(resolved: dict) -> str:
    blob = json.dumps(resolved, sort_keys=True, separators=(",", ":"), default=float)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def fmt(value) -> str:
    """17 significant digits, '.' decimal point, no locale."""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path: str | Path, header: list[str], rows, manifest_hash: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# manifest_hash={manifest_hash}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path: str | Path) -> tuple[str, list[str], np.ndarray]:
    """(manifest hash, header, float array) of a file written by :func:`write_csv`."""
    with open(path) as fh:
        first = fh.readline().strip()
        if not first.startswith("# manifest_hash="):
            raise ValueError(f"{path} has no manifest hash line")
        rows = list(csv.reader(fh))
    data = np.array([[float(v) for v in r] for r in rows[1:]]) if len(rows) > 1 else np.zeros((0, len(rows[0])))
    return first.split("=", 1)[1], rows[0], data


def write_manifest(outdir: str | Path, resolved: dict, files: list[Path], report: dict) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = {"manifest_hash": config_hash(resolved), "config": resolved,
                "files": sorted(Path(f).name for f in files), "report": report}
    path = outdir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return path


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, complex):
        return [v.real, v.imag]
    raise TypeError(f"cannot serialize {type(v).__name__}")
