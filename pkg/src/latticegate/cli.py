"""Reproducible experiment runner.

``latticegate <command> --config <path> [--seed S] [--out DIR]``

Commands: ramsey, visibility-scan, interference, interference-scan, cluster,
percolation, calibrate, figures.  Configs are strict INI-style files
(``[section]`` headers, ``key = value`` lines, ``#`` comments); unknown
sections or keys are rejected with their line numbers, as are type errors
and missing required keys.  Floats accept a trailing ``pi`` (``0.5pi``).

Every CSV artifact gets a JSON sidecar carrying the command, the parsed
config, a SHA-256 of the config text, the master seed, the library version
and the random-generator identity, which is enough to reproduce the file
byte for byte.  All failures remove the partial outputs of the run.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import __version__, analysis, clifford, percolation
from .errors import ConfigError, LatticeGateError
from .noise import RNG_ALGORITHM, NoiseModel, make_rng
from .physics import CalibrationModel, calibrate_affine, standard_calibration

COMMANDS = ("ramsey", "visibility-scan", "interference", "interference-scan",
            "cluster", "percolation", "calibrate", "figures")


# --- config parsing --------------------------------------------------------------


def _parse_float(text: str) -> float:
    text = text.strip()
    if text.endswith("pi"):
        head = text[:-2].strip()
        return (float(head) if head else 1.0) * math.pi
    return float(text)


def _parse_value(kind, text, where):
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return _parse_float(text)
        if kind == "str":
            return text.strip()
        if kind == "bool":
            low = text.strip().lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if kind == "float_list":
            return [_parse_float(t) for t in text.replace(",", " ").split()]
        if kind == "int_list":
            return [int(t) for t in text.replace(",", " ").split()]
        if kind == "pair_list":  # "t:phase t:phase ..."
            pairs = []
            for tok in text.split():
                t, _, p = tok.partition(":")
                pairs.append((_parse_float(t), _parse_float(p)))
            return pairs
        if kind.startswith("choice:"):
            options = kind.split(":", 1)[1].split("|")
            val = text.strip()
            if val not in options:
                raise ValueError(f"must be one of {options}, got {val!r}")
            return val
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}: unknown schema kind {kind}")


_COMMON_SCHEMA = {
    ("run", "command"): ("str", False, None),
    ("noise", "fill_probability"): ("float", False, 1.0),
    ("noise", "pulse_area_error"): ("float", False, 0.0),
    ("noise", "pulse_area_jitter"): ("float", False, 0.0),
    ("noise", "dephasing_sigma"): ("float", False, 0.0),
    ("noise", "dephasing_rate"): ("float", False, 0.0),
    ("noise", "loss_per_atom"): ("float", False, 0.0),
    ("noise", "ensemble_size"): ("int", False, 1),
    ("noise", "seed"): ("int", False, 0),
    ("output", "prefix"): ("str", False, None),
}

_LATTICE_SCHEMA = {
    ("lattice", "n_atoms"): ("int", True, None),
    ("lattice", "boundary"): ("choice:open|ring", False, "open"),
}

_CAL_SCHEMA = {
    ("calibration", "anchors"): ("pair_list", False, None),
    ("calibration", "slope_rad_per_s"): ("float", False, None),
    ("calibration", "offset_rad"): ("float", False, 0.0),
}

_SCHEMAS = {
    "ramsey": {**_COMMON_SCHEMA, **_LATTICE_SCHEMA, **_CAL_SCHEMA,
               ("scan", "t_hold_us"): ("float", False, None),
               ("scan", "t_hold_us_list"): ("float_list", False, None),
               ("scan", "alpha_points"): ("int", False, 32)},
    "visibility-scan": {**_COMMON_SCHEMA, **_LATTICE_SCHEMA, **_CAL_SCHEMA,
                        ("scan", "t_start_us"): ("float", False, None),
                        ("scan", "t_stop_us"): ("float", False, None),
                        ("scan", "t_step_us"): ("float", False, None),
                        ("scan", "t_list_us"): ("float_list", False, None),
                        ("scan", "alpha_points"): ("int", False, 16)},
    "interference": {**_COMMON_SCHEMA, **_LATTICE_SCHEMA, **_CAL_SCHEMA,
                     ("scan", "t_hold_us"): ("float", False, None),
                     ("scan", "t_hold_us_list"): ("float_list", False, None),
                     ("scan", "tof_ms"): ("float", False, 11.0),
                     ("scan", "wavelength_nm"): ("float", False, 785.0),
                     ("scan", "x_span_um"): ("float", False, 300.0),
                     ("scan", "x_points"): ("int", False, 384)},
    "interference-scan": {**_COMMON_SCHEMA, **_LATTICE_SCHEMA, **_CAL_SCHEMA,
                          ("scan", "t_start_us"): ("float", False, None),
                          ("scan", "t_stop_us"): ("float", False, None),
                          ("scan", "t_step_us"): ("float", False, None),
                          ("scan", "t_list_us"): ("float_list", False, None),
                          ("scan", "tof_ms"): ("float", False, 11.0),
                          ("scan", "wavelength_nm"): ("float", False, 785.0)},
    "cluster": {**_COMMON_SCHEMA,
                ("cluster", "dims"): ("int_list", True, None),
                ("cluster", "axes"): ("str", False, "x"),
                ("cluster", "boundary"): ("choice:open|periodic", False, "open"),
                ("cluster", "fill_probability"): ("float", False, 1.0),
                ("cluster", "verify"): ("choice:auto|true|false", False, "auto")},
    "percolation": {**_COMMON_SCHEMA,
                    ("percolation", "mode"): ("choice:scan|threshold", True, None),
                    ("percolation", "dims"): ("int_list", False, None),
                    ("percolation", "p_list"): ("float_list", False, None),
                    ("percolation", "ndim"): ("int", False, 3),
                    ("percolation", "size"): ("int", False, 48),
                    ("percolation", "trials"): ("int", False, 100),
                    ("percolation", "tolerance"): ("float", False, 0.002)},
    "calibrate": {**_COMMON_SCHEMA,
                  ("calibration", "anchors"): ("pair_list", True, None),
                  ("calibration", "through_origin"): ("bool", False, False)},
}


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    values: dict          # {(section, key): typed value}
    text: str

    def get(self, section, key):
        return self.values[(section, key)]

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()

    def as_nested_dict(self) -> dict:
        out: dict = {}
        for (sec, key), val in sorted(self.values.items()):
            out.setdefault(sec, {})[key] = val
        return out


def parse_config(text: str, command: str) -> ExperimentConfig:
    """Strict parse of a config file for one command; raises ConfigError
    listing every problem with its line number."""
    if command not in _SCHEMAS:
        raise ConfigError(f"unknown command {command!r}; choose from {COMMANDS}")
    schema = _SCHEMAS[command]
    known_sections = {sec for sec, _ in schema}
    errors = []
    raw = {}
    section = None
    for ln, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip()
            if section not in known_sections:
                errors.append(f"line {ln}: unknown section [{section}] for {command}")
                section = None
            continue
        if "=" not in stripped:
            errors.append(f"line {ln}: expected 'key = value', got {stripped!r}")
            continue
        if section is None:
            errors.append(f"line {ln}: key outside a valid [section]")
            continue
        key, _, value = stripped.partition("=")
        key = key.strip()
        if (section, key) not in schema:
            errors.append(f"line {ln}: unknown key {key!r} in [{section}] for {command}")
            continue
        if (section, key) in raw:
            errors.append(f"line {ln}: duplicate key {key!r} in [{section}]")
            continue
        raw[(section, key)] = (value.strip(), ln)

    values = {}
    for (sec, key), (kind, required, default) in schema.items():
        if (sec, key) in raw:
            text_val, ln = raw[(sec, key)]
            try:
                values[(sec, key)] = _parse_value(kind, text_val, f"line {ln}: [{sec}] {key}")
            except ConfigError as exc:
                errors.append(str(exc))
        elif required:
            errors.append(f"missing required key: [{sec}] {key}")
        else:
            values[(sec, key)] = default

    declared = values.get(("run", "command"))
    if declared is not None and declared != command:
        errors.append(f"config declares command {declared!r} but {command!r} was invoked")
    if errors:
        raise ConfigError("; ".join(errors))

    cfg = ExperimentConfig(command=command, values=values, text=text)
    _validate_semantics(cfg)
    return cfg


def _validate_semantics(cfg: ExperimentConfig) -> None:
    errors = []
    v = cfg.values
    for key in (("scan", "t_hold_us"), ("scan", "t_start_us")):
        if key in v and v[key] is not None and v[key] < 0:
            errors.append(f"[{key[0]}] {key[1]} must be non-negative")
    if ("scan", "t_hold_us_list") in v and v[("scan", "t_hold_us_list")] is not None:
        if any(t < 0 for t in v[("scan", "t_hold_us_list")]):
            errors.append("[scan] t_hold_us_list entries must be non-negative")
    if ("noise", "fill_probability") in v and not 0 <= v[("noise", "fill_probability")] <= 1:
        errors.append("[noise] fill_probability must be in [0, 1]")
    if ("noise", "ensemble_size") in v and v[("noise", "ensemble_size")] < 1:
        errors.append("[noise] ensemble_size must be >= 1")
    if errors:
        raise ConfigError("; ".join(errors))


# --- execution helpers ------------------------------------------------------------


def _calibration_from(cfg: ExperimentConfig) -> CalibrationModel:
    anchors = cfg.values.get(("calibration", "anchors"))
    slope = cfg.values.get(("calibration", "slope_rad_per_s"))
    if anchors:
        return calibrate_affine(anchors)
    if slope is not None:
        return CalibrationModel(slope=slope,
                                offset=cfg.values.get(("calibration", "offset_rad"), 0.0))
    return standard_calibration()


def _noise_from(cfg: ExperimentConfig, seed_override) -> NoiseModel:
    g = cfg.values.get
    return NoiseModel(
        fill_probability=g(("noise", "fill_probability"), 1.0),
        pulse_area_error=g(("noise", "pulse_area_error"), 0.0),
        pulse_area_jitter=g(("noise", "pulse_area_jitter"), 0.0),
        dephasing_sigma=g(("noise", "dephasing_sigma"), 0.0),
        dephasing_rate=g(("noise", "dephasing_rate"), 0.0),
        loss_per_atom=g(("noise", "loss_per_atom"), 0.0),
        ensemble_size=g(("noise", "ensemble_size"), 1),
        seed=seed_override if seed_override is not None else g(("noise", "seed"), 0),
    )


def _float_csv(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.12g}" for v in row) + "\n")


def _write_lines(path, lines):
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


class _ArtifactSet:
    """Tracks written files so failures can remove partial output."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        self.files: list = []
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name: str) -> str:
        p = os.path.join(self.out_dir, name)
        self.files.append(p)
        return p

    def sidecar(self, artifact_path: str, cfg: ExperimentConfig, seed: int) -> None:
        meta = {
            "artifact": os.path.basename(artifact_path),
            "command": cfg.command,
            "config": cfg.as_nested_dict(),
            "config_sha256": cfg.sha256,
            "master_seed": seed,
            "library_version": __version__,
            "rng": RNG_ALGORITHM,
            "numpy_version": np.__version__,
        }
        path = artifact_path + ".json"
        self.files.append(path)
        with open(path, "w", newline="\n") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def cleanup(self) -> None:
        for p in self.files:
            if os.path.exists(p):
                os.remove(p)


def _suffixes(count: int):
    if count == 1:
        return [""]
    return ["_" + chr(ord("a") + i) for i in range(count)]


def _t_grid_us(cfg) -> list:
    v = cfg.values
    if v.get(("scan", "t_list_us")) is not None:
        return list(v[("scan", "t_list_us")])
    start, stop, step = (v.get(("scan", "t_start_us")), v.get(("scan", "t_stop_us")),
                         v.get(("scan", "t_step_us")))
    if None in (start, stop, step) or step <= 0:
        raise ConfigError("[scan] needs t_list_us or t_start_us/t_stop_us/t_step_us")
    n = int(round((stop - start) / step)) + 1
    return [start + i * step for i in range(n)]


def _t_holds_us(cfg) -> list:
    v = cfg.values
    if v.get(("scan", "t_hold_us_list")) is not None:
        return list(v[("scan", "t_hold_us_list")])
    if v.get(("scan", "t_hold_us")) is not None:
        return [v[("scan", "t_hold_us")]]
    raise ConfigError("[scan] needs t_hold_us or t_hold_us_list")


# --- command implementations --------------------------------------------------------


def _run_ramsey(cfg, arts, seed):
    cal = _calibration_from(cfg)
    noise = _noise_from(cfg, seed)
    n_atoms = cfg.get("lattice", "n_atoms")
    boundary = cfg.get("lattice", "boundary")
    alpha = np.linspace(0.0, 2 * math.pi, cfg.get("scan", "alpha_points"), endpoint=False)
    prefix = cfg.values.get(("output", "prefix")) or "ramsey"
    holds = _t_holds_us(cfg)
    for t_us, suffix in zip(holds, _suffixes(len(holds))):
        fringe = analysis.ramsey_scan(n_atoms, t_us * 1e-6, cal, noise, alpha,
                                      boundary=boundary)
        path = arts.path(f"{prefix}{suffix}.csv")
        _float_csv(path, "alpha_rad,p_one", zip(fringe.alpha, fringe.p_one))
        arts.sidecar(path, cfg, noise.seed)


def _run_visibility_scan(cfg, arts, seed):
    cal = _calibration_from(cfg)
    noise = _noise_from(cfg, seed)
    alpha = np.linspace(0.0, 2 * math.pi, cfg.get("scan", "alpha_points"), endpoint=False)
    t_grid = [t * 1e-6 for t in _t_grid_us(cfg)]
    points = analysis.visibility_curve(cfg.get("lattice", "n_atoms"), t_grid, cal, noise,
                                       alpha_grid=alpha,
                                       boundary=cfg.get("lattice", "boundary"))
    prefix = cfg.values.get(("output", "prefix")) or "visibility"
    path = arts.path(f"{prefix}.csv")
    _write_lines(path, analysis.scan_csv_lines(points))
    arts.sidecar(path, cfg, noise.seed)


def _run_interference(cfg, arts, seed):
    cal = _calibration_from(cfg)
    noise = _noise_from(cfg, seed)
    tof = cfg.get("scan", "tof_ms") * 1e-3
    wavelength = cfg.get("scan", "wavelength_nm") * 1e-9
    span = cfg.get("scan", "x_span_um") * 1e-6
    x = np.linspace(-span / 2, span / 2, cfg.get("scan", "x_points"))
    prefix = cfg.values.get(("output", "prefix")) or "interference"
    holds = _t_holds_us(cfg)
    for t_us, suffix in zip(holds, _suffixes(len(holds))):
        intensity = analysis.interference_pattern(
            cfg.get("lattice", "n_atoms"), t_us * 1e-6, cal, noise, x, tof,
            wavelength=wavelength, boundary=cfg.get("lattice", "boundary"))
        path = arts.path(f"{prefix}{suffix}.csv")
        _float_csv(path, "x_um,intensity", zip(x * 1e6, intensity))
        arts.sidecar(path, cfg, noise.seed)


def _run_interference_scan(cfg, arts, seed):
    cal = _calibration_from(cfg)
    noise = _noise_from(cfg, seed)
    t_grid = [t * 1e-6 for t in _t_grid_us(cfg)]
    points = analysis.interference_visibility_curve(
        cfg.get("lattice", "n_atoms"), t_grid, cal, noise,
        tof=cfg.get("scan", "tof_ms") * 1e-3,
        wavelength=cfg.get("scan", "wavelength_nm") * 1e-9,
        boundary=cfg.get("lattice", "boundary"))
    prefix = cfg.values.get(("output", "prefix")) or "interference_visibility"
    path = arts.path(f"{prefix}.csv")
    _write_lines(path, analysis.scan_csv_lines(points))
    arts.sidecar(path, cfg, noise.seed)


def _run_cluster(cfg, arts, seed):
    dims = cfg.get("cluster", "dims")
    fill = cfg.get("cluster", "fill_probability")
    master = seed if seed is not None else cfg.get("noise", "seed")
    volume = int(np.prod(dims))
    if fill >= 1.0:
        occupancy = np.ones(volume, dtype=bool)
    else:
        occupancy = make_rng(master).random(volume) < fill
    lattice = clifford.SiteLattice(tuple(dims) + (1,) * (3 - len(dims)), occupancy,
                                   cfg.get("cluster", "boundary"))
    axes = cfg.get("cluster", "axes")
    tableau, graph = clifford.generate_cluster(lattice, axes)
    sizes = clifford.component_sizes(graph)
    prefix = cfg.values.get(("output", "prefix")) or "cluster"
    path = arts.path(f"{prefix}.csv")
    _write_lines(path, clifford.size_histogram_csv_lines(sizes))
    verify_mode = cfg.get("cluster", "verify")
    verified = None
    if verify_mode == "true" or (verify_mode == "auto" and tableau.n <= 256):
        verified = clifford.verify_generators(tableau, lattice, axes)
        if not verified:
            raise LatticeGateError("generated tableau failed graph-state verification")
    arts.sidecar(path, cfg, master)


def _run_percolation(cfg, arts, seed):
    master = seed if seed is not None else cfg.get("noise", "seed")
    mode = cfg.get("percolation", "mode")
    prefix = cfg.values.get(("output", "prefix")) or "percolation"
    path = arts.path(f"{prefix}.csv")
    trials = cfg.get("percolation", "trials")
    if mode == "scan":
        dims = cfg.get("percolation", "dims")
        p_list = cfg.get("percolation", "p_list")
        if not dims or not p_list:
            raise ConfigError("[percolation] scan mode needs dims and p_list")
        seeds = percolation.trial_seeds(master, trials)
        rows = [percolation.cluster_size_stats(dims, p, trials, seeds=seeds)
                for p in p_list]
        _write_lines(path, percolation.percolation_csv_lines(rows))
    else:
        est = percolation.estimate_threshold(
            cfg.get("percolation", "ndim"), cfg.get("percolation", "size"),
            trials, cfg.get("percolation", "tolerance"), seed=master)
        _float_csv(path, "p_c,stderr,spanning_prob,ndim,size,trials",
                   [(est.p_c, est.stderr, est.spanning_prob, est.ndim, est.size,
                     est.trials)])
    arts.sidecar(path, cfg, master)


def _run_calibrate(cfg, arts, seed):
    anchors = cfg.get("calibration", "anchors")
    cal = calibrate_affine(anchors, through_origin=cfg.get("calibration", "through_origin"))
    residuals = [cal.phase(t) - p for t, p in anchors]
    prefix = cfg.values.get(("output", "prefix")) or "calibration"
    path = arts.path(f"{prefix}.csv")
    _float_csv(path, "slope_rad_per_s,offset_rad,u01_over_h_hz,max_residual_rad",
               [(cal.slope, cal.offset, cal.interaction_frequency,
                 max(abs(r) for r in residuals))])
    arts.sidecar(path, cfg, seed if seed is not None else cfg.get("noise", "seed"))


_RUNNERS = {
    "ramsey": _run_ramsey,
    "visibility-scan": _run_visibility_scan,
    "interference": _run_interference,
    "interference-scan": _run_interference_scan,
    "cluster": _run_cluster,
    "percolation": _run_percolation,
    "calibrate": _run_calibrate,
}

_RECIPES = ("fig2.cfg", "fig3.cfg", "fig4.cfg", "fig5.cfg")


def recipe_text(name: str) -> str:
    return resources.files("latticegate.recipes").joinpath(name).read_text()


def run_config(command: str, text: str, out_dir: str, seed=None) -> list:
    """Parse and execute one config; returns the files written.  Partial
    outputs are removed if anything fails."""
    cfg = parse_config(text, command)
    arts = _ArtifactSet(out_dir)
    try:
        _RUNNERS[command](cfg, arts, seed)
    except Exception:
        arts.cleanup()
        raise
    return arts.files


def run_figure_recipes(out_dir: str, seed=None) -> list:
    """Execute the bundled figure recipes (fringes, visibility scan,
    interference patterns, interference visibility scan)."""
    written = []
    try:
        for name in _RECIPES:
            text = recipe_text(name)
            command = None
            for line in text.splitlines():
                if line.strip().startswith("command"):
                    command = line.split("=", 1)[1].strip()
                    break
            if command is None:
                raise ConfigError(f"recipe {name} does not declare a command")
            written.extend(run_config(command, text, out_dir, seed))
    except Exception:
        for p in written:
            if os.path.exists(p):
                os.remove(p)
        raise
    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="latticegate",
        description="Collision phase-gate protocol simulator and analysis runner")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        if name != "figures":
            p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--out", default=".", help="output directory")
    args = parser.parse_args(argv)

    try:
        if args.command == "figures":
            files = run_figure_recipes(args.out, args.seed)
        else:
            with open(args.config) as fh:
                text = fh.read()
            files = run_config(args.command, text, args.out, args.seed)
    except (LatticeGateError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
