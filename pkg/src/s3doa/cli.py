"""Command-line entry point.

Exit codes: 0 success, 2 malformed config or arguments, 3 config that parses
but is inconsistent (e.g. a sub-array that does not fit), 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import jsonschema

from . import __version__
from ._backend import BACKEND
from .beamforming import beampattern, optimal_weights, region_matrix
from .errors import ConfigError, DimensionError, NumericalError, S3Error
from .experiments import (
    DEFAULT_REGION,
    DEFAULT_SEED,
    SchemeConfig,
    first_simulation_schemes,
    read_snapshot_csv,
    run_rmse_sweep,
    run_spectrum_study,
    run_timing,
    write_resolution_csv,
    write_rmse_csv,
    write_snapshot_csv,
    write_spectrum_csv,
    write_timing_csv,
    write_trials_csv,
)
from .geometry import make_ula
from .model import Snapshot, SourceScene, reference_scene, sigma_for_snr
from .subspace import estimate_doas

log = logging.getLogger("s3doa")

EXIT_OK, EXIT_PARSE, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3, 4

_NUM = {"type": "number"}
_INT = {"type": "integer"}
_SCHEME_OBJ = {
    "type": "object",
    "required": ["name", "sub_array", "window_length", "n_sensors"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "sub_array": {"type": "array", "items": _INT, "minItems": 1},
        "window_length": {"type": "integer", "minimum": 1},
        "window_count": {"type": "integer", "minimum": 1},
        "region_deg": {
            "oneOf": [{"type": "null"}, {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}]
        },
        "n_sensors": {"type": "integer", "minimum": 1},
    },
}
_SCHEME = {"oneOf": [{"enum": ["i", "ii", "iii", "iv"]}, _SCHEME_OBJ]}
_SCENE = {
    "type": "object",
    "required": ["angles_deg", "amplitudes"],
    "additionalProperties": False,
    "properties": {
        "angles_deg": {"type": "array", "items": _NUM, "minItems": 1},
        "amplitudes": {
            "type": "array",
            "items": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
            "minItems": 1,
        },
    },
}
_COMMON = {
    "experiment": {"type": "string"},
    "master_seed": {"type": "integer", "minimum": 0},
    "trials": {"type": "integer", "minimum": 0},
    "grid_size": {"type": "integer", "minimum": 2},
}
SCHEMAS = {
    "weights": {
        "window_count": {"type": "integer", "minimum": 1},
        "region_deg": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
        "grid_step_deg": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
    },
    "spectrum": {
        "schemes": {"type": "array", "items": _SCHEME, "minItems": 1},
        "scene": _SCENE,
        "snr_db": _NUM,
        "sigma": {"type": "number", "minimum": 0},
        "tol_deg": {"type": "number", "exclusiveMinimum": 0},
    },
    "rmse-sweep": {
        "schemes": {"type": "array", "items": _SCHEME, "minItems": 1},
        "scene": _SCENE,
        "snr_db": {"type": "array", "items": _NUM, "minItems": 1},
        "sigmas": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
    },
    "timing": {
        "p_values": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1},
        "snr_db": _NUM,
    },
    "recover": {
        "scheme": _SCHEME,
        "k": {"type": "integer", "minimum": 1},
    },
}
REQUIRED = {"recover": ["scheme", "k"]}

DEFAULTS = {
    "weights": {"window_count": 11, "region_deg": list(DEFAULT_REGION), "grid_step_deg": 1.0},
    "spectrum": {
        "schemes": ["i", "ii", "iii", "iv"],
        "scene": reference_scene((20.0, 22.0, 24.0)).to_json(),
        "snr_db": 0.0,
        "trials": 50,
        "grid_size": 20000,
        "tol_deg": 1.0,
    },
    "rmse-sweep": {
        "schemes": ["i", "ii", "iii", "iv"],
        "scene": reference_scene().to_json(),
        "snr_db": [20.0, 15.0, 10.0, 5.0, 0.0, -5.0, -10.0, -15.0, -20.0],
        "trials": 200,
        "grid_size": 20000,
    },
    "timing": {"p_values": list(range(5, 16)), "trials": 200, "snr_db": 20.0},
    "recover": {"grid_size": 20000},
}


def schema_for(experiment: str) -> dict:
    return {
        "type": "object",
        "properties": {**_COMMON, **SCHEMAS[experiment]},
        "required": REQUIRED.get(experiment, []),
        "additionalProperties": False,
    }


def load_config(path: str | None, experiment: str) -> dict:
    """Read, structurally validate and default-fill a JSON config.

    Raises :class:`ConfigError` with a line/field diagnostic on failure.
    """
    raw: dict = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from exc
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
    try:
        jsonschema.validate(raw, schema_for(experiment))
    except jsonschema.ValidationError as exc:
        where = exc.json_path if hasattr(exc, "json_path") else "/".join(map(str, exc.path))
        raise ConfigError(f"{path}: field {where}: {exc.message}") from exc
    if raw.get("experiment", experiment) != experiment:
        raise ConfigError(
            f"{path}: field $.experiment: config is for '{raw['experiment']}', "
            f"not '{experiment}'"
        )
    if experiment == "rmse-sweep" and "snr_db" in raw and "sigmas" in raw:
        raise ConfigError(f"{path}: give either snr_db or sigmas, not both")
    cfg = {"experiment": experiment, "master_seed": DEFAULT_SEED}
    cfg.update(DEFAULTS[experiment])
    if experiment == "rmse-sweep" and "sigmas" in raw:
        cfg.pop("snr_db")
    if experiment == "spectrum" and "sigma" in raw:
        cfg.pop("snr_db")
    cfg.update(raw)
    return cfg


def _schemes(entries) -> list[SchemeConfig]:
    builtin = first_simulation_schemes()
    return [builtin[e] if isinstance(e, str) else SchemeConfig.from_json(e) for e in entries]


def _scene(obj) -> SourceScene:
    return SourceScene.from_json(obj)


def _manifest(out: Path, cfg: dict, outputs: list[str]) -> None:
    manifest = {
        "subcommand": cfg["experiment"],
        "config": cfg,
        "master_seed": cfg["master_seed"],
        "version": __version__,
        "backend": BACKEND,
        "outputs": outputs,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def cmd_weights(cfg: dict, out: Path, args) -> list[str]:
    A = region_matrix(cfg["window_count"], *cfg["region_deg"])
    wv = optimal_weights(A)
    if wv.degenerate:
        log.warning("top eigenvalue is not simple; weights are one of many optima")
    with open(out / "weights.csv", "w") as f:
        f.write("index,re,im\n")
        for i, w in enumerate(wv.w, start=1):
            f.write(f"{i},{float(w.real)!r},{float(w.imag)!r}\n")
    theta, gain = beampattern(wv, cfg["grid_step_deg"])
    with open(out / "beampattern.csv", "w") as f:
        f.write("theta_deg,gain_db\n")
        for t, g in zip(theta, gain):
            f.write(f"{float(t)!r},{float(g)!r}\n")
    return ["weights.csv", "beampattern.csv"]


def cmd_spectrum(cfg: dict, out: Path, args) -> list[str]:
    scene = _scene(cfg["scene"])
    sigma = cfg["sigma"] if "sigma" in cfg else sigma_for_snr(scene, cfg["snr_db"])
    study = run_spectrum_study(
        _schemes(cfg["schemes"]), scene, sigma, cfg["trials"],
        cfg["master_seed"], cfg["grid_size"], cfg["tol_deg"],
    )
    write_spectrum_csv(out / "spectrum.csv", study.spectra)
    outputs = ["spectrum.csv"]
    if study.resolve_fraction is not None:
        write_resolution_csv(out / "resolution.csv", study)
        outputs.append("resolution.csv")
    return outputs


def cmd_rmse_sweep(cfg: dict, out: Path, args) -> list[str]:
    scene = _scene(cfg["scene"])
    if "sigmas" in cfg:
        sigmas = cfg["sigmas"]
    else:
        sigmas = [sigma_for_snr(scene, s) for s in cfg["snr_db"]]
    schemes = _schemes(cfg["schemes"])
    result = run_rmse_sweep(
        schemes, scene, sigmas, cfg["trials"], cfg["master_seed"],
        cfg["grid_size"], keep_snapshots=args.export_snapshots,
    )
    write_rmse_csv(out / "rmse_sweep.csv", result.rows)
    outputs = ["rmse_sweep.csv"]
    if args.export_snapshots:
        snap_dir = out / "snapshots"
        snap_dir.mkdir(exist_ok=True)
        written = set()
        sigma_index = {float(s): j for j, s in enumerate(sigmas)}
        n_of = {c.name: c.n_sensors for c in schemes}
        for (name, sigma, t), snap in result.snapshots.items():
            fname = snapshot_filename(n_of[name], sigma_index[sigma], t)
            if fname not in written:
                write_snapshot_csv(snap_dir / fname, snap.y)
                written.add(fname)
        write_trials_csv(out / "trials.csv", result.records)
        outputs += ["trials.csv", "snapshots/"]
    return outputs


def snapshot_filename(n: int, sigma_index: int, trial: int) -> str:
    return f"snapshot_N{n}_s{sigma_index}_t{trial}.csv"


def cmd_timing(cfg: dict, out: Path, args) -> list[str]:
    if cfg["trials"] < 1:
        raise ConfigError("field $.trials: timing needs at least one trial")
    rows = run_timing(cfg["p_values"], cfg["trials"], cfg["master_seed"], snr=cfg["snr_db"])
    write_timing_csv(out / "timing.csv", rows)
    return ["timing.csv"]


def cmd_recover(cfg: dict, args) -> list[float]:
    (scheme,) = _schemes([cfg["scheme"]])
    y = read_snapshot_csv(args.snapshot)
    if y.shape[0] != scheme.n_sensors:
        raise DimensionError(
            f"snapshot has {y.shape[0]} entries but scheme '{scheme.name}' "
            f"expects N={scheme.n_sensors}"
        )
    snap = Snapshot(y, make_ula(scheme.n_sensors))
    return estimate_doas(snap, scheme.scheme, cfg["k"], cfg["grid_size"])


COMMANDS = {
    "weights": cmd_weights,
    "spectrum": cmd_spectrum,
    "rmse-sweep": cmd_rmse_sweep,
    "timing": cmd_timing,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="s3doa",
        description="Single-snapshot DOA estimation with sparse spatial smoothing.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", "-c", help="JSON experiment config")
        if out:
            p.add_argument("--out", "-o", default=None,
                           help="output directory (default: ./out/<subcommand>)")
        p.add_argument("--seed", type=int, help="override master_seed")
        p.add_argument("--trials", type=int, help="override trials")
        p.add_argument("--grid-size", type=int, help="override grid_size")
        return p

    common(sub.add_parser("weights", help="optimal shift-domain weights and beampattern"))
    common(sub.add_parser("spectrum", help="MUSIC pseudo-spectra and resolution rates"))
    p = common(sub.add_parser("rmse-sweep", help="RMSE versus SNR"))
    p.add_argument("--export-snapshots", action="store_true",
                   help="also write every snapshot and per-trial estimates")
    common(sub.add_parser("timing", help="build + SVD running time versus P"))
    p = common(sub.add_parser("recover", help="estimate DOAs from a snapshot file"), out=False)
    p.add_argument("--snapshot", "-s", required=True, help="CSV with header re,im")
    p.add_argument("--full-precision", action="store_true",
                   help="print round-trip float representations instead of 4 decimals")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        cfg = load_config(args.config, args.command)
        if args.seed is not None:
            cfg["master_seed"] = args.seed
        if args.trials is not None:
            cfg["trials"] = args.trials
        if args.grid_size is not None:
            cfg["grid_size"] = args.grid_size
        for key in ("master_seed", "trials"):
            if key in cfg and cfg[key] < 0:
                raise ConfigError(f"--{key}: must be non-negative")
        if cfg.get("grid_size", 2) < 2:
            raise ConfigError("--grid-size: must be >= 2")

        if args.command == "recover":
            est = cmd_recover(cfg, args)
            for e in est:
                print(repr(float(e)) if args.full_precision else f"{e:.4f}")
            return EXIT_OK

        out = Path(args.out) if args.out else Path("out") / args.command
        out.mkdir(parents=True, exist_ok=True)
        outputs = COMMANDS[args.command](cfg, out, args)
        _manifest(out, cfg, outputs)
        log.info("wrote %s to %s", ", ".join(outputs), out)
        return EXIT_OK
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (S3Error, ValueError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main(argv=None) -> None:
    sys.exit(run(argv))
