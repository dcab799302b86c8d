"""Config-driven experiment runner with CSV output.

Experiments are described by INI-style files; every section is one scheme
configuration. All commands share one result schema so simulated and
theoretical curves can be merged and plotted together:

    scheme,nt,nrf,nr,m,rotation_deg,source,ebn0_db,ber,bit_errors,bits,frames,seed

Exit codes: 0 success, 2 invalid configuration, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from dataclasses import dataclass

import numpy as np

from .analysis import abep_curve, optimize_rotation
from .baselines import CIOD, MBM, BaselineConfig, baseline_codebook
from .channel import n0_from_ebn0
from .constellation import PSK, QAM, build_rotated
from .encoder import Scheme, SchemeConfig
from .montecarlo import BerCurve, SimPlan, run

CSV_HEADER = "scheme,nt,nrf,nr,m,rotation_deg,source,ebn0_db,ber,bit_errors,bits,frames,seed"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

_SCHEME_KEYS = {
    "ciod_mbm_1": ("nt", "nrf", "nr", "mod_order"),
    "ciod_mbm_2": ("nt", "nrf", "nr", "mod_order"),
    "mbm": ("nrf", "nr", "mod_order"),
    "ciod": ("nr", "mod_order"),
}


class ConfigError(Exception):
    """Invalid experiment description; the message names the offending key."""


@dataclass
class Experiment:
    """One fully resolved section of an experiment file."""

    name: str
    scheme_key: str
    config: object  # SchemeConfig or BaselineConfig
    rotation_deg: float
    ebn0_db: tuple[float, ...]
    max_frames: int
    min_bit_errors: int
    seed: int
    workers: int
    output_path: str | None

    @property
    def nt(self) -> int:
        return self.config.nt

    @property
    def nrf(self) -> int:
        return self.config.nrf

    def plan(self) -> SimPlan:
        return SimPlan(
            config=self.config,
            ebn0_db=self.ebn0_db,
            max_frames=self.max_frames,
            min_bit_errors=self.min_bit_errors,
            seed=self.seed,
            workers=self.workers,
        )


def _get(section, name: str, key: str, parse, default=None, required: bool = False):
    if key not in section:
        if required:
            raise ConfigError(f"section '{name}': missing required key '{key}'")
        return default
    raw = section[key].strip()
    try:
        return parse(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"section '{name}': invalid value for key '{key}': {raw!r}") from exc


def _parse_section(
    name: str, section, overrides: argparse.Namespace, resolve_rotation: bool = True
) -> Experiment:
    scheme_key = _get(section, name, "scheme", str, required=True).lower()
    if scheme_key not in _SCHEME_KEYS:
        raise ConfigError(
            f"section '{name}': key 'scheme' must be one of {sorted(_SCHEME_KEYS)}, "
            f"got {scheme_key!r}"
        )
    for key in _SCHEME_KEYS[scheme_key]:
        if key not in section:
            raise ConfigError(f"section '{name}': missing required key '{key}'")

    mod_order = _get(section, name, "mod_order", int, required=True)
    mod_kind = _get(section, name, "mod_kind", str, default=PSK).lower()
    if mod_kind not in (PSK, QAM):
        raise ConfigError(f"section '{name}': key 'mod_kind' must be 'psk' or 'qam'")
    nr = _get(section, name, "nr", int, required=True)

    rotation_raw = _get(section, name, "rotation_deg", str, default="auto").lower()
    seed = overrides.seed if overrides.seed is not None else _get(
        section, name, "seed", int, default=0
    )
    workers = overrides.workers if overrides.workers is not None else _get(
        section, name, "workers", int, default=1
    )

    start = _get(section, name, "ebn0_start_db", float, required=True)
    stop = _get(section, name, "ebn0_stop_db", float, required=True)
    step = _get(section, name, "ebn0_step_db", float, required=True)
    if step <= 0 or stop < start:
        raise ConfigError(
            f"section '{name}': keys 'ebn0_start_db'/'ebn0_stop_db'/'ebn0_step_db' "
            "must describe a non-empty increasing grid"
        )
    grid = tuple(float(v) for v in np.arange(start, stop + step / 2.0, step))

    def build_config(rotation_deg: float):
        constellation = build_rotated(mod_kind, mod_order, rotation_deg)
        if scheme_key in ("ciod_mbm_1", "ciod_mbm_2"):
            return SchemeConfig(
                scheme=Scheme(scheme_key),
                nt=_get(section, name, "nt", int, required=True),
                nrf=_get(section, name, "nrf", int, required=True),
                nr=nr,
                constellation=constellation,
            )
        if scheme_key == "mbm":
            return BaselineConfig(
                kind=MBM,
                nrf=_get(section, name, "nrf", int, required=True),
                nr=nr,
                constellation=constellation,
            )
        return BaselineConfig(kind=CIOD, nrf=0, nr=nr, constellation=constellation)

    try:
        if rotation_raw == "auto" and resolve_rotation and scheme_key != "mbm":
            rotation = optimize_rotation(build_config(0.0)).theta_deg
        elif rotation_raw == "auto":
            rotation = 0.0  # mbm: a rotation does not change single-slot distances
        else:
            rotation = float(rotation_raw)
        config = build_config(rotation)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"section '{name}': {exc}") from exc

    return Experiment(
        name=name,
        scheme_key=scheme_key,
        config=config,
        rotation_deg=rotation,
        ebn0_db=grid,
        max_frames=_get(section, name, "max_frames", int, default=1_000_000),
        min_bit_errors=_get(section, name, "min_bit_errors", int, default=200),
        seed=seed,
        workers=workers,
        output_path=overrides.output or section.get("output_path"),
    )


def load_experiments(
    path: str, overrides: argparse.Namespace, resolve_rotation: bool = True
) -> list[Experiment]:
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise OSError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc
    experiments = [
        _parse_section(name, parser[name], overrides, resolve_rotation)
        for name in parser.sections()
    ]
    if not experiments:
        raise ConfigError(f"config file {path} defines no experiment sections")
    return experiments


def _format_float(value: float) -> str:
    return repr(float(value))


def _rows_from_curve(exp: Experiment, curve: BerCurve) -> list[str]:
    rows = []
    for p in curve.points:
        rows.append(
            ",".join(
                [
                    exp.scheme_key,
                    str(exp.nt),
                    str(exp.nrf),
                    str(exp.config.nr),
                    str(exp.config.constellation.order),
                    _format_float(exp.rotation_deg),
                    "sim",
                    _format_float(p.ebn0_db),
                    _format_float(p.ber),
                    str(p.bit_errors),
                    str(p.bits),
                    str(p.frames),
                    str(exp.seed),
                ]
            )
        )
    return rows


def _rows_from_theory(exp: Experiment, bers: np.ndarray) -> list[str]:
    rows = []
    for db, ber in zip(exp.ebn0_db, bers):
        rows.append(
            ",".join(
                [
                    exp.scheme_key,
                    str(exp.nt),
                    str(exp.nrf),
                    str(exp.config.nr),
                    str(exp.config.constellation.order),
                    _format_float(exp.rotation_deg),
                    "theory",
                    _format_float(db),
                    _format_float(ber),
                    "0",
                    "0",
                    "0",
                    str(exp.seed),
                ]
            )
        )
    return rows


def _write_lines(path: str | None, lines: list[str]) -> None:
    if path is None:
        raise ConfigError("missing required key 'output_path' (or pass --output)")
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write output file {path}: {exc}") from exc


def _theory_bers(exp: Experiment) -> np.ndarray:
    n0s = np.array([n0_from_ebn0(exp.config, db) for db in exp.ebn0_db])
    if isinstance(exp.config, SchemeConfig):
        return abep_curve(exp.config, None, n0s, exp.config.nr)
    return abep_curve(exp.config, baseline_codebook(exp.config), n0s, exp.config.nr)


def ebn0_at_ber(ebn0_db: np.ndarray, ber: np.ndarray, target: float) -> float:
    """Eb/N0 where the curve crosses `target`, by log-linear interpolation."""
    for i in range(len(ber) - 1):
        b0, b1 = ber[i], ber[i + 1]
        if b0 <= 0 or b1 <= 0:
            continue
        if (b0 >= target >= b1) or (b0 <= target <= b1):
            if b0 == b1:
                return float(ebn0_db[i])
            frac = (np.log10(target) - np.log10(b0)) / (np.log10(b1) - np.log10(b0))
            return float(ebn0_db[i] + frac * (ebn0_db[i + 1] - ebn0_db[i]))
    raise ValueError(f"curve never crosses BER {target:g} on the simulated grid")


def cmd_simulate(args: argparse.Namespace) -> int:
    experiments = load_experiments(args.config, args)
    lines = [CSV_HEADER]
    for exp in experiments:
        curve = run(exp.plan())
        lines += _rows_from_curve(exp, curve)
    _write_lines(experiments[0].output_path, lines)
    return EXIT_OK


def cmd_abep(args: argparse.Namespace) -> int:
    experiments = load_experiments(args.config, args)
    lines = [CSV_HEADER]
    for exp in experiments:
        lines += _rows_from_theory(exp, _theory_bers(exp))
    _write_lines(experiments[0].output_path, lines)
    return EXIT_OK


def cmd_optimize_angle(args: argparse.Namespace) -> int:
    experiments = load_experiments(args.config, args, resolve_rotation=False)
    trace_lines = ["section,theta_deg,delta_min"]
    for exp in experiments:
        if exp.scheme_key == "mbm":
            raise ConfigError(
                f"section '{exp.name}': key 'scheme' = mbm has no rotation to optimize"
            )
        base = build_rotated(
            exp.config.constellation.kind, exp.config.constellation.order, 0.0
        )
        cfg0 = (
            SchemeConfig(
                scheme=exp.config.scheme,
                nt=exp.config.nt,
                nrf=exp.config.nrf,
                nr=exp.config.nr,
                constellation=base,
            )
            if isinstance(exp.config, SchemeConfig)
            else BaselineConfig(
                kind=exp.config.kind, nrf=exp.config.nrf, nr=exp.config.nr, constellation=base
            )
        )
        result = optimize_rotation(cfg0)
        print(
            f"{exp.name}: theta_star={result.theta_deg:.4f} deg "
            f"delta_min={result.delta_min:.6g}"
        )
        for t, d in zip(result.grid_theta, result.grid_delta):
            trace_lines.append(f"{exp.name},{_format_float(t)},{_format_float(d)}")
    if experiments[0].output_path is not None:
        _write_lines(experiments[0].output_path, trace_lines)
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    experiments = load_experiments(args.config, args)
    if len(experiments) < 2:
        raise ConfigError("compare needs at least two scheme sections")
    etas = [exp.config.spectral_efficiency for exp in experiments]
    for exp, eta in zip(experiments[1:], etas[1:]):
        if eta != etas[0]:
            raise ConfigError(
                f"section '{exp.name}': spectral efficiency {eta} does not match "
                f"section '{experiments[0].name}' ({etas[0]})"
            )

    lines = [CSV_HEADER]
    crossings = []
    for exp in experiments:
        curve = run(exp.plan())
        lines += _rows_from_curve(exp, curve)
        try:
            crossings.append(ebn0_at_ber(curve.ebn0_db, curve.ber, args.target_ber))
        except ValueError as exc:
            raise ConfigError(f"section '{exp.name}': {exc}") from exc
    _write_lines(experiments[0].output_path, lines)

    reference = experiments[0]
    print(f"reference: {reference.name} reaches BER {args.target_ber:g} at {crossings[0]:.2f} dB")
    for exp, crossing in zip(experiments[1:], crossings[1:]):
        gap = crossing - crossings[0]
        print(f"gap_db {exp.name} vs {reference.name}: {gap:.2f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ciodmbm", description="Interleaved MBM link-level experiments"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, handler, extra in (
        ("simulate", cmd_simulate, ()),
        ("abep", cmd_abep, ()),
        ("optimize-angle", cmd_optimize_angle, ()),
        ("compare", cmd_compare, ("target_ber",)),
    ):
        p = sub.add_parser(name)
        p.add_argument("config", help="experiment description file")
        p.add_argument("--output", default=None, help="override output_path")
        p.add_argument("--seed", type=int, default=None, help="override seed")
        p.add_argument("--workers", type=int, default=None, help="override workers")
        if "target_ber" in extra:
            p.add_argument("--target-ber", type=float, default=1e-4, dest="target_ber")
        p.set_defaults(handler=handler)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
