"""Command-line front end: parameter sweeps, oracle verification and state inspection.

Settings come from three layers: built-in defaults, an optional flat JSON config
file (``--config``), then command-line flags, each overriding the one before.

Exit codes: 0 success, 1 invalid configuration, 2 verification failure, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import cmath
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy.stats import binom

from . import __version__
from .detection import Scheme, sensitivity_curve, sensitivity_oracle
from .interferometer import BeamSplitter, Scenario
from .qfi import qfi_oracle, qfi_report_su2
from .states import Su2CoherentParams, input_moments, input_state, su2_coherent, two_j_of
from .verify import OBSERVABLE_OF, run_suites

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_IO = 0, 1, 2, 3
COMMANDS = ("qfi-sweep", "sensitivity-sweep", "verify", "state-info")
DEFAULT_SEED = 20240607


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Range:
    start: float
    stop: float
    count: int

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)

    def __str__(self) -> str:
        return f"{self.start!r}:{self.stop!r}:{self.count}"


@dataclass
class SweepConfig:
    command: str
    j: float = 1.0
    lambda_mag: float = 1.0
    lambda_phase: float = 0.0
    tau_sq: object = None
    tau_p_sq: float = 0.5
    phi_start: float = 0.0
    phi_stop: float = 2 * math.pi
    phi_count: int = 2000
    scheme: list = field(default_factory=lambda: ["smi", "di", "bh"])
    scenario: str = "a"
    phi_l: float | None = None
    format: str = "csv"
    out: str | None = None
    seed: int = DEFAULT_SEED
    oracle: bool = False
    tolerance: float | None = None
    samples: int = 40
    workers: int = 1

    @property
    def params(self) -> Su2CoherentParams:
        return Su2CoherentParams(self.j, cmath.rect(self.lambda_mag, self.lambda_phase))

    def as_metadata(self) -> dict:
        d = asdict(self)
        d["tau_sq"] = str(self.tau_sq) if isinstance(self.tau_sq, Range) else self.tau_sq
        # the output path and thread count do not affect the data
        d.pop("out")
        d.pop("workers")
        return d


# keys a config file may set, with the parser applied to each value
def _parse_half_integer(value) -> float:
    try:
        j = float(Fraction(str(value)))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"j must be a positive half-integer, got {value!r}") from None
    try:
        two_j_of(j)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return j


def _parse_float(name):
    def parse(value):
        try:
            x = float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{name} must be a number, got {value!r}") from None
        if not math.isfinite(x):
            raise ConfigError(f"{name} must be finite, got {value!r}")
        return x

    return parse


def _parse_int(name, minimum):
    def parse(value):
        if isinstance(value, bool):
            raise ConfigError(f"{name} must be an integer, got {value!r}")
        try:
            x = int(str(value))
        except ValueError:
            raise ConfigError(f"{name} must be an integer, got {value!r}") from None
        if x < minimum:
            raise ConfigError(f"{name} must be >= {minimum}, got {x}")
        return x

    return parse


def _parse_unit(name):
    base = _parse_float(name)

    def parse(value):
        x = base(value)
        if not 0.0 <= x <= 1.0:
            raise ConfigError(f"{name} must lie in [0, 1], got {x!r}")
        return x

    return parse


def _parse_tau_sq(value):
    """A single value or ``start:stop:count``."""
    unit = _parse_unit("tau_sq")
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return unit(value)
    parts = str(value).split(":")
    if len(parts) == 1:
        return unit(parts[0])
    if len(parts) != 3:
        raise ConfigError(f"tau_sq range must be start:stop:count, got {value!r}")
    start, stop = unit(parts[0]), unit(parts[1])
    count = _parse_int("tau_sq count", 2)(parts[2])
    if not start < stop:
        raise ConfigError(f"tau_sq range must have start < stop, got {value!r}")
    return Range(start, stop, count)


def _parse_choice(name, choices):
    def parse(value):
        v = str(value).lower()
        if v not in choices:
            raise ConfigError(f"{name} must be one of {sorted(choices)}, got {value!r}")
        return v

    return parse


def _parse_schemes(value):
    items = value if isinstance(value, list) else str(value).replace(",", " ").split()
    pick = _parse_choice("scheme", {s.value for s in Scheme})
    out = []
    for item in items:
        s = pick(item)
        if s not in out:
            out.append(s)
    if not out:
        raise ConfigError("at least one scheme is required")
    return out


def _parse_bool(value):
    if isinstance(value, bool):
        return value
    raise ConfigError(f"oracle must be true or false, got {value!r}")


def _optional(parse):
    return lambda value: None if value is None else parse(value)


PARSERS = {
    "j": _parse_half_integer,
    "lambda_mag": _parse_float("lambda_mag"),
    "lambda_phase": _parse_float("lambda_phase"),
    "tau_sq": _parse_tau_sq,
    "tau_p_sq": _parse_unit("tau_p_sq"),
    "phi_start": _parse_float("phi_start"),
    "phi_stop": _parse_float("phi_stop"),
    "phi_count": _parse_int("phi_count", 2),
    "scheme": _parse_schemes,
    "scenario": _parse_choice("scenario", {s.value for s in Scenario}),
    "phi_l": _optional(_parse_float("phi_l")),
    "format": _parse_choice("format", {"csv", "json"}),
    "out": _optional(str),
    "seed": _parse_int("seed", 0),
    "oracle": _parse_bool,
    "tolerance": _optional(_parse_float("tolerance")),
    "samples": _parse_int("samples", 1),
    "workers": _parse_int("workers", 1),
}


def load_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a flat JSON object")
    unknown = sorted(set(data) - set(PARSERS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return data


def build_config(command: str, file_values: dict, flag_values: dict) -> SweepConfig:
    cfg = SweepConfig(command=command)
    if command == "qfi-sweep":
        cfg.tau_sq = Range(0.0, 1.0, 101)
    else:
        cfg.tau_sq = 0.5
    merged = {**file_values, **{k: v for k, v in flag_values.items() if v is not None}}
    for key, value in merged.items():
        setattr(cfg, key, PARSERS[key](value))
    _check(cfg)
    return cfg


def _check(cfg: SweepConfig) -> None:
    if cfg.lambda_mag < 0:
        raise ConfigError(f"lambda_mag must be non-negative, got {cfg.lambda_mag!r}")
    if not cfg.phi_start < cfg.phi_stop:
        raise ConfigError("phi range must have phi_start < phi_stop")
    if cfg.tolerance is not None and cfg.tolerance < 0:
        raise ConfigError("tolerance must be non-negative")
    if cfg.command != "qfi-sweep" and isinstance(cfg.tau_sq, Range):
        raise ConfigError(f"{cfg.command} takes a single tau_sq value")
    if cfg.command == "sensitivity-sweep" and "bh" in cfg.scheme and cfg.scenario == "c":
        raise ConfigError("homodyne detection is defined for scenarios a and b only")


# output


def format_value(x) -> str:
    """17 significant digits; infinities as ``inf``; flags as 0/1."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        raise ValueError("NaN reached the output layer")
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _json_token(x) -> str:
    text = format_value(x)
    return f'"{text}"' if "inf" in text else text


@dataclass
class Dataset:
    columns: list
    rows: list
    metadata: dict


def render_csv(ds: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ds.columns)
    for row in ds.rows:
        writer.writerow([format_value(v) for v in row])
    for line in json.dumps(ds.metadata, sort_keys=True, indent=1).splitlines():
        buf.write(f"# {line}\n")
    return buf.getvalue()


def render_json(ds: Dataset) -> str:
    lines = ["{", f'  "columns": {json.dumps(ds.columns)},', '  "rows": [']
    body = ["    [" + ", ".join(_json_token(v) for v in row) + "]" for row in ds.rows]
    lines.append(",\n".join(body))
    lines.append("  ],")
    lines.append('  "metadata": ' + json.dumps(ds.metadata, sort_keys=True))
    lines.append("}")
    return "\n".join(line for line in lines if line) + "\n"


def write_atomic(path: str, text: str) -> None:
    """Write through a sibling temporary file so a failure never leaves a partial file."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".su2mzi-", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(cfg: SweepConfig, text: str) -> None:
    if cfg.out is None:
        sys.stdout.write(text)
    else:
        write_atomic(cfg.out, text)


def _metadata(cfg: SweepConfig, **extra) -> dict:
    return {"tool": "su2mzi", "version": __version__, "command": cfg.command, "config": cfg.as_metadata(), **extra}


def _map(cfg: SweepConfig, fn, items):
    if cfg.workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(fn, items))


# commands


def run_qfi_sweep(cfg: SweepConfig) -> Dataset:
    p = cfg.params
    grid = cfg.tau_sq.values() if isinstance(cfg.tau_sq, Range) else np.array([cfg.tau_sq])
    columns = ["tau_sq", "f_a", "f_b", "f_c", "f_sql", "qcrb_a", "qcrb_b", "qcrb_c", "sql", "degenerate"]
    if cfg.oracle:
        columns += ["oracle_f_a", "oracle_f_b", "oracle_f_c"]
    state = input_state(p) if cfg.oracle else None

    def row(tau_sq):
        bs1 = BeamSplitter.from_tau_sq(tau_sq)
        r = qfi_report_su2(p, bs1)
        out = [tau_sq, r.f_a, r.f_b, r.f_c, r.f_sql, r.qcrb_a, r.qcrb_b, r.qcrb_c, r.sql, r.degenerate]
        if cfg.oracle:
            out += [qfi_oracle(state, bs1, s) for s in "abc"]
        return out

    return Dataset(columns, _map(cfg, row, grid), _metadata(cfg))


def run_sensitivity_sweep(cfg: SweepConfig) -> Dataset:
    p = cfg.params
    bs1, bs2 = BeamSplitter.from_tau_sq(cfg.tau_sq), BeamSplitter.from_tau_sq(cfg.tau_p_sq)
    phis = np.linspace(cfg.phi_start, cfg.phi_stop, cfg.phi_count)
    m = input_moments(p)
    curves = {
        s: sensitivity_curve(s, p, bs1, bs2, phis, scenario=cfg.scenario, phi_l=cfg.phi_l, moments=m) for s in cfg.scheme
    }
    report = qfi_report_su2(p, bs1)
    columns = ["phi"]
    columns += [f"delta_phi_{s}" for s in cfg.scheme]
    columns += ["qcrb_a", "qcrb_b", "qcrb_c", "sql"]
    columns += [f"divergent_{s}" for s in cfg.scheme]
    if cfg.oracle:
        columns += [f"oracle_{s}" for s in cfg.scheme]
    state = input_state(p) if cfg.oracle else None

    def row(k):
        phi = float(phis[k])
        vals = [float(curves[s][k]) for s in cfg.scheme]
        out = [phi, *vals, report.qcrb_a, report.qcrb_b, report.qcrb_c, report.sql]
        out += [math.isinf(v) for v in vals]
        if cfg.oracle:
            out += [
                sensitivity_oracle(state, bs1, bs2, cfg.scenario, phi, OBSERVABLE_OF[Scheme(s)], phi_l=cfg.phi_l)
                for s in cfg.scheme
            ]
        return out

    return Dataset(columns, _map(cfg, row, range(len(phis))), _metadata(cfg))


def run_state_info(cfg: SweepConfig) -> Dataset:
    p = cfg.params
    amps = su2_coherent(p).amplitudes
    m = input_moments(p)
    law = binom.pmf(np.arange(p.two_j + 1), p.two_j, p.binomial_p)
    rows = [[eta, a.real, a.imag, abs(a) ** 2, law[eta]] for eta, a in enumerate(amps)]
    moments = {
        "mean_n": m.mean_n,
        "mean_n_sq": m.mean_n_sq,
        "var_n": m.var_n,
        "nu_re": m.nu.real,
        "nu_im": m.nu.imag,
        "mu_re": m.mu.real,
        "mu_im": m.mu.imag,
        "nbar": m.nbar,
    }
    moments = {k: format_value(v) for k, v in moments.items()}
    return Dataset(
        ["eta", "amplitude_re", "amplitude_im", "probability", "binomial"],
        rows,
        _metadata(cfg, moments=moments),
    )


def run_verify(cfg: SweepConfig) -> dict:
    report = run_suites(cfg.seed, tolerance=cfg.tolerance, samples=cfg.samples, workers=cfg.workers)
    report["version"] = __version__
    return report


# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # every default is None, so only flags given explicitly override the config file
    common.add_argument("--config", help="flat JSON file of settings; flags override it")
    common.add_argument("--j", help="angular momentum, e.g. 1, 3/2 or 1.5")
    common.add_argument("--lambda-mag", type=float, help="|lambda| of the spin-coherent state")
    common.add_argument("--lambda-phase", type=float, help="arg(lambda) in radians")
    common.add_argument("--tau-sq", help="|tau|^2 of BS1, a value or start:stop:count")
    common.add_argument("--tau-p-sq", type=float, help="|tau'|^2 of BS2")
    common.add_argument("--phi-start", type=float)
    common.add_argument("--phi-stop", type=float)
    common.add_argument("--phi-count", type=int)
    common.add_argument("--scheme", nargs="+", choices=[s.value for s in Scheme])
    common.add_argument("--scenario", choices=[s.value for s in Scenario])
    common.add_argument("--phi-l", type=float, help="homodyne local phase; locked to phi when omitted")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--out", help="output path; stdout when omitted")
    common.add_argument("--seed", type=int, help="seed for the verification draws")
    common.add_argument("--oracle", action="store_true", default=None, help="add finite-difference oracle columns")
    common.add_argument("--tolerance", type=float, help="override every verification tolerance")
    common.add_argument("--samples", type=int, help="random points per verification suite")
    common.add_argument("--workers", type=int, help="threads evaluating grid points")

    parser = _Parser(prog="su2mzi", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"su2mzi {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        file_values = load_config_file(args.config) if args.config else {}
        cfg = build_config(args.command, file_values, flags)
        if cfg.command == "verify":
            report = run_verify(cfg)
            emit(cfg, json.dumps(report, sort_keys=True, indent=2) + "\n")
            return EXIT_OK if report["passed"] else EXIT_VERIFY
        runner = {"qfi-sweep": run_qfi_sweep, "sensitivity-sweep": run_sensitivity_sweep, "state-info": run_state_info}
        ds = runner[cfg.command](cfg)
        emit(cfg, render_csv(ds) if cfg.format == "csv" else render_json(ds))
    except ValueError as exc:
        print(f"su2mzi: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"su2mzi: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
