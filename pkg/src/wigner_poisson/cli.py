"""Configuration parsing, run orchestration, and bit-exact output formats.

Config files are flat ``key = value`` text with ``#`` comments; every CLI
flag has a matching key and flags override file values.  Snapshots are
little-endian binary (magic "WPSN"), diagnostics go to CSV with 17
significant digits, and each run writes a manifest whose config echo
re-parses to the identical configuration.
"""

import argparse
import struct
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .lowrank import LowRankFactors
from .solver import SolverConfig, run

SNAPSHOT_MAGIC = b"WPSN"
FACTORS_MAGIC = b"WPLR"

CSV_HEADER = ("t,mass,mass_rel_err,momentum,momentum_err,ee_norm,"
              "rank,rank95,rank99,rank9999,rank999999,rank99999999,imag_residual")

_BOOL = {"true": True, "false": False, "1": True, "0": False}

# key -> (type, SolverConfig field)
_KEYS = {
    "problem": (str, "problem"),
    "H": (float, "H"),
    "nx": (int, "Nx"),
    "nv": (int, "Nv"),
    "lx": (float, "Lx"),
    "lv": (float, "Lv"),
    "cfl": (float, "cfl"),
    "dt": (float, "dt"),
    "tfinal": (float, "T"),
    "solver": (str, "mode"),
    "weno_order": (int, "weno_order"),
    "eps_c": (float, "eps_c"),
    "eps_s": (float, "eps_s"),
    "p": (int, "p"),
    "max_rank": (int, "max_rank"),
    "seed": (int, "rng_seed"),
    "snapshot_every": (int, "snapshot_every"),
    "out": (str, "out_dir"),
    "fit_t0": (float, "fit_window0"),
    "fit_t1": (float, "fit_window1"),
    "track_ranks": (bool, "track_ranks"),
}

_REQUIRED = ("problem", "H", "nx", "nv", "tfinal")


class ConfigError(ValueError):
    pass


def _parse_value(key, text):
    typ = _KEYS[key][0]
    try:
        if typ is bool:
            return _BOOL[text.strip().lower()]
        return typ(text.strip())
    except (ValueError, KeyError):
        raise ConfigError(f"invalid value for '{key}': {text.strip()!r}") from None


def parse_config(text, overrides=None):
    """Parse key = value text (with # comments) into a SolverConfig.

    overrides: mapping of config keys taking precedence over file values
    (used for CLI flags).  Unknown and duplicate keys are rejected, as are
    missing required keys and giving both cfl and dt.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        values[key] = _parse_value(key, val)
    if overrides:
        live = {k: v for k, v in overrides.items() if v is not None}
        # a lone cfl/dt flag switches stepping mode, superseding both file keys
        if ("cfl" in live) != ("dt" in live):
            values.pop("cfl", None)
            values.pop("dt", None)
        for key, val in live.items():
            if key not in _KEYS:
                raise ConfigError(f"unknown key '{key}'")
            values[key] = val
    missing = [k for k in _REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    if ("cfl" in values) == ("dt" in values):
        raise ConfigError("exactly one of 'cfl' and 'dt' is required")

    fit = [0.0, 20.0]
    kwargs = {}
    for key, val in values.items():
        field = _KEYS[key][1]
        if field == "fit_window0":
            fit[0] = val
        elif field == "fit_window1":
            fit[1] = val
        else:
            kwargs[field] = val
    kwargs["fit_window"] = tuple(fit)
    try:
        return SolverConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def format_config(config):
    """Config echo that parse_config maps back to an identical SolverConfig."""
    lines = [
        f"problem = {config.problem}",
        f"H = {config.H!r}",
        f"nx = {config.Nx}",
        f"nv = {config.Nv}",
        f"lx = {config.Lx!r}",
        f"lv = {config.Lv!r}",
        f"cfl = {config.cfl!r}" if config.cfl is not None else f"dt = {config.dt!r}",
        f"tfinal = {config.T!r}",
        f"solver = {config.mode}",
        f"weno_order = {config.weno_order}",
        f"eps_c = {config.eps_c!r}",
        f"eps_s = {config.eps_s!r}",
        f"p = {config.p}",
        f"seed = {config.rng_seed}",
        f"snapshot_every = {config.snapshot_every}",
        f"fit_t0 = {config.fit_window[0]!r}",
        f"fit_t1 = {config.fit_window[1]!r}",
        f"track_ranks = {'true' if config.track_ranks else 'false'}",
    ]
    if config.max_rank is not None:
        lines.append(f"max_rank = {config.max_rank}")
    if config.out_dir is not None:
        lines.append(f"out = {config.out_dir}")
    return "\n".join(lines) + "\n"


def _dense_values(solution):
    if isinstance(solution, LowRankFactors):
        return solution.expand()
    return np.asarray(solution, dtype=float)


def write_snapshot(solution, grid, t, H, path):
    """Little-endian binary snapshot; low-rank input is expanded."""
    values = np.ascontiguousarray(_dense_values(solution), dtype="<f8")
    if values.shape != (grid.Nx, grid.Nv):
        raise ValueError(f"snapshot shape {values.shape} does not match grid")
    header = SNAPSHOT_MAGIC + struct.pack("<IQQdd", 1, grid.Nx, grid.Nv, t, H)
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(values.tobytes(order="C"))
    except OSError as exc:
        raise OSError(f"cannot write snapshot {path}: {exc}") from exc


def read_snapshot(path):
    """Read back a WPSN file; returns (values, t, H)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: not a WPSN snapshot")
    version, nx, nv, t, h = struct.unpack_from("<IQQdd", raw, 4)
    if version != 1:
        raise ValueError(f"{path}: unsupported snapshot version {version}")
    values = np.frombuffer(raw, dtype="<f8", offset=40).reshape(nx, nv).copy()
    return values, t, h


def write_factors(factors, grid, t, H, path):
    """Companion WPLR file storing U, sigma, V of a real low-rank solution."""
    U = np.ascontiguousarray(factors.U, dtype="<f8")
    s = np.ascontiguousarray(factors.sigma, dtype="<f8")
    V = np.ascontiguousarray(factors.V, dtype="<f8")
    header = FACTORS_MAGIC + struct.pack("<IQQQdd", 1, grid.Nx, grid.Nv,
                                         factors.rank, t, H)
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(U.tobytes(order="C"))
            fh.write(s.tobytes())
            fh.write(V.tobytes(order="C"))
    except OSError as exc:
        raise OSError(f"cannot write factors {path}: {exc}") from exc


def read_factors(path):
    """Read back a WPLR file; returns (LowRankFactors, t, H)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != FACTORS_MAGIC:
        raise ValueError(f"{path}: not a WPLR factor file")
    version, nx, nv, r, t, h = struct.unpack_from("<IQQQdd", raw, 4)
    if version != 1:
        raise ValueError(f"{path}: unsupported factor file version {version}")
    off = 4 + struct.calcsize("<IQQQdd")
    U = np.frombuffer(raw, dtype="<f8", offset=off, count=nx * r).reshape(nx, r)
    off += 8 * nx * r
    s = np.frombuffer(raw, dtype="<f8", offset=off, count=r)
    off += 8 * r
    V = np.frombuffer(raw, dtype="<f8", offset=off, count=nv * r).reshape(nv, r)
    return LowRankFactors(U.copy(), s.copy(), V.copy()), t, h


def _fmt(x):
    return f"{x:.17g}"


def format_diagnostics(records):
    lines = [CSV_HEADER]
    for r in records:
        ranks = ",".join(str(k) for k in r.ranks_at_thresholds)
        lines.append(f"{_fmt(r.t)},{_fmt(r.mass)},{_fmt(r.mass_rel_err)},"
                     f"{_fmt(r.momentum)},{_fmt(r.momentum_err)},{_fmt(r.ee_norm)},"
                     f"{r.rank},{ranks},{_fmt(r.imag_residual)}")
    return "\n".join(lines) + "\n"


def write_diagnostics(records, path):
    """Deterministic CSV, one row per completed step."""
    try:
        Path(path).write_text(format_diagnostics(records), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write diagnostics {path}: {exc}") from exc


def write_manifest(config, seed, t_start, t_end, outputs, path):
    """Run manifest: config echo plus commented metadata; re-parseable."""
    meta = [
        f"# wigner-poisson run manifest (version {__version__})",
        f"# rng_seed = {seed}",
        f"# wall_start = {t_start!r}",
        f"# wall_end = {t_end!r}",
    ]
    meta += [f"# output: {name}" for name in outputs]
    body = format_config(config)
    try:
        Path(path).write_text("\n".join(meta) + "\n" + body, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write manifest {path}: {exc}") from exc


def run_to_files(config):
    """Run the solver and emit snapshots, diagnostics CSV, and a manifest."""
    out = Path(config.out_dir if config.out_dir is not None else ".")
    out.mkdir(parents=True, exist_ok=True)
    t_start = time.time()
    result = run(config)
    outputs = []
    for step, t, solution in result.snapshots:
        name = f"snapshot_{step:06d}.wpsn"
        write_snapshot(solution, result.grid, t, config.H, out / name)
        outputs.append(name)
        if isinstance(solution, LowRankFactors):
            name = f"snapshot_{step:06d}.wplr"
            write_factors(solution, result.grid, t, config.H, out / name)
            outputs.append(name)
    write_diagnostics(result.records, out / "diagnostics.csv")
    outputs.append("diagnostics.csv")
    write_manifest(config, config.rng_seed, t_start, time.time(),
                   outputs, out / "run_manifest.txt")
    return result


def build_parser():
    parser = argparse.ArgumentParser(
        prog="wigner-poisson",
        description="1D1V Wigner-Poisson solver (full-rank and adaptive-rank)")
    parser.add_argument("--config", metavar="PATH", help="key = value config file")
    parser.add_argument("--problem", choices=("two_stream", "landau"))
    parser.add_argument("--H", type=float, dest="H")
    parser.add_argument("--nx", type=int)
    parser.add_argument("--nv", type=int)
    parser.add_argument("--cfl", type=float)
    parser.add_argument("--dt", type=float)
    parser.add_argument("--tfinal", type=float)
    parser.add_argument("--solver", choices=("full", "adaptive"))
    parser.add_argument("--weno-order", type=int, choices=(3, 5), dest="weno_order")
    parser.add_argument("--eps-c", type=float, dest="eps_c")
    parser.add_argument("--eps-s", type=float, dest="eps_s")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--snapshot-every", type=int, dest="snapshot_every")
    parser.add_argument("--out", metavar="DIR")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            try:
                text = Path(args.config).read_text(encoding="utf-8")
            except OSError as exc:
                print(f"io-error: {exc}", file=sys.stderr)
                return 3
        else:
            text = ""
        overrides = {k: getattr(args, k) for k in
                     ("problem", "H", "nx", "nv", "cfl", "dt", "tfinal",
                      "solver", "weno_order", "eps_c", "eps_s", "seed",
                      "snapshot_every", "out")}
        config = parse_config(text, overrides)
    except ConfigError as exc:
        print(f"config-error: {exc}", file=sys.stderr)
        return 2
    try:
        result = run_to_files(config)
    except OSError as exc:
        print(f"io-error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:
        print(f"runtime-error: {exc}", file=sys.stderr)
        return 1
    last = result.records[-1] if result.records else None
    if last is not None:
        print(f"done: {result.state.step} steps to t = {last.t:g}, "
              f"final rank {last.rank}, wall {result.wall_time:.2f}s")
    else:
        print(f"done: initial state only (T = {config.T:g})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
