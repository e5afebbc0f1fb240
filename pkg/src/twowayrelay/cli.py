"""``twr`` command line: design, sweep and selftest.

Exit codes: 0 success, 1 usage or configuration error, 2 degenerate
channel, 3 selftest failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from .channel import SystemConfig, draw_channels, stream
from .errors import ContractViolation, DegenerateChannelError, TwrError
from .harness import (SimulationConfig, config_at, curves_to_csv, curves_to_json, parse_algorithms,
                      resolve_workers, sweep)
from .serialize import load_channel, solution_to_dict

log = logging.getLogger("twowayrelay.cli")

EXIT_OK, EXIT_USAGE, EXIT_DEGENERATE, EXIT_SELFTEST = 0, 1, 2, 3

# config-file key -> (flag dest, parser)
CONFIG_KEYS = {
    "nt": ("nt", int),
    "nr": ("nr", int),
    "nc": ("nc", int),
    "ns": ("ns", int),
    "sigma2_w": ("sigma2_w", float),
    "sigma2_n1": ("sigma2_n1", float),
    "sigma2_n2": ("sigma2_n2", float),
    "p_t1": ("p_t1", float),
    "p_t2": ("p_t2", float),
    "p_r1": ("p_r1", float),
    "p_r2": ("p_r2", float),
    "modulation": ("modulation", str),
    "ebn0": ("ebn0", str),
    "trials": ("trials", int),
    "symbols": ("symbols", int),
    "seed": ("seed", int),
    "algo": ("algo", str),
    "format": ("format", str),
    "out": ("out", str),
}

DEFAULTS = {
    "nt": 2, "nr": 4, "nc": 2, "ns": None,
    "sigma2_w": 1.0, "sigma2_n1": 1.0, "sigma2_n2": 1.0,
    "p_t1": 1.0, "p_t2": 1.0, "p_r1": 1.0, "p_r2": 1.0,
    "modulation": "qpsk", "ebn0": None, "trials": 200, "symbols": 10_000,
    "seed": 0, "algo": "proposed", "format": "both", "out": None,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_config_file(path) -> dict:
    """Read ``key = value`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from None
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip().lower(), value.strip()
        if not sep or not key:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        dest, conv = CONFIG_KEYS[key]
        try:
            out[dest] = conv(value)
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad value {value!r} for {key}") from None
    return out


def parse_grid(text: str) -> tuple:
    """``start:step:stop`` in dB (inclusive), or a single value."""
    parts = text.split(":")
    try:
        nums = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"bad Eb/N0 grid {text!r}") from None
    if len(nums) == 1:
        return (nums[0],)
    if len(nums) != 3 or nums[1] <= 0 or nums[2] < nums[0]:
        raise UsageError(f"Eb/N0 grid must be start:step:stop with step > 0, got {text!r}")
    start, step, stop = nums
    n = int(round((stop - start) / step))
    if abs(start + n * step - stop) > 1e-9 * max(1.0, abs(stop)):
        n = int((stop - start) / step)
    return tuple(round(start + k * step, 12) for k in range(n + 1))


def merge_settings(args) -> dict:
    settings = dict(DEFAULTS)
    if args.config:
        file_vals = parse_config_file(args.config)
        settings.update(file_vals)
    else:
        file_vals = {}
    for dest, _ in CONFIG_KEYS.values():
        flag = getattr(args, dest, None)
        if flag is None:
            continue
        if dest in file_vals and file_vals[dest] != flag:
            log.warning("--%s=%s overrides config value %s", dest, flag, file_vals[dest])
        settings[dest] = flag
    return settings


def system_config(s: dict) -> SystemConfig:
    try:
        return SystemConfig(
            n_t=s["nt"], n_r=s["nr"], n_c=s["nc"], n_s=s["ns"],
            sigma2_w=s["sigma2_w"], sigma2_n1=s["sigma2_n1"], sigma2_n2=s["sigma2_n2"],
            p_t1=s["p_t1"], p_t2=s["p_t2"], p_r1=s["p_r1"], p_r2=s["p_r2"], modulation=s["modulation"],
        )
    except ContractViolation as exc:
        raise UsageError(f"invalid configuration: {exc}") from None


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None


def cmd_design(args) -> int:
    from .design import design

    s = merge_settings(args)
    cfg = system_config(s)
    if s["ebn0"] is not None:
        grid = parse_grid(s["ebn0"])
        if len(grid) != 1:
            raise UsageError("design takes a single --ebn0 value")
        cfg, _ = config_at(cfg, grid[0])
    if args.channel:
        try:
            ch = load_channel(args.channel, cfg.n_r)
        except (ContractViolation, OSError) as exc:
            raise UsageError(f"{args.channel}: {exc}") from None
        source = {"channel_file": str(args.channel)}
    else:
        ch = draw_channels(cfg, stream(s["seed"], 0, "H"), stream(s["seed"], 0, "G"))
        source = {"seed": s["seed"]}
    if (ch.n_t, ch.n_r, ch.n_c) != (cfg.n_t, cfg.n_r, cfg.n_c):
        raise UsageError(
            f"channel dimensions (n_t={ch.n_t}, n_r={ch.n_r}, n_c={ch.n_c}) do not match the configuration"
        )
    sol = design(ch, cfg)
    doc = solution_to_dict(sol, cfg, extra=source)
    text = json.dumps(doc, indent=1) + "\n"
    if s["out"]:
        _write(Path(s["out"]), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _outputs(out: str | None, fmt: str):
    if fmt not in ("csv", "json", "both"):
        raise UsageError(f"--format must be csv, json or both, got {fmt!r}")
    base = Path(out) if out else Path("ber")
    if base.suffix in (".csv", ".json"):
        base = base.with_suffix("")
    return [(f, base.with_suffix("." + f)) for f in (("csv", "json") if fmt == "both" else (fmt,))]


def cmd_sweep(args) -> int:
    s = merge_settings(args)
    cfg = system_config(s)
    grid = parse_grid(s["ebn0"] or "0:4:12")
    try:
        algos = parse_algorithms(s["algo"])
        sim = SimulationConfig(base=cfg, ebn0_grid_db=grid, trials=s["trials"], symbols_per_trial=s["symbols"],
                               master_seed=s["seed"], algorithms=tuple(algos), workers=resolve_workers(args.workers))
    except ContractViolation as exc:
        raise UsageError(str(exc)) from None
    outputs = _outputs(s["out"], s["format"])
    # fail before the (long) sweep rather than after it
    for _, path in outputs:
        if path.is_dir():
            raise UsageError(f"cannot write {path}: is a directory")
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise UsageError(f"cannot write {path}: {exc.strerror}") from None
        if not os.access(path.parent, os.W_OK):
            raise UsageError(f"cannot write {path}: permission denied")

    def progress(msg):
        print(msg, file=sys.stderr, flush=True)

    curves = sweep(sim, progress=progress)
    config = sim.to_dict()
    for fmt, path in outputs:
        _write(path, curves_to_csv(curves, config) if fmt == "csv" else curves_to_json(curves, config))
        print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


def _inject_fault(name: str) -> None:
    from . import linalg

    if name == "svd-order":
        original = linalg.svd_ascending

        def descending(m):
            r = original(m)
            return dataclasses.replace(r, U=r.U[:, ::-1], sigma=r.sigma[::-1], V=r.V[:, ::-1])

        linalg.svd_ascending = descending
    else:
        raise UsageError(f"unknown fault {name!r}")


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    if args.inject_fault:
        _inject_fault(args.inject_fault)
    failed = run_selftest(report=lambda m: print(m))
    if failed:
        print(f"selftest FAILED: {', '.join(failed)}", file=sys.stderr)
        return EXIT_SELFTEST
    print("selftest passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value configuration file")
    common.add_argument("--nt", type=int, help="antennas per terminal")
    common.add_argument("--nr", type=int, help="antennas per relay")
    common.add_argument("--nc", type=int, help="number of relays")
    common.add_argument("--ns", type=int, help="streams per terminal (default: nt)")
    common.add_argument("--ebn0", metavar="A:B:C", help="Eb/N0 grid in dB, start:step:stop")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--out", metavar="PATH", help="output path")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="twr", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("design", parents=[common], help="closed-form design for one channel realization")
    d.add_argument("--channel", metavar="PATH", help="channel JSON (H1, H2, G1, G2); drawn from --seed otherwise")
    d.set_defaults(func=cmd_design)

    s = sub.add_parser("sweep", parents=[common], help="Monte Carlo BER sweep")
    s.add_argument("--trials", type=int)
    s.add_argument("--symbols", type=int, help="QPSK symbols per terminal per trial")
    s.add_argument("--algo", metavar="LIST", help="comma list of proposed, baseline:N")
    s.add_argument("--format", choices=("csv", "json", "both"))
    s.add_argument("--workers", type=int, help="worker processes (capped by TWR_THREADS)")
    s.set_defaults(func=cmd_sweep)

    t = sub.add_parser("selftest", help="fast invariant suite")
    t.add_argument("--inject-fault", help=argparse.SUPPRESS)
    t.add_argument("-v", "--verbose", action="store_true")
    t.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"twr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateChannelError as exc:
        print(f"twr: degenerate channel: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except TwrError as exc:
        print(f"twr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
