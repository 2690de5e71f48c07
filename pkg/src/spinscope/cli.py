"""Command-line front end.

Exit codes: 0 success, 1 invalid input, 2 tolerance failure, 3 file I/O error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import platform
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__, _kernels, oracle, signals
from . import spectrum as spec
from .errors import SpinscopeError, ValidationError
from .estimation import fisher_analysis
from .measurement import NoiseConfig, synthesize_trace
from .protocols import Protocol
from .register import TWO_PI, Register, load_register, register_frames

EXIT_OK, EXIT_INVALID, EXIT_TOLERANCE, EXIT_IO = 0, 1, 2, 3
ORACLE_SUITE_MAX_SPINS = 4


class ToleranceFailure(Exception):
    pass


# --- helpers ---------------------------------------------------------------


def parse_grid(text: str) -> np.ndarray:
    """``start:stop:step`` with ``stop`` included when it lies on the grid."""
    try:
        start, stop, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise ValidationError(f"grid must be start:stop:step, got {text!r}", "grid") from None
    if not all(map(math.isfinite, (start, stop, step))) or step <= 0 or stop < start:
        raise ValidationError(f"invalid grid {text!r}: need step > 0 and stop >= start", "grid")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


def thread_count(arg):
    if arg is not None:
        n = arg
    else:
        raw = os.environ.get("SPINSCOPE_THREADS", "1")
        try:
            n = int(raw)
        except ValueError:
            raise ValidationError(f"SPINSCOPE_THREADS must be an integer, got {raw!r}", "threads") from None
    if n < 1:
        raise ValidationError("threads must be >= 1", "threads")
    return n


def _header(register: Register, seed):
    return {"register_digest": register.digest(), "seed": seed, "version": __version__}


def _write_csv(path, header, columns, rows):
    with open(path, "w", newline="") as fh:
        for key, value in header.items():
            fh.write(f"# {key}={value}\n")
        w = csv.writer(fh)
        w.writerow(columns)
        w.writerows(rows)


def _write_json(path, data):
    Path(path).write_text(json.dumps(data, sort_keys=True, indent=1) + "\n")


def _manifest(out, args, register, seed, started, outputs):
    _write_json(out / "manifest.json", {
        "command": args.command,
        "arguments": {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)},
        "register_digest": register.digest(),
        "seed": seed,
        "version": __version__,
        "kernel_backend": _kernels.BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "wall_time_s": time.perf_counter() - started,
        "outputs": outputs,
    })


def _out_dir(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _default_bright_tau(register: Register):
    """First Larmor bright spot ``pi / w_L`` (mean over spins)."""
    wl = register.larmor_angular()
    if wl.size == 0 or wl.mean() <= 0:
        return 1e-6
    return math.pi / float(wl.mean())


def _protocol(args, register, sweep=None, decay=False) -> Protocol:
    name = args.protocol.replace("-", "_")
    eseem = name in ("5p_eseem", "dd_eseem")
    tau1 = args.tau1 if args.tau1 is not None else (_default_bright_tau(register) if eseem else None)
    tau2 = args.tau2 if args.tau2 is not None else tau1
    pulses = args.pulses if args.pulses is not None else (16 if name in ("dd", "dd_summation", "dd_eseem") else 1)
    return Protocol(name, sweep or args.sweep, pulses, args.tau, tau1, tau2, args.t_free, decay)


_DEFAULT_GRIDS = {"tau": (0.05e-6, 4e-6), "T": (0.0, 499.5e-6), "N": None}


def _grid(args, protocol):
    if args.grid:
        return parse_grid(args.grid)
    if protocol.sweep == "N":
        raise ValidationError("an N sweep needs --grid", "grid")
    lo, hi = _DEFAULT_GRIDS[protocol.sweep]
    if protocol.name == "ramsey":
        hi = 10e-6
    if protocol.name == "hahn":
        hi = 50e-6
    return np.linspace(lo, hi, 1000)


# --- subcommands -----------------------------------------------------------


def cmd_simulate(args):
    started = time.perf_counter()
    register = load_register(args.register)
    protocol = _protocol(args, register, decay=args.decay)
    grid = _grid(args, protocol)
    cfg = None if args.noiseless else NoiseConfig(args.reps, args.photons_bright, args.photons_dark, args.seed)
    trace = synthesize_trace(register, protocol, grid, cfg, thread_count(args.threads))
    out = _out_dir(args.out)
    seed = None if cfg is None else args.seed
    trace.save(out / "trace.json")
    _write_csv(out / "trace.csv", _header(register, seed), [trace.sweep_name, "p"],
               zip(trace.sweep_values, trace.values))
    _manifest(out, args, register, seed, started, ["trace.json", "trace.csv"])
    print(f"{protocol.name}: {len(trace.values)} points -> {out}")
    return EXIT_OK


def _oracle_suite(register, points):
    """Analytic/oracle pairs per protocol: (name, grid, analytic fn, descriptor fn)."""
    wl = register.larmor_angular()
    period = TWO_PI / float(wl.max()) if wl.size and wl.max() > 0 else 2e-6
    tau = np.linspace(0.0, 6 * period, points)
    cases = [
        ("ramsey", lambda t: signals.ramsey(register, t), lambda t: oracle.make_descriptor("ramsey", tau=t)),
        ("hahn", lambda t: signals.hahn_echo(register, t), lambda t: oracle.make_descriptor("hahn", tau=t)),
    ]
    for n in (2, 8, 16):
        cases.append((
            f"dd_n{n}",
            lambda t, n=n: signals.dd(register, t, signals.SignalOptions(pulses_n=n)),
            lambda t, n=n: oracle.make_descriptor("dd", tau=t, pulses_n=n),
        ))
    t_free = np.linspace(0.0, 20 * period, points)
    tau1 = 0.37 * period
    tau2 = 0.61 * period
    cases.append((
        "5p_eseem",
        lambda t: signals.five_pulse_eseem(register, signals.EseemTiming(tau1, tau2, t)),
        lambda t: oracle.make_descriptor("5p_eseem", tau1=tau1, tau2=tau2, t_free=t),
    ))
    return [(name, t_free if name == "5p_eseem" else tau, f, d) for name, f, d in cases]


def cmd_oracle_check(args):
    started = time.perf_counter()
    register = load_register(args.register)
    if len(register) > ORACLE_SUITE_MAX_SPINS:
        raise ValidationError(
            f"oracle suite supports at most {ORACLE_SUITE_MAX_SPINS} spins, register has {len(register)}", "spins"
        )
    report = {}
    for name, grid, analytic, desc in _oracle_suite(register, args.points):
        with warnings.catch_warnings():
            # The suite samples T < T2* on purpose; the oracle dephases exactly.
            warnings.simplefilter("ignore", signals.RegimeWarning)
            a = np.asarray(analytic(grid), dtype=float)
        if args.inject_fault == name:
            a = a + 1e-6 * np.cos(grid / grid[-1] * 7.0)
        o = oracle.simulate_many(register, [desc(t) for t in grid])
        report[name] = float(np.max(np.abs(a - o)))
    failed = [n for n, err in report.items() if not err <= args.tolerance]
    for name, err in report.items():
        print(f"{name:10s} max|analytic - oracle| = {err:.3e}  {'FAIL' if name in failed else 'ok'}")
    if args.out:
        out = _out_dir(args.out)
        _write_json(out / "oracle_check.json", {
            "max_abs_error": report, "tolerance": args.tolerance, "points": args.points,
            "failed": failed, "register_digest": register.digest(), "version": __version__,
        })
        _manifest(out, args, register, None, started, ["oracle_check.json"])
    if failed:
        print(f"oracle check failed for: {', '.join(failed)}", file=sys.stderr)
        raise ToleranceFailure
    return EXIT_OK


def cmd_fisher(args):
    started = time.perf_counter()
    register = load_register(args.register)
    protocol = _protocol(args, register, decay=args.decay)
    grid = _grid(args, protocol)
    result = fisher_analysis(register, protocol, grid, args.reps, args.fd_step, args.metric,
                             thread_count(args.threads))
    n = len(register)
    rows = []
    for j, label in enumerate(register.labels):
        s = register.spins[j]
        rows.append([label, s.a_zz, s.a_zx, result.bounds[j], result.bounds[n + j], int(result.detectable[j])])
    print(f"{'spin':8s} {'a_zz/Hz':>12s} {'a_zx/Hz':>12s} {'d_a_zz/Hz':>12s} {'d_a_zx/Hz':>12s} detectable")
    for r in rows:
        print(f"{r[0]:8s} {r[1]:12.1f} {r[2]:12.1f} {r[3]:12.4g} {r[4]:12.4g} {'yes' if r[5] else 'no'}")
    print(f"detectable: {sum(result.detectable)}/{n}")
    for line in result.null_space:
        print(f"singular FIM, null direction: {line}")
    out = _out_dir(args.out)
    (out / "fisher.json").write_text(result.to_json() + "\n")
    header = _header(register, None)
    _write_csv(out / "detectability.csv", header,
               ["label", "a_zz_hz", "a_zx_hz", "crb_a_zz_hz", "crb_a_zx_hz", "detectable"], rows)
    _write_csv(out / "ellipses.csv", header,
               ["spin", "partner", "covariance", "a_zz", "a_zx", "partner_a_zz", "partner_a_zx",
                "semi_major", "semi_minor"],
               [[register.labels[e.spin], "" if e.partner is None else register.labels[e.partner], e.covariance,
                 *e.vertex_a, *e.vertex_b, e.semi_major, e.semi_minor] for e in result.ellipses])
    _manifest(out, args, register, None, started, ["fisher.json", "detectability.csv", "ellipses.csv"])
    return EXIT_OK


def cmd_spectrum(args):
    started = time.perf_counter()
    register = load_register(args.register)
    name = "5p_eseem" if args.pulses in (None, 1) else "dd_eseem"
    grid = parse_grid(args.grid) if args.grid else np.arange(1000) * 0.2e-6
    taus = parse_grid(args.taus)
    pulses = args.pulses or 1
    spectra = []
    for tau in taus:
        protocol = Protocol(name, "T", pulses, tau1=tau, tau2=tau, include_decay=args.decay)
        spectra.append(spec.fft_spectrum(synthesize_trace(register, protocol, grid), window=args.window))
    mean = spec.Spectrum(spectra[0].freqs, np.mean([s.amps for s in spectra], axis=0), window=args.window)
    peaks = spec.find_peaks(mean, args.threshold)
    out = _out_dir(args.out)
    header = _header(register, None)
    outputs = ["spectra.csv", "mean_spectrum.csv", "pairs.json"]
    _write_csv(out / "spectra.csv", header, ["tau_s", "freq_hz", "amp"],
               ([t, f, a] for t, s in zip(taus, spectra) for f, a in zip(s.freqs, s.amps)))
    mean.to_csv(out / "mean_spectrum.csv", header)
    pairing = None
    if len(taus) >= spec.MIN_TAUS and len(peaks) >= 2:
        lo = min(p.freq for p in peaks) - args.margin
        hi = max(p.freq for p in peaks) + args.margin
        cmap = spec.tau_sweep_correlation(spectra, taus, band=(lo, hi))
        cmap.to_csv(out / "correlation.csv", header)
        outputs.append("correlation.csv")
        pairing = spec.pair_frequencies(cmap, peaks)
    frames = register_frames(register)
    nuclei = []
    for label, f in zip(register.labels, frames):
        nuclei.append({
            "label": label,
            "f_alpha_hz": f.omega_alpha / TWO_PI,
            "f_beta_hz": f.omega_beta / TWO_PI,
            "k_depth": f.k_depth,
            "spots_alpha": signals.blind_bright_spots(f, "alpha", 3)._asdict(),
            "spots_beta": signals.blind_bright_spots(f, "beta", 3)._asdict(),
        })
    _write_json(out / "pairs.json", {
        "peaks": [p._asdict() for p in peaks],
        "pairs": [] if pairing is None else [p._asdict() for p in pairing.pairs],
        "unpaired": [] if pairing is None else pairing.unpaired,
        "nuclei": nuclei,
        "register_digest": register.digest(),
        "tau_values": taus.tolist(),
    })
    _manifest(out, args, register, None, started, outputs)
    print(f"{len(taus)} spectra, {len(peaks)} peaks")
    if not peaks:
        print("no peaks above threshold; the tau values may sit on blind spots (see spots_* in pairs.json)")
    if pairing:
        for p in pairing.pairs:
            print(f"pair {p.freq_a:12.1f} Hz  {p.freq_b:12.1f} Hz  score {p.score:.4f}")
        for f in pairing.unpaired:
            print(f"unpaired {f:12.1f} Hz")
    return EXIT_OK


def cmd_register_validate(args):
    register = load_register(args.path)
    frames = register_frames(register)
    print(f"valid register: {len(register)} spins, s0={register.electron.s0}, s1={register.electron.s1}, "
          f"B={register.environment.b_field} T")
    for label, f in zip(register.labels, frames):
        print(f"  {label}: f_alpha={f.omega_alpha / TWO_PI:.1f} Hz f_beta={f.omega_beta / TWO_PI:.1f} Hz "
              f"k={f.k_depth:.3e}")
    print(f"digest {register.digest()}")
    return EXIT_OK


# --- parser ----------------------------------------------------------------


def _common(p, protocol=True):
    p.add_argument("--register", required=True, help="register JSON file")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default $SPINSCOPE_THREADS or 1)")
    if protocol:
        p.add_argument("--protocol", required=True,
                       help="ramsey, hahn, dd, dd_summation, 5p_eseem or dd_eseem")
        p.add_argument("--sweep", default=None, help="swept variable: tau, T or N")
        p.add_argument("--grid", default=None, help="sweep grid start:stop:step (SI units)")
        p.add_argument("--pulses", type=int, default=None, help="pi pulses per decoupling block")
        p.add_argument("--tau", type=float, default=None, help="fixed tau for an N sweep (s)")
        p.add_argument("--tau1", type=float, default=None, help="first echo delay (s)")
        p.add_argument("--tau2", type=float, default=None, help="second echo delay (s)")
        p.add_argument("--t-free", dest="t_free", type=float, default=None, help="fixed free evolution T (s)")


def build_parser():
    parser = argparse.ArgumentParser(prog="spinscope", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"spinscope {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthesize a (noisy) measurement trace")
    _common(p)
    p.add_argument("--reps", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--photons-bright", type=float, default=3.0)
    p.add_argument("--photons-dark", type=float, default=0.1)
    p.add_argument("--noiseless", action="store_true")
    p.add_argument("--decay", action=argparse.BooleanOptionalAction, default=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle-check", help="compare closed forms with the exact simulator")
    p.add_argument("--register", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--inject-fault", default=None, help="corrupt one analytic protocol (negative control)")
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("fisher", help="Fisher information, Cramer-Rao bounds and detectability")
    _common(p)
    p.add_argument("--reps", type=int, default=10_000)
    p.add_argument("--fd-step", type=float, default=None, help="finite-difference step (Hz)")
    p.add_argument("--metric", choices=("per_type", "euclidean"), default="per_type")
    p.add_argument("--decay", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=cmd_fisher)

    p = sub.add_parser("spectrum", help="tau-sweep ESEEM spectra, correlation map and pairing")
    _common(p, protocol=False)
    p.add_argument("--grid", default=None, help="T grid start:stop:step (default 1000 x 0.2 us)")
    p.add_argument("--taus", default="10e-6:500e-6:10e-6", help="tau sweep start:stop:step")
    p.add_argument("--pulses", type=int, default=None, help="1 (five-pulse) or even (decoupled blocks)")
    p.add_argument("--window", default="hann")
    p.add_argument("--threshold", type=float, default=0.2, help="peak threshold relative to max")
    p.add_argument("--margin", type=float, default=10e3, help="correlation band margin around peaks (Hz)")
    p.add_argument("--decay", action=argparse.BooleanOptionalAction, default=False)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("register", help="register file utilities")
    rsub = p.add_subparsers(dest="register_command", required=True)
    v = rsub.add_parser("validate", help="check a register file")
    v.add_argument("path")
    v.set_defaults(func=cmd_register_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ToleranceFailure:
        return EXIT_TOLERANCE
    except SpinscopeError as exc:
        field = getattr(exc, "field", None)
        print(f"error: {exc}" + (f" [field: {field}]" if field else ""), file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
