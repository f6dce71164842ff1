"""Command-line front end: single-point evaluations, sweeps, validation reports.

Every CSV written here starts with a '#'-prefixed block holding the fully
resolved parameter set and seed, so any row can be re-run bit-exactly.  A
``key = value`` config file (# comments allowed) supplies defaults that
command-line flags override; the effective configuration is echoed to stderr
before execution.

Exit codes: 0 success, 2 usage error, 3 infeasible or unstable configuration.
"""
from __future__ import annotations

import argparse
import csv
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path

from harqdelay import __version__
from harqdelay.arq import ArqParams, UnstableQueue, arq_dvp, wait_ccdf_bound
from harqdelay.error_model import ChannelParams, per_arq_avg, per_harq_avg
from harqdelay.harq import HarqAnalysis, HarqParams
from harqdelay.phy import (
    InfeasibleAllocation,
    Numerology,
    ResourceGrid,
    nrb_range,
    select_mcs,
)
from harqdelay.simulator import ConfigError, SimConfig, empirical_wait_ccdf
from harqdelay.simulator import run as sim_run
from harqdelay.simulator import throughput as sim_throughput

DEFAULT_TARGETS = (8.5,)


@dataclass
class RunSpec:
    """Resolved configuration shared by every subcommand."""

    scheme: str = "harq"
    packet_bytes: int = 100
    nrb: int = 10
    nu: int = 0
    snr_db: float = 10.0
    mu_h2: float = 1.0
    dispersion: float = 1.0
    f: float = 1.0 / 3.0
    cycle: int | None = None  # deterministic arrival period, slots
    zeta: int = 1
    delta: int = 2
    max_attempts: int = 4
    q_max: int = 16
    targets: tuple[float, ...] = DEFAULT_TARGETS
    samples: int = 1_000_000
    slots: int = 1_000_000
    warmup: int = 10_000
    seed: int = 0
    jobs: int = 1
    out: str | None = None
    encode_delay_ms: float = 0.0
    propagation_slots: int = 0
    blocklength_per_re: bool = False
    plot: bool = True

    @property
    def packet_bits(self) -> int:
        return 8 * self.packet_bytes

    @property
    def slot_ms(self) -> float:
        return Numerology(self.nu).slot_duration_ms

    @property
    def zeta_eff(self) -> int:
        """Propagation delay folds into the decoding delay."""
        return self.zeta + self.propagation_slots

    def effective_target(self, d_ms: float) -> float:
        """Encoding delay is endured once; subtract it from the target."""
        return max(0.0, d_ms - self.encode_delay_ms)

    def channel(self) -> ChannelParams:
        return ChannelParams.from_snr_db(self.snr_db, self.mu_h2, self.dispersion)

    def resolve_phy(self, nrb: int | None = None, bits: int | None = None):
        """MCS entry and dispersion blocklength for an allocation."""
        nrb = self.nrb if nrb is None else nrb
        bits = self.packet_bits if bits is None else bits
        mcs = select_mcs(bits, nrb)
        grid = ResourceGrid(nrb)
        blocklength = grid.n_re if self.blocklength_per_re else grid.blocklength_per_slot
        return mcs, blocklength


def _spec_meta(spec: RunSpec) -> dict:
    meta = {"version": __version__}
    for f_ in fields(spec):
        val = getattr(spec, f_.name)
        if isinstance(val, tuple):
            val = ",".join(str(v) for v in val)
        meta[f_.name] = val
    return meta


def _echo_config(meta: dict) -> None:
    for k, v in meta.items():
        print(f"# {k} = {v}", file=sys.stderr)


def _write_csv(out: str | None, meta: dict, fieldnames: list[str], rows: list[dict]):
    def _dump(fh):
        for k, v in meta.items():
            fh.write(f"# {k} = {v}\n")
        w = csv.DictWriter(fh, fieldnames=fieldnames, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow(r)

    if out is None:
        _dump(sys.stdout)
    else:
        with open(out, "w", newline="") as fh:
            _dump(fh)


def compute_per(spec: RunSpec, nrb: int | None = None, bits: int | None = None):
    """PER at the resolved MCS: a scalar estimate for ARQ, a vector for HARQ."""
    mcs, blocklength = spec.resolve_phy(nrb, bits)
    ch = spec.channel()
    if spec.scheme == "arq":
        est = per_arq_avg(ch, mcs.spectral_efficiency, blocklength, spec.samples, spec.seed)
        return mcs, blocklength, est
    vec = per_harq_avg(
        ch, mcs.spectral_efficiency, blocklength, spec.max_attempts, spec.samples, spec.seed
    )
    return mcs, blocklength, vec


def analytic_dvp(spec: RunSpec, per, d_ms: float, zeta: int | None = None,
                 delta: int | None = None) -> float:
    """Scheme-appropriate analytic DVP at a (possibly adjusted) target."""
    zeta = spec.zeta_eff if zeta is None else zeta
    delta = spec.delta if delta is None else delta
    d = spec.effective_target(d_ms)
    if spec.scheme == "arq":
        prm = ArqParams(f=spec.f, p=per.value, zeta=zeta, delta=delta, slot_ms=spec.slot_ms)
        return arq_dvp(d, prm)
    prm = HarqParams(
        f=spec.f, p_vec=per.values, q_max=spec.q_max,
        zeta=zeta, delta=delta, slot_ms=spec.slot_ms,
    )
    return HarqAnalysis(prm).dvp(d)


def sim_config(spec: RunSpec, per, seed_offset: int = 0, if_mode: bool = False) -> SimConfig:
    common = dict(
        zeta=spec.zeta_eff,
        delta=spec.delta,
        q_max=spec.q_max,
        slots=spec.slots,
        warmup_slots=spec.warmup,
        seed=spec.seed + seed_offset,
        if_mode=if_mode,
        slot_ms=spec.slot_ms,
    )
    arrival = dict(f=spec.f) if spec.cycle is None else dict(arrival_cycle=spec.cycle)
    if spec.scheme == "arq":
        return SimConfig(scheme="arq", p=per.value, max_attempts=None, **arrival, **common)
    return SimConfig(scheme="harq", p_vec=per.values, **arrival, **common)


def cmd_per(spec: RunSpec) -> int:
    mcs, blocklength, per = compute_per(spec)
    meta = _spec_meta(spec)
    meta.update(mcs_index=mcs.index, spectral_efficiency=mcs.spectral_efficiency,
                blocklength=blocklength)
    _echo_config(meta)
    estimates = [per] if spec.scheme == "arq" else list(per.p)
    rows = [
        {"m": m, "p_m": f"{e.value:.10e}", "std_error": f"{e.std_error:.4e}",
         "samples": e.samples, "seed": e.seed}
        for m, e in enumerate(estimates, start=1)
    ]
    _write_csv(spec.out, meta, ["m", "p_m", "std_error", "samples", "seed"], rows)
    return 0


def cmd_dvp(spec: RunSpec, validate: bool = False) -> int:
    meta = _spec_meta(spec)
    meta["validate"] = validate
    _echo_config(meta)
    mcs, blocklength, per = compute_per(spec)
    meta.update(mcs_index=mcs.index, blocklength=blocklength)
    fieldnames = ["d_ms", "dvp_analytic"]
    stats = None
    if validate:
        fieldnames += ["dvp_sim", "ci_lo", "ci_hi"]
        stats = sim_run(sim_config(spec, per),
                        targets=[spec.effective_target(d) for d in spec.targets])
    rows = []
    for d in spec.targets:
        row = {"d_ms": d, "dvp_analytic": f"{analytic_dvp(spec, per, d):.10e}"}
        if stats is not None:
            pt = stats.dvp_at(spec.effective_target(d))
            row.update(dvp_sim=f"{pt.estimate:.10e}", ci_lo=f"{pt.ci_lo:.10e}",
                       ci_hi=f"{pt.ci_hi:.10e}")
        rows.append(row)
    _write_csv(spec.out, meta, fieldnames, rows)
    return 0


def _rtt_split(rtt: int) -> tuple[int, int]:
    """(zeta, delta) realising a given RTT; keeps the default zeta=1 when possible."""
    if rtt < 1:
        raise ValueError(f"rtt must be >= 1 slot, got {rtt}")
    zeta = min(1, rtt - 1)
    return zeta, rtt - 1 - zeta


def _per_summary(spec: RunSpec, per) -> str:
    if spec.scheme == "arq":
        return f"p={per.value:.6e}"
    return ";".join(f"p{m}={v:.6e}" for m, v in enumerate(per.values, 1))


def _sweep_point(spec: RunSpec, axis: str, value) -> list[dict]:
    """Rows (one per scheme) for a single grid point; errors land in the row."""
    rows = []
    for scheme in ("arq", "harq"):
        s = replace(spec, scheme=scheme)
        row = {"axis_value": value, "scheme": scheme, "per_summary": "",
               "dvp": "", "throughput_bps": "", "error": ""}
        try:
            if axis in ("nrb", "nrb_per_byte"):
                # axis value x = 8*N_RB/n with n in bits, so N_RB = x * bytes
                nrb = value if axis == "nrb" else round(value * s.packet_bytes)
                mcs, bl, per = compute_per(s, nrb=nrb)
                row["dvp"] = f"{analytic_dvp(s, per, s.targets[0]):.10e}"
            elif axis == "d":
                mcs, bl, per = compute_per(s)
                row["dvp"] = f"{analytic_dvp(s, per, float(value)):.10e}"
            elif axis == "rtt":
                zeta, delta = _rtt_split(int(value))
                mcs, bl, per = compute_per(s)
                row["dvp"] = f"{analytic_dvp(s, per, s.targets[0], zeta=zeta, delta=delta):.10e}"
            elif axis == "f":
                s = replace(s, f=float(value))
                mcs, bl, per = compute_per(s)
                row["dvp"] = f"{analytic_dvp(s, per, s.targets[0]):.10e}"
                stats = sim_run(sim_config(s, per), targets=s.targets)
                thr = sim_throughput(
                    stats, s.effective_target(s.targets[0]), s.packet_bits, s.slot_ms
                )
                row["throughput_bps"] = f"{thr:.3f}"
            else:
                raise ValueError(f"unknown axis {axis!r}")
            row["per_summary"] = _per_summary(s, per)
        except (InfeasibleAllocation, UnstableQueue, ConfigError, ValueError) as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


def _default_grid(spec: RunSpec, axis: str) -> list:
    if axis == "nrb":
        lo, hi = nrb_range(spec.packet_bits)
        return list(range(lo, hi + 1))
    if axis == "nrb_per_byte":
        lo, hi = nrb_range(spec.packet_bits)
        return [8 * n / spec.packet_bits for n in range(lo, hi + 1)]
    if axis == "d":
        return [2.0 + 1.5 * i for i in range(13)]  # 2 .. 20 ms
    if axis == "rtt":
        return list(range(1, 8))
    if axis == "f":
        return [round(0.05 + 0.09 * i, 4) for i in range(11)]
    raise ValueError(f"unknown axis {axis!r}")


def _parse_grid(text: str, axis: str) -> list:
    vals = [v for v in text.split(",") if v.strip()]
    if axis in ("nrb", "rtt"):
        return [int(v) for v in vals]
    return [float(v) for v in vals]


def cmd_sweep(spec: RunSpec, axis: str, grid: list | None) -> int:
    if grid is None:
        grid = _default_grid(spec, axis)
    meta = _spec_meta(spec)
    meta.update(axis=axis, grid=",".join(str(g) for g in grid))
    _echo_config(meta)
    if spec.jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            chunks = list(pool.map(_sweep_point, [spec] * len(grid), [axis] * len(grid), grid))
    else:
        chunks = [_sweep_point(spec, axis, v) for v in grid]
    rows = [row for chunk in chunks for row in chunk]  # grid order preserved
    fieldnames = ["axis_value", "scheme", "per_summary", "dvp", "throughput_bps", "error"]
    _write_csv(spec.out, meta, fieldnames, rows)
    if spec.plot and spec.out:
        from harqdelay import report

        stem = Path(spec.out).with_suffix("")
        report.save_sweep_figure(rows, axis, f"{stem}.png")
        if axis == "f":
            report.save_throughput_figure(rows, f"{stem}_throughput.png")
    return 0


def cmd_simulate(spec: RunSpec, trace: str | None) -> int:
    meta = _spec_meta(spec)
    _echo_config(meta)
    mcs, blocklength, per = compute_per(spec)
    stats = sim_run(sim_config(spec, per), targets=[spec.effective_target(d) for d in spec.targets])
    meta.update(
        mcs_index=mcs.index, blocklength=blocklength,
        arrivals=stats.n_arrivals, delivered=stats.n_delivered,
        discarded=stats.n_discarded, dropped_overflow=stats.n_dropped,
        pending_at_horizon=stats.n_pending, measured=stats.n_measured,
    )
    rows = []
    for d in spec.targets:
        pt = stats.dvp_at(spec.effective_target(d))
        thr = sim_throughput(stats, spec.effective_target(d), spec.packet_bits, spec.slot_ms)
        rows.append({
            "d_ms": d, "dvp_sim": f"{pt.estimate:.10e}",
            "ci_lo": f"{pt.ci_lo:.10e}", "ci_hi": f"{pt.ci_hi:.10e}",
            "violations": pt.violations, "packets": pt.packets,
            "throughput_bps": f"{thr:.3f}",
        })
    _write_csv(spec.out, meta,
               ["d_ms", "dvp_sim", "ci_lo", "ci_hi", "violations", "packets", "throughput_bps"],
               rows)
    if trace:
        stats.write_trace(trace)
    return 0


def cmd_validate(spec: RunSpec) -> int:
    meta = _spec_meta(spec)
    _echo_config(meta)
    mcs, blocklength, per = compute_per(spec)
    meta.update(mcs_index=mcs.index, blocklength=blocklength)
    stats = sim_run(sim_config(spec, per), targets=[spec.effective_target(d) for d in spec.targets])
    dvp_rows = []
    for d in spec.targets:
        ana = analytic_dvp(spec, per, d)
        pt = stats.dvp_at(spec.effective_target(d))
        within = pt.ci_lo <= ana <= pt.ci_hi
        dvp_rows.append({
            "d_ms": d, "dvp_analytic": f"{ana:.10e}", "dvp_sim": f"{pt.estimate:.10e}",
            "ci_lo": f"{pt.ci_lo:.10e}", "ci_hi": f"{pt.ci_hi:.10e}",
            "analytic_within_ci": str(within).lower(),
        })
    wait_rows = []
    if spec.scheme == "arq":
        prm = ArqParams(f=spec.f, p=per.value, zeta=spec.zeta_eff, delta=spec.delta,
                        slot_ms=spec.slot_ms)

        def bound(j):
            return wait_ccdf_bound(j, prm)
    else:
        prm = HarqParams(f=spec.f, p_vec=per.values, q_max=spec.q_max,
                         zeta=spec.zeta_eff, delta=spec.delta, slot_ms=spec.slot_ms)
        pmf = HarqAnalysis(prm).wait_pmf
        bound = pmf.ccdf
    for j, (emp, sem) in sorted(empirical_wait_ccdf(stats).items()):
        wait_rows.append({
            "j_slots": j, "ccdf_bound": f"{bound(j):.10e}", "ccdf_sim": f"{emp:.10e}",
            "std_error": f"{sem:.4e}",
        })
    _write_csv(spec.out, meta,
               ["d_ms", "dvp_analytic", "dvp_sim", "ci_lo", "ci_hi", "analytic_within_ci"],
               dvp_rows)
    if spec.out:
        stem = Path(spec.out).with_suffix("")
        _write_csv(f"{stem}_wait.csv", meta,
                   ["j_slots", "ccdf_bound", "ccdf_sim", "std_error"], wait_rows)
        if spec.plot:
            from harqdelay import report

            report.save_validation_figure(dvp_rows, wait_rows, f"{stem}.png")
    return 0


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _probability(text: str) -> float:
    v = float(text)
    if not 0.0 <= v < 1.0:
        raise argparse.ArgumentTypeError(f"must be in [0, 1), got {v}")
    return v


def _targets(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))
    if not vals or any(v < 0 for v in vals):
        raise argparse.ArgumentTypeError(f"need nonnegative targets, got {text!r}")
    return vals


def _coerce(text: str):
    low = text.strip()
    if low.lower() in ("true", "false"):
        return low.lower() == "true"
    for cast in (int, float):
        try:
            return cast(low)
        except ValueError:
            pass
    if "," in low:
        return _targets(low)
    return low


_CONFIG_ALIASES = {"bytes": "packet_bytes", "arrival_prob": "f"}


def load_config_file(path: str) -> dict:
    """Flat ``key = value`` file with '#' comments; keys match flag names."""
    values = {}
    for ln, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{ln}: expected 'key = value', got {line!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        values[_CONFIG_ALIASES.get(key, key)] = _coerce(val)
    return values


def build_parser(config_defaults: dict | None = None) -> argparse.ArgumentParser:
    """CLI parser; ``config_defaults`` (from --config) sit under explicit flags."""
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("shared options")
    g.add_argument("--config", help="key = value config file; flags override it")
    g.add_argument("--scheme", choices=["arq", "harq"], default="harq")
    g.add_argument("--bytes", dest="packet_bytes", type=_positive_int, default=100,
                   help="uncoded packet length in bytes")
    g.add_argument("--nrb", type=_positive_int, default=10, help="resource blocks per slot")
    g.add_argument("--nu", type=_nonneg_int, default=0, help="numerology index")
    g.add_argument("--snr-db", type=float, default=10.0, help="average SNR in dB")
    g.add_argument("--mu-h2", type=float, default=1.0, help="fading power E[|h|^2]")
    g.add_argument("--dispersion", type=float, default=1.0, help="channel dispersion V")
    g.add_argument("-f", "--arrival-prob", dest="f", type=_probability, default=1.0 / 3.0)
    g.add_argument("--cycle", type=_positive_int, default=None,
                   help="deterministic arrival period in slots (replaces -f)")
    g.add_argument("--zeta", type=_nonneg_int, default=1, help="decoding delay, slots")
    g.add_argument("--delta", type=_nonneg_int, default=2, help="feedback delay, slots")
    g.add_argument("-M", "--max-attempts", type=_positive_int, default=4)
    g.add_argument("--q-max", type=_positive_int, default=16)
    g.add_argument("-d", "--targets", type=_targets, default=DEFAULT_TARGETS,
                   help="comma-separated delay targets in ms")
    g.add_argument("--samples", type=_positive_int, default=1_000_000,
                   help="Monte Carlo draws for PER estimation")
    g.add_argument("--slots", type=_positive_int, default=1_000_000,
                   help="simulation horizon in slots")
    g.add_argument("--warmup", type=_nonneg_int, default=10_000)
    g.add_argument("--seed", type=_nonneg_int, default=0)
    g.add_argument("--jobs", type=_positive_int, default=1, help="sweep worker processes")
    g.add_argument("--out", default=None, help="output CSV path (default: stdout)")
    g.add_argument("--encode-delay-ms", type=float, default=0.0,
                   help="one-off encoding delay, subtracted from each target")
    g.add_argument("--propagation-slots", type=_nonneg_int, default=0,
                   help="propagation delay, added to the decoding delay")
    g.add_argument("--blocklength-per-re", action="store_true",
                   help="use 12*N_RB instead of 180*N_RB as the dispersion blocklength")
    g.add_argument("--no-plot", dest="plot", action="store_false",
                   help="skip figure rendering next to the CSV")

    parser = argparse.ArgumentParser(
        prog="harqdelay",
        description="Delay violation probability of slotted ARQ/HARQ-IR retransmissions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_per = sub.add_parser("per", parents=[common], help="packet error rates at the selected MCS")
    p_dvp = sub.add_parser("dvp", parents=[common], help="analytic DVP per delay target")
    p_dvp.add_argument("--validate", action="store_true",
                       help="add simulated DVP columns with confidence intervals")
    p_sweep = sub.add_parser("sweep", parents=[common], help="parameter sweep to CSV (+figure)")
    p_sweep.add_argument("--axis", choices=["nrb", "d", "rtt", "f", "nrb_per_byte"],
                         required=True)
    p_sweep.add_argument("--grid", default=None,
                         help="comma-separated grid values (default: sensible range)")
    p_sim = sub.add_parser("simulate", parents=[common], help="run the slot simulator")
    p_sim.add_argument("--trace", default=None, help="write per-packet records to this CSV")
    p_val = sub.add_parser("validate", parents=[common],
                           help="analytic-vs-simulation comparison report (+figure)")
    if config_defaults:
        # parser-level defaults outrank argument defaults but lose to flags
        for p in (p_per, p_dvp, p_sweep, p_sim, p_val):
            p.set_defaults(**config_defaults)
    return parser


def _spec_from_args(args: argparse.Namespace) -> RunSpec:
    spec_fields = {f_.name for f_ in fields(RunSpec)}
    values = {k: v for k, v in vars(args).items() if k in spec_fields}
    return RunSpec(**values)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    # Two-pass parse: --config supplies defaults, explicit flags win.
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    overrides = None
    if known.config:
        try:
            overrides = load_config_file(known.config)
        except (OSError, ValueError) as exc:
            build_parser().error(str(exc))
        valid = {f_.name for f_ in fields(RunSpec)}
        bad = set(overrides) - valid
        if bad:
            build_parser().error(f"unknown config keys: {sorted(bad)}")
    parser = build_parser(overrides)
    args = parser.parse_args(argv)
    spec = _spec_from_args(args)
    try:
        if args.command == "per":
            return cmd_per(spec)
        if args.command == "dvp":
            return cmd_dvp(spec, validate=args.validate)
        if args.command == "sweep":
            grid = _parse_grid(args.grid, args.axis) if args.grid else None
            return cmd_sweep(spec, args.axis, grid)
        if args.command == "simulate":
            return cmd_simulate(spec, trace=args.trace)
        if args.command == "validate":
            return cmd_validate(spec)
        parser.error(f"unknown command {args.command!r}")
    except UnstableQueue as exc:
        print(f"error: unstable configuration: {exc}", file=sys.stderr)
        return 3
    except (InfeasibleAllocation, ConfigError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
