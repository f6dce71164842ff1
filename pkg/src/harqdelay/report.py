"""Figure rendering for CLI reports: PNGs saved alongside the CSV output."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_SCHEME_STYLE = {
    "arq": dict(color="tab:red", marker="s"),
    "harq": dict(color="tab:blue", marker="o"),
}

_AXIS_LABEL = {
    "nrb": "allocated resource blocks per slot",
    "d": "delay target [ms]",
    "rtt": "round-trip time [slots]",
    "f": "arrival probability per slot",
    "nrb_per_byte": "resource blocks per byte of payload",
}


def _style(scheme):
    return _SCHEME_STYLE.get(scheme, dict(color="tab:gray", marker="x"))


def save_sweep_figure(rows: list[dict], axis: str, path) -> None:
    """DVP versus the sweep axis, one line per scheme, log-scaled DVP."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    schemes = sorted({r["scheme"] for r in rows if not r.get("error")})
    for scheme in schemes:
        pts = [
            (float(r["axis_value"]), float(r["dvp"]))
            for r in rows
            if r["scheme"] == scheme and not r.get("error") and r.get("dvp") not in ("", None)
        ]
        if not pts:
            continue
        pts.sort()
        xs, ys = zip(*pts)
        ax.semilogy(xs, ys, label=scheme.upper(), **_style(scheme))
    ax.set_xlabel(_AXIS_LABEL.get(axis, axis))
    ax.set_ylabel("delay violation probability")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_throughput_figure(rows: list[dict], path) -> None:
    """Throughput versus arrival probability for f sweeps."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    schemes = sorted({r["scheme"] for r in rows if not r.get("error")})
    for scheme in schemes:
        pts = [
            (float(r["axis_value"]), float(r["throughput_bps"]) / 1e3)
            for r in rows
            if r["scheme"] == scheme
            and not r.get("error")
            and r.get("throughput_bps") not in ("", None)
        ]
        if not pts:
            continue
        pts.sort()
        xs, ys = zip(*pts)
        ax.plot(xs, ys, label=scheme.upper(), **_style(scheme))
    ax.set_xlabel(_AXIS_LABEL["f"])
    ax.set_ylabel("throughput [kbps]")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_validation_figure(dvp_rows: list[dict], wait_rows: list[dict], path) -> None:
    """Analytic-versus-simulated DVP (with CIs) and the wait-delay CCDF."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10.5, 4.2))
    ds = [float(r["d_ms"]) for r in dvp_rows]
    ana = [float(r["dvp_analytic"]) for r in dvp_rows]
    sim = [float(r["dvp_sim"]) for r in dvp_rows]
    lo = [float(r["ci_lo"]) for r in dvp_rows]
    hi = [float(r["ci_hi"]) for r in dvp_rows]
    floor = min((v for v in ana + sim if v > 0), default=1e-12) * 0.1
    err = [
        [max(s - l, 0.0) for s, l in zip(sim, lo)],
        [max(h - s, 0.0) for s, h in zip(sim, hi)],
    ]
    ax1.semilogy(ds, [max(v, floor) for v in ana], "-o", color="tab:blue", label="analytic")
    ax1.errorbar(
        ds, [max(v, floor) for v in sim], yerr=err, fmt="s", color="tab:red",
        capsize=3, label="simulated (95% CI)",
    )
    ax1.set_xlabel("delay target [ms]")
    ax1.set_ylabel("delay violation probability")
    ax1.grid(True, which="both", alpha=0.3)
    ax1.legend()

    js = [int(r["j_slots"]) for r in wait_rows]
    bound = [float(r["ccdf_bound"]) for r in wait_rows]
    emp = [float(r["ccdf_sim"]) for r in wait_rows]
    wfloor = min((v for v in bound + emp if v > 0), default=1e-12) * 0.1
    ax2.semilogy(js, [max(v, wfloor) for v in bound], "-o", color="tab:blue", label="analytic bound")
    ax2.semilogy(js, [max(v, wfloor) for v in emp], "s", color="tab:red", label="simulated")
    ax2.set_xlabel("wait delay [slots]")
    ax2.set_ylabel("P(wait > j)")
    ax2.grid(True, which="both", alpha=0.3)
    ax2.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
