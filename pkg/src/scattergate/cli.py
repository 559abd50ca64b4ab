"""Command line front end.

One subcommand per study:

    switch-verify   certify the momentum switch (JSON)
    scatter-1p      single-particle S-matrix sweep (CSV)
    scatter-2p      one line collision, phases vs closed form (CSV)
    phase-curve     closed-form singlet phase along a coupling grid (CSV + PNG)
    scaling-study   collision error vs packet width (CSV + PNG)
    simulate-G      collision gate on the two-switch gadget (CSV)
    synth           plan G^k for a target phase (JSON)
    cnot-sim        exchange schedule, exact vs quantized (JSON)
    measure         third-rail readout statistics (JSON + PNG)

Exit codes: 0 success, 2 configuration error, 3 numerical failure.  Output
files carry the full configuration in their metadata and are byte-identical
across reruns with the same configuration and seed; figures accompany the
data files unless --no-figure is given.  Grids are written lo:hi:count.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import __version__
from .errors import ConfigError, NumericalFailure
from .graphs import build_momentum_switch, load_graph
from .hamiltonians import ModelParams
from .logic import (encode, load_schedule, logical_unitary, majority_vote_error,
                    measure_third_spin, quantize_schedule)
from .phases import RelativeKinematics, phase_curve
from .propagate import DEFAULT_TOL
from .reporting import (csv_text, json_text, ordered_thread_map, save_bar_figure,
                        save_line_figure, sha256_file, write_text_atomic)
from .scattering1p import s_matrix, verify_switch
from .synth import plan_power, suitability
from .twoparticle import collision_study, scaling_study, simulate_gate_G

__all__ = ["main"]


def parse_grid(text):
    """A float grid: 'lo:hi:count' (inclusive linspace) or comma list."""
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid {text!r} is not lo:hi:count")
        try:
            lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise ConfigError(f"grid {text!r}: {exc}") from None
        if count < 1:
            raise ConfigError(f"grid {text!r} needs a positive count")
        return np.linspace(lo, hi, count)
    try:
        values = np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError as exc:
        raise ConfigError(f"grid {text!r}: {exc}") from None
    if values.size == 0:
        raise ConfigError(f"grid {text!r} is empty")
    return values


def _model_params(args):
    model = args.model
    if model == "tj":
        if args.J is None:
            raise ConfigError("model tj needs --J")
        return ModelParams(model="tj", t=args.t, J=args.J)
    if model == "hubbard":
        if args.U is None:
            raise ConfigError("model hubbard needs --U")
        return ModelParams(model="hubbard", t=args.t, U=args.U)
    if args.Jx is None or args.Jz is None:
        raise ConfigError("model xxz needs --Jx and --Jz")
    return ModelParams(model="xxz", t=args.t, Jx=args.Jx, Jz=args.Jz)


def _coupling_meta(params, args):
    if params.model == "tj":
        return {"J": args.J}
    if params.model == "hubbard":
        return {"U": args.U}
    return {"Jx": args.Jx, "Jz": args.Jz}


def _base_metadata(args, **extra):
    meta = {"tool": "scattergate", "version": __version__,
            "subcommand": args.command}
    meta.update(extra)
    if getattr(args, "seed", None) is not None:
        meta["seed"] = args.seed
    meta["threads"] = args.threads
    return meta


def _emit(args, text, figure=None):
    """Write the data file (or stdout) and optionally render the figure."""
    if args.output is None:
        sys.stdout.write(text)
        return
    write_text_atomic(args.output, text)
    if figure is not None and not args.no_figure:
        figure(_figure_path(args.output))


def _figure_path(output):
    root, ext = output.rsplit(".", 1) if "." in output else (output, "")
    return f"{root}.png" if ext != "png" else output + ".png"


# --------------------------------------------------------------------------
# subcommands

def _cmd_switch_verify(args):
    if args.graph:
        graph = load_graph(args.graph)
        source = {"graph_file": args.graph, "graph_sha256": sha256_file(args.graph)}
    else:
        graph = build_momentum_switch()
        source = {"graph_file": "bundled"}
    report = verify_switch(graph, tol=args.tol)
    meta = _base_metadata(args, tol=args.tol, **source)
    payload = {
        "certified": report.certified,
        "unitarity_defect": report.unitarity_defect,
        "route_transmission_defects": list(report.transmissions),
        "tol": report.tol,
    }
    _emit(args, json_text(meta, payload))
    return 0 if report.certified else 3


def _cmd_scatter_1p(args):
    if args.graph:
        graph = load_graph(args.graph)
        source = {"graph_file": args.graph, "graph_sha256": sha256_file(args.graph)}
    else:
        graph = build_momentum_switch()
        source = {"graph_file": "bundled"}
    momenta = parse_grid(args.k)
    meta = _base_metadata(args, t=args.t, k_grid=args.k,
                          terminals=len(graph.terminals), **source)
    mats = ordered_thread_map(lambda k: s_matrix(graph, k, t=args.t),
                              momenta, args.threads)
    rows = []
    for k, sm in zip(momenta, mats):
        n = sm.matrix.shape[0]
        for t_in in range(n):
            for t_out in range(n):
                amp = sm.matrix[t_out, t_in]
                rows.append([float(k), t_in, t_out, amp.real, amp.imag,
                             float(abs(amp) ** 2)])
    text = csv_text(meta, ["k", "terminal_in", "terminal_out", "re", "im", "abs2"],
                    rows)
    n = mats[0].matrix.shape[0] if mats else 0
    series = {f"{a}->{b}": [abs(sm.matrix[b, a]) ** 2 for sm in mats]
              for a in range(n) for b in range(n)}
    _emit(args, text, figure=lambda path: save_line_figure(
        path, momenta, series, xlabel="momentum k (rad)",
        ylabel="transmission probability",
        title="single-particle switch response"))
    return 0


def _cmd_phase_curve(args):
    if args.model == "xxz":
        raise ConfigError("phase-curve sweeps a scalar coupling; "
                          "xxz has two (use the API for xxz sweeps)")
    kin = RelativeKinematics.from_momenta(args.k1, args.k2)
    couplings = parse_grid(args.grid)
    key = "J" if args.model == "tj" else "U"
    params = ModelParams(model=args.model, t=args.t,
                         **{key: float(couplings[0])})
    gates, thetas = phase_curve(params, couplings, kin)
    meta = _base_metadata(args, model=params.model, t=params.t,
                          k1=args.k1, k2=args.k2, grid=args.grid)
    rows = []
    for g_val, th, gate in zip(couplings, thetas, gates):
        amp = gate.entries[2]
        rows.append([float(g_val), float(th), amp.real, amp.imag])
    text = csv_text(meta, ["coupling", "theta_unwrapped", "re_R", "im_R"], rows)

    label = params.coupling_label
    _emit(args, text, figure=lambda path: save_line_figure(
        path, couplings, {"theta": thetas},
        xlabel=label, ylabel="singlet phase (rad, unwrapped)",
        title=f"{params.model} collision phase, k1={args.k1:g}, k2={args.k2:g}"))
    return 0


def _cmd_scatter_2p(args):
    params = _model_params(args)
    result = collision_study(params, args.sites, args.width,
                             k_slow=args.k1, k_fast=args.k2)
    kin = result.kinematics
    meta = _base_metadata(
        args, model=params.model, t=params.t, **_coupling_meta(params, args),
        k1=args.k1, k2=args.k2, width=args.width, sites=args.sites,
        p2=kin.p2, duration=result.diagnostics["duration"],
        tol=DEFAULT_TOL, overlap_floor=0.5)
    meta["residual_proximity"] = result.diagnostics["proximity_weight"]
    meta["end_weight"] = result.diagnostics["end_weight"]
    rows = [["S", result.theta, result.closed_form, result.error, result.overlap]]
    text = csv_text(meta, ["channel", "theta", "closed_form", "circle_error",
                           "overlap"], rows)
    _emit(args, text, figure=lambda path: save_bar_figure(
        path, ["measured", "closed form"], [result.theta, result.closed_form],
        ylabel="singlet phase (rad)",
        title=f"{params.model} collision, width {args.width}",
        reference=result.closed_form))
    return 0


def _cmd_scaling_study(args):
    params = _model_params(args)
    widths = [int(round(w)) for w in parse_grid(args.widths)]
    results = scaling_study(params, widths, sites_per_width=args.sites_per_width,
                            k_slow=args.k1, k_fast=args.k2)
    meta = _base_metadata(
        args, model=params.model, t=params.t, **_coupling_meta(params, args),
        k1=args.k1, k2=args.k2, widths=args.widths,
        sites_per_width=args.sites_per_width, tol=DEFAULT_TOL)
    rows = [[r.diagnostics["width"], r.diagnostics["num_sites"], r.theta,
             r.closed_form, r.error, r.overlap] for r in results]
    text = csv_text(meta, ["width", "sites", "theta", "closed_form",
                           "circle_error", "overlap"], rows)
    errors = [r.error for r in results]
    _emit(args, text, figure=lambda path: save_line_figure(
        path, widths, {"circle error": errors},
        xlabel="packet width (sites)", ylabel="phase error (rad)",
        title=f"{params.model} collision error vs width", logy=True))
    return 0


def _cmd_simulate_g(args):
    params = _model_params(args)
    est = simulate_gate_G(params, width=args.width,
                          line_len=args.line_len, port_len=args.port_len,
                          k_slow=args.k1, k_fast=args.k2)
    d = est.diagnostics
    meta = _base_metadata(
        args, model=params.model, t=params.t, **_coupling_meta(params, args),
        k1=args.k1, k2=args.k2, width=args.width,
        line_len=d["line_len"], port_len=d["port_len"],
        duration=d["duration"], tol=DEFAULT_TOL,
        out_slow_occupancy=d["port_occupancy"]["out_slow"],
        out_fast_occupancy=d["port_occupancy"]["out_fast"],
        timing_misalignment=d["timing_misalignment"])
    rows = []
    for i, ch in enumerate(est.gate.channels):
        rows.append([ch,
                     float(np.angle(est.gate.entries[i])),
                     float(np.angle(est.gate_squared.entries[i])),
                     float(np.angle(est.closed_form.entries[i])),
                     est.channel_errors[ch],
                     d["channel_overlaps"][ch]])
    text = csv_text(meta, ["channel", "g_phase", "G_phase", "closed_g_phase",
                           "G_circle_error", "overlap"], rows)
    _emit(args, text, figure=lambda path: save_bar_figure(
        path, list(est.gate.channels),
        [est.channel_errors[ch] for ch in est.gate.channels],
        ylabel="G phase error (rad)",
        title=f"gate error per channel, width {args.width}"))
    return 0


def _cmd_synth(args):
    plan = plan_power(args.theta, args.gamma_t, args.epsilon, cap=args.cap)
    report = suitability(args.theta, args.epsilon)
    meta = _base_metadata(args, theta=args.theta, gamma_t=args.gamma_t,
                          epsilon=args.epsilon, cap=args.cap)
    payload = plan.as_dict()
    payload["suitable"] = report.suitable
    payload["resolution_bound"] = report.resolution
    _emit(args, json_text(meta, payload))
    return 0


def _cmd_cnot_sim(args):
    schedule = load_schedule(args.schedule)
    n = args.n_logical
    exact_block, exact_leak = logical_unitary(schedule, n)
    plans, gate_for_step = quantize_schedule(schedule, args.theta, args.epsilon,
                                             cap=args.cap)
    quant_block, quant_leak = logical_unitary(schedule, n,
                                              gate_for_step=gate_for_step)
    # compare up to the global phase left free by the collision bookkeeping
    overlap = np.trace(exact_block.conj().T @ quant_block)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    max_err = float(np.max(np.abs(quant_block - phase * exact_block)))

    cnot = np.eye(4)[[0, 1, 3, 2]]
    cnot_err = None
    if n == 2:
        ov = np.trace(cnot.T @ exact_block)
        ph = ov / abs(ov) if abs(ov) > 1e-12 else 1.0
        cnot_err = float(np.max(np.abs(exact_block - ph * cnot)))
    meta = _base_metadata(args, schedule_file=args.schedule,
                          schedule_sha256=sha256_file(args.schedule),
                          theta=args.theta, epsilon=args.epsilon,
                          n_logical=n, steps=len(schedule))
    payload = {
        "max_element_error": max_err,
        "leakage": quant_leak,
        "exact_leakage": exact_leak,
        "per_step_k": [p.k for p in plans],
        "per_step_error": [p.achieved_error for p in plans],
    }
    if cnot_err is not None:
        payload["cnot_element_error"] = cnot_err
    _emit(args, json_text(meta, payload), figure=lambda path: save_bar_figure(
        path, [f"step {i}" for i in range(len(plans))],
        [p.achieved_error for p in plans],
        ylabel="phase error (rad)",
        title="quantized exchange error per step",
        reference=args.epsilon))
    return 0


def _cmd_measure(args):
    amps = {"0L": (1.0, 0.0), "1L": (0.0, 1.0)}[args.state]
    state = encode(list(amps), n=1)
    stats = measure_third_spin(state, repetitions=args.shots, rng_seed=args.seed)
    vote = majority_vote_error(args.vote_repetitions) if args.state == "1L" else 0.0
    meta = _base_metadata(args, state=args.state, shots=args.shots,
                          vote_repetitions=args.vote_repetitions)
    payload = {
        "p_down_exact": stats.p_down,
        "n_down": stats.n_down,
        "n_up": stats.n_up,
        "frequency": stats.frequency if args.shots else None,
        "majority_vote_error": vote,
    }
    _emit(args, json_text(meta, payload),
          figure=lambda path: save_bar_figure(
              path, ["down", "up"],
              [stats.n_down, stats.n_up],
              ylabel="shots",
              title=f"third-rail readout of |{args.state}>, "
                    f"P(down) = {stats.p_down:.4f}",
              reference=stats.p_down * args.shots if args.shots else None))
    return 0


# --------------------------------------------------------------------------
# argument wiring

def _add_common(p, seed=False):
    p.add_argument("--output", help="output data file; stdout when omitted")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads for sweeps; results are independent of N")
    p.add_argument("--no-figure", action="store_true",
                   help="skip the PNG next to the data file")
    if seed:
        p.add_argument("--seed", type=int, default=None, help="RNG seed")


def _add_model(p, kinematics=True):
    p.add_argument("--model", choices=("tj", "hubbard", "xxz"), required=True)
    p.add_argument("--t", type=float, default=1.0, help="hopping (default 1)")
    p.add_argument("--J", type=float, default=None, help="t-J exchange")
    p.add_argument("--U", type=float, default=None, help="Hubbard interaction")
    p.add_argument("--Jx", type=float, default=None, help="XXZ transverse coupling")
    p.add_argument("--Jz", type=float, default=None, help="XXZ longitudinal coupling")
    if kinematics:
        p.add_argument("--k1", type=float, default=math.pi / 4,
                       help="slow packet momentum in radians (default pi/4)")
        p.add_argument("--k2", type=float, default=math.pi / 2,
                       help="fast packet momentum in radians (default pi/2)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="scattergate",
        description="Wave-packet scattering studies and collision-gate synthesis")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("switch-verify", help="certify the momentum switch")
    p.add_argument("--graph", help="graph file (default: bundled switch)")
    p.add_argument("--tol", type=float, default=1e-10)
    _add_common(p)

    p = sub.add_parser("scatter-1p", help="S-matrix sweep over momenta")
    p.add_argument("--graph", help="graph file (default: bundled switch)")
    p.add_argument("--k", required=True, help="momenta, lo:hi:count or comma list")
    p.add_argument("--t", type=float, default=1.0)
    _add_common(p)

    p = sub.add_parser("phase-curve", help="closed-form phase along a coupling grid")
    _add_model(p)
    p.add_argument("--grid", required=True, help="coupling grid, lo:hi:count")
    _add_common(p)

    p = sub.add_parser("scatter-2p", help="one collision on a line")
    _add_model(p)
    p.add_argument("--width", type=int, default=16)
    p.add_argument("--sites", type=int, default=256)
    _add_common(p)

    p = sub.add_parser("scaling-study", help="collision error vs packet width")
    _add_model(p)
    p.add_argument("--widths", required=True,
                   help="packet widths, lo:hi:count or comma list")
    p.add_argument("--sites-per-width", type=int, default=16)
    _add_common(p)

    p = sub.add_parser("simulate-G", help="collision gate on the switch gadget")
    _add_model(p)
    p.add_argument("--width", type=int, default=16)
    p.add_argument("--line-len", dest="line_len", type=int, default=None,
                   help="central line length (default 12x width)")
    p.add_argument("--port-len", dest="port_len", type=int, default=None,
                   help="exit rail length (default 6x width)")
    _add_common(p)

    p = sub.add_parser("synth", help="plan G^k for a target phase")
    p.add_argument("--theta", type=float, required=True,
                   help="per-collision singlet phase (radians)")
    p.add_argument("--gamma-t", dest="gamma_t", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--cap", type=int, default=10 ** 7)
    _add_common(p)

    p = sub.add_parser("cnot-sim", help="run an exchange schedule file")
    p.add_argument("--schedule", required=True, help="JSON schedule file")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--theta", type=float,
                   default=math.pi * (math.sqrt(5.0) - 1.0) / 2.0,
                   help="per-collision singlet phase (default: golden)")
    p.add_argument("--n-logical", type=int, choices=(1, 2), default=2)
    p.add_argument("--cap", type=int, default=10 ** 7)
    _add_common(p)

    p = sub.add_parser("measure", help="third-rail readout statistics")
    p.add_argument("--state", choices=("0L", "1L"), required=True)
    p.add_argument("--shots", type=int, default=0)
    p.add_argument("--vote-repetitions", type=int, default=501)
    _add_common(p, seed=True)

    return parser


_COMMANDS = {
    "switch-verify": _cmd_switch_verify,
    "scatter-1p": _cmd_scatter_1p,
    "phase-curve": _cmd_phase_curve,
    "scatter-2p": _cmd_scatter_2p,
    "scaling-study": _cmd_scaling_study,
    "simulate-G": _cmd_simulate_g,
    "synth": _cmd_synth,
    "cnot-sim": _cmd_cnot_sim,
    "measure": _cmd_measure,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
