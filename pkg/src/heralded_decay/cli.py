"""Command-line driver: simulations, analytic tables, mu optimization and
figure data, all written as CSV with a key=value run manifest.

    heralded-decay simulate --scheme counting --pi-e 0.5 --n-traj 20000 --out mean.csv
    heralded-decay analytic --quantity pa --pi-e 0:0.99:100 --mu 0.5 --out pa.csv
    heralded-decay optimize-mu --pi-e 0.05:0.95:19 --verify --out mu.csv
    heralded-decay figure --figure 6 --out-dir fig6 --seed 7
    heralded-decay replay fig6/manifest.txt
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import shlex
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, analytic
from .detection import b_jump_population_map
from .qubit import DetectionScheme, Params
from .trajectory import (
    SimConfig,
    conditioned_trajectory,
    run_ensemble,
    run_trajectory,
    strong_lo_excursion_probability,
)

FIGURES = ("1", "2a", "2b", "3", "4", "5", "6")
QUANTITIES = ("p0", "pa", "pba", "pb0", "pbb0", "pbba", "pn", "qm")
_SEQ_OF = {"p0": "0", "pa": "A", "pba": "BA", "pb0": "B0", "pbb0": "BB0", "pbba": "BBA"}
FIGURE_GRID = np.linspace(0.0, 5.0, 500)


class UsageError(Exception):
    pass


def fmt(x) -> str:
    """Locale-independent float formatting with 17 significant digits."""
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def write_csv(path: Path | None, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    if path is None:
        sys.stdout.write(buf.getvalue())
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(buf.getvalue())


def parse_sweep(text: str) -> np.ndarray:
    """``0.5`` or ``start:stop:n`` (inclusive, n points)."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        if len(parts) == 3:
            return np.linspace(float(parts[0]), float(parts[1]), int(parts[2]))
    except ValueError:
        pass
    raise UsageError(f"expected a number or start:stop:n, got {text!r}")


# -- simulate -------------------------------------------------------------------


def _scheme(args) -> DetectionScheme:
    if args.scheme == "fixed-lo":
        if args.alpha is None:
            raise UsageError("--scheme fixed-lo requires --alpha")
        return DetectionScheme.fixed_lo(args.alpha * np.sqrt(args.gamma))
    if args.alpha is not None:
        raise UsageError(f"--alpha is not allowed with --scheme {args.scheme}")
    return DetectionScheme.counting() if args.scheme == "counting" else DetectionScheme.adaptive()


def trajectory_rows(rec):
    rows = [(t, pe, "-", al.real, al.imag) for t, pe, al in zip(rec.times, rec.populations, rec.alphas)]
    rows += [(e.t, e.post_population, e.detector, e.alpha.real, e.alpha.imag) for e in rec.events]
    rows.sort(key=lambda r: (r[0], r[2] != "-"))
    return rows


def cmd_simulate(args) -> list[Path | None]:
    cfg = SimConfig(
        Params(args.pi_e, args.mu, args.gamma), _scheme(args), t_max=args.t_max,
        p_jump_max=args.p_jump_max, n_traj=args.n_traj, master_seed=args.seed,
        record_t_max=args.record_t_max, record_points=args.points,
    )
    if args.n_traj == 1:
        rec = run_trajectory(cfg, 0)
        write_csv(args.out, ["t", "pe", "event", "alpha_re", "alpha_im"], trajectory_rows(rec))
    else:
        ens = run_ensemble(cfg, workers=args.workers)
        write_csv(args.out, ["t", "mean_pe", "stderr"],
                  zip(ens.times, ens.mean_population, ens.standard_error))
    return [args.out]


# -- analytic -------------------------------------------------------------------


def analytic_value(quantity: str, p: Params, order: int = 2) -> float:
    if quantity in _SEQ_OF:
        return analytic.p_sequence(_SEQ_OF[quantity], p)
    table = analytic.accumulate(p, order, order)
    return table.p_n[order] if quantity == "pn" else table.q_m[order]


def cmd_analytic(args) -> list[Path | None]:
    if args.quantity not in QUANTITIES:
        raise UsageError(f"unsupported quantity {args.quantity!r}; choose from {', '.join(QUANTITIES)}")
    rows = []
    for pe in parse_sweep(args.pi_e):
        value = analytic_value(args.quantity, Params(float(pe), args.mu), args.order)
        rows.append((pe, args.mu, args.quantity, value))
    write_csv(args.out, ["pi_e", "mu", "quantity", "value"], rows)
    return [args.out]


# -- optimize-mu ----------------------------------------------------------------


def cmd_optimize_mu(args) -> list[Path | None]:
    header = ["pi_e", "mu_star", "pa_star"] + (["mu_grid", "pa_grid"] if args.verify else [])
    rows = []
    for pe in parse_sweep(args.pi_e):
        opt = analytic.optimize_mu(float(pe))
        row = [pe, opt.mu_star, opt.p_a_star]
        if args.verify:
            row += [opt.mu_grid, opt.p_a_grid]
        rows.append(row)
    write_csv(args.out, header, rows)
    return [args.out]


# -- figure ---------------------------------------------------------------------


def _fig1(out: Path, args) -> list[Path]:
    p = Params(0.5, 0.5)
    files = {
        "nojump": conditioned_trajectory(p, DetectionScheme.counting(), FIGURE_GRID),
        "jump": conditioned_trajectory(p, DetectionScheme.counting(), FIGURE_GRID, [(1.2, "A")]),
    }
    written = []
    for name, rec in files.items():
        write_csv(out / f"{name}.csv", ["t", "pe", "event", "alpha_re", "alpha_im"], trajectory_rows(rec))
        written.append(out / f"{name}.csv")
    cfg = SimConfig(p, DetectionScheme.counting(), t_max=5.0, n_traj=args.n_traj or 20_000,
                    master_seed=args.seed, p_jump_max=args.p_jump_max)
    ens = run_ensemble(cfg, workers=args.workers)
    write_csv(out / "mean.csv", ["t", "mean_pe", "stderr"],
              zip(ens.times, ens.mean_population, ens.standard_error))
    write_csv(out / "exponential.csv", ["t", "pe"], zip(FIGURE_GRID, 0.5 * np.exp(-FIGURE_GRID)))
    return written + [out / "mean.csv", out / "exponential.csv"]


def _fig2(out: Path, args, alpha: float) -> list[Path]:
    cfg = SimConfig(Params(0.5, 0.5), DetectionScheme.fixed_lo(alpha), t_max=5.0,
                    n_traj=args.n_traj or 20_000, master_seed=args.seed,
                    p_jump_max=args.p_jump_max)
    rec = run_trajectory(cfg, 0)
    write_csv(out / "trajectory.csv", ["t", "pe", "event", "alpha_re", "alpha_im"], trajectory_rows(rec))
    ens = run_ensemble(cfg, workers=args.workers)
    write_csv(out / "mean.csv", ["t", "mean_pe", "stderr"],
              zip(ens.times, ens.mean_population, ens.standard_error))
    return [out / "trajectory.csv", out / "mean.csv"]


def _fig3(out: Path, args) -> list[Path]:
    p = Params(0.5, 0.5)
    scheme = DetectionScheme.adaptive()
    runs = {
        "nojump": [],
        "a_jump": [(1.4, "A")],
        "b_jump": [(2.5, "B")],
    }
    written = []
    for name, clicks in runs.items():
        rec = conditioned_trajectory(p, scheme, FIGURE_GRID, clicks)
        write_csv(out / f"{name}.csv", ["t", "pe", "event", "alpha_re", "alpha_im"], trajectory_rows(rec))
        written.append(out / f"{name}.csv")
    x = np.linspace(0.0, 0.99, 100)
    write_csv(out / "inset.csv", ["pe_before", "pe_after"], zip(x, b_jump_population_map(x, p.mu)))
    return written + [out / "inset.csv"]


def _fig4(out: Path, args) -> list[Path]:
    mu = 0.5
    pe = np.linspace(0.0, 0.99, 100)
    pa = [analytic.p_a(Params(float(x), mu)) for x in pe]
    one_minus_p0 = [1.0 - analytic.p0(Params(float(x), mu)) for x in pe]
    write_csv(out / "pa.csv", ["pi_e", "pa"], zip(pe, pa))
    write_csv(out / "bound_pi_e.csv", ["pi_e", "bound"], zip(pe, pe))
    write_csv(out / "bound_1_minus_p0.csv", ["pi_e", "bound"], zip(pe, one_minus_p0))
    written = [out / "pa.csv", out / "bound_pi_e.csv", out / "bound_1_minus_p0.csv"]
    if args.phom_mc:
        rows = []
        n = args.n_traj or 2000
        for x in np.linspace(0.1, 0.9, 9):
            cfg = SimConfig(Params(float(x), mu), DetectionScheme.fixed_lo(5.0), t_max=10.0,
                            n_traj=n, master_seed=args.seed, p_jump_max=args.p_jump_max)
            est = strong_lo_excursion_probability(cfg, 0.99, workers=args.workers)
            rows.append((x, est, np.sqrt(est * (1 - est) / n)))
        write_csv(out / "phom_mc_estimate.csv", ["pi_e", "phom_estimate", "stderr"], rows)
        written.append(out / "phom_mc_estimate.csv")
    return written


def _fig5(out: Path, args) -> list[Path]:
    pe = np.linspace(0.0, 0.99, 100)
    written = []
    for mu in (0.2, 0.5, 0.8):
        pa = analytic.p_a_closed_vec(pe, mu)
        one_minus_p0 = [1.0 - analytic.p0(Params(float(x), mu)) for x in pe]
        write_csv(out / f"pa_mu{mu}.csv", ["pi_e", "pa"], zip(pe, pa))
        write_csv(out / f"one_minus_p0_mu{mu}.csv", ["pi_e", "bound"], zip(pe, one_minus_p0))
        written += [out / f"pa_mu{mu}.csv", out / f"one_minus_p0_mu{mu}.csv"]
    rows = []
    for x in np.linspace(0.01, 0.99, 99):
        opt = analytic.optimize_mu(float(x))
        rows.append((x, opt.mu_star, opt.p_a_star))
    write_csv(out / "mu_star.csv", ["pi_e", "mu_star", "pa_star"], rows)
    write_csv(out / "bound_pi_e.csv", ["pi_e", "bound"], zip(pe, pe))
    return written + [out / "mu_star.csv", out / "bound_pi_e.csv"]


def _fig6(out: Path, args) -> list[Path]:
    written = []
    pe = np.linspace(0.0, 0.98, 50)
    for mu in (0.2, 0.5, 0.8):
        rows = []
        for x in pe:
            t = analytic.accumulate(Params(float(x), mu))
            rows.append((x, *t.p_n, *t.q_m))
        path = out / f"panel_mu{mu}.csv"
        write_csv(path, ["pi_e", "P0", "P1", "P2", "Q0", "Q1", "Q2"], rows)
        written.append(path)
    return written


def cmd_figure(args) -> list[Path]:
    if args.figure not in FIGURES:
        raise UsageError(f"unknown figure {args.figure!r}; choose from {', '.join(FIGURES)}")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.figure == "1":
        return _fig1(out, args)
    if args.figure in ("2a", "2b"):
        return _fig2(out, args, 5.0 if args.figure == "2a" else 1.0)
    return {"3": _fig3, "4": _fig4, "5": _fig5, "6": _fig6}[args.figure](out, args)


# -- manifest -------------------------------------------------------------------


def write_manifest(path: Path, argv: list[str], args, seconds: float, outputs) -> None:
    config = {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items())
              if k != "func"}
    lines = [
        f"command=heralded-decay {shlex.join(argv)}",
        f"argv={json.dumps(argv)}",
        f"config={json.dumps(config, sort_keys=True)}",
        f"master_seed={config.get('seed', '')}",
        f"code_version={__version__}",
        f"wall_clock_seconds={seconds:.3f}",
        f"outputs={','.join(str(o) for o in outputs)}",
    ]
    path.write_text("\n".join(lines) + "\n")


def read_manifest(path: Path) -> dict[str, str]:
    entries = {}
    for line in Path(path).read_text().splitlines():
        if line.strip():
            key, _, value = line.partition("=")
            entries[key] = value
    return entries


def cmd_replay(args) -> list:
    argv = json.loads(read_manifest(args.manifest)["argv"])
    if argv and argv[0] == "replay":
        raise UsageError("a replay manifest cannot be replayed")
    return run(argv)


# -- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heralded-decay", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one trajectory or an ensemble")
    s.add_argument("--scheme", choices=["counting", "fixed-lo", "adaptive"], required=True)
    s.add_argument("--alpha", type=float, help="fixed LO amplitude in units of sqrt(gamma)")
    s.add_argument("--mu", type=float, default=0.5)
    s.add_argument("--pi-e", type=float, required=True)
    s.add_argument("--gamma", type=float, default=1.0)
    s.add_argument("--n-traj", type=int, default=1)
    s.add_argument("--t-max", type=float, default=20.0)
    s.add_argument("--record-t-max", type=float, default=5.0)
    s.add_argument("--points", type=int, default=500)
    s.add_argument("--p-jump-max", type=float, default=1e-3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", type=Path)
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("analytic", help="evaluate sequence probabilities")
    a.add_argument("--quantity", required=True)
    a.add_argument("--pi-e", required=True, help="value or start:stop:n")
    a.add_argument("--mu", type=float, default=0.5)
    a.add_argument("--order", type=int, default=2, choices=[0, 1, 2], help="N or M for pn/qm")
    a.add_argument("--out", type=Path)
    a.set_defaults(func=cmd_analytic)

    o = sub.add_parser("optimize-mu", help="transmission maximizing P_A")
    o.add_argument("--pi-e", required=True, help="value or start:stop:n")
    o.add_argument("--verify", action="store_true", help="add grid-scan columns")
    o.add_argument("--out", type=Path)
    o.set_defaults(func=cmd_optimize_mu)

    f = sub.add_parser("figure", help="write the data series of a figure")
    f.add_argument("--figure", required=True)
    f.add_argument("--out-dir", required=True, type=Path)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--n-traj", type=int, default=0, help="ensemble size (0: figure default)")
    f.add_argument("--p-jump-max", type=float, default=1e-3)
    f.add_argument("--workers", type=int, default=1)
    f.add_argument("--phom-mc", action="store_true",
                   help="figure 4: add a Monte Carlo estimate of the strong-LO curve")
    f.set_defaults(func=cmd_figure)

    r = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    r.add_argument("manifest", type=Path)
    r.set_defaults(func=cmd_replay)
    return parser


def run(argv: list[str]) -> list:
    """Execute one command and return the files it wrote."""
    argv = list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        outputs = args.func(args)
    except (UsageError, ValueError) as exc:
        parser.exit(2, f"heralded-decay: error: {exc}\n")
    if args.command == "replay":
        return outputs
    files = [o for o in outputs if o is not None]
    if files:
        if args.command == "figure":
            manifest = Path(args.out_dir) / "manifest.txt"
        else:
            manifest = files[0].with_name(files[0].name + ".manifest.txt")
        write_manifest(manifest, argv, args, time.perf_counter() - start, files)
    return files


def main(argv: list[str] | None = None) -> int:
    run(sys.argv[1:] if argv is None else argv)
    return 0


if __name__ == "__main__":
    main()
