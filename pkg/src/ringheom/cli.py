"""Command line front end: ``ringheom <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from importlib import metadata
from pathlib import Path

from .config import ConfigError, RunConfig, load_config
from .io import write_csv, write_manifest
from . import pipeline

__all__ = ["main", "build_parser"]

_FLAGS = [
    # (flag, config field, type, help)
    ("--model", "model", str, "risb or cl"),
    ("--regime", "regime", str, "markovian or heom"),
    ("--mass", "mass", float, "particle mass"),
    ("--radius", "radius", float, "ring radius"),
    ("--charge", "charge", float, "particle charge"),
    ("--flux", "flux", str, "comma separated flux values in units of the flux quantum"),
    ("--eta", "eta", float, "coupling strength"),
    ("--gamma", "gamma", float, "Drude cut-off"),
    ("--beta", "beta", float, "inverse temperature"),
    ("--K", "pade_K", int, "number of Pade poles"),
    ("--N", "N_trunc", int, "hierarchy depth"),
    ("--closure", "closure", str, "CL closure: terminator or zero"),
    ("--solver", "solver", str, "hierarchy steady state: implicit or relax"),
    ("--relax-horizon", "relax_horizon", float, "longest relaxation time"),
    ("--relax-eps", "relax_eps", float, "relaxation stopping threshold"),
    ("--n-theta", "n_theta", int, "angle points"),
    ("--n-max", "n_max", int, "largest momentum index"),
    ("--n-p", "cl_n_p", int, "CL momentum points"),
    ("--dp", "cl_dp", float, "CL momentum spacing"),
    ("--cl-order", "cl_order", int, "CL momentum difference order (2 or 4)"),
    ("--tol", "tol", float, "integrator tolerance"),
    ("--steady-tol", "steady_tol", float, "steady-state residual bound (default per solver)"),
    ("--t-max", "t_max", float, "response record length"),
    ("--dt", "dt", float, "response sampling step"),
    ("--damping", "damping", float, "spectral window damping (default 2 pi/t_max)"),
    ("--out", "output_dir", str, "output directory (default $RINGHEOM_OUTPUT or ./ringheom_out)"),
    ("--workers", "workers", int, "parallel workers for flux sweeps"),
]


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI run configuration")
    common.add_argument("-v", "--verbose", action="store_true",
                        help="emit key=value diagnostics on stderr")
    for flag, name, typ, hlp in _FLAGS:
        common.add_argument(flag, dest=name, type=typ, default=None, help=hlp)

    p = argparse.ArgumentParser(prog="ringheom",
                                description="Dissipative ring dynamics in a threaded flux.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("equilibrium", parents=[common], help="momentum distribution")
    sp = sub.add_parser("spectrum", parents=[common], help="dipole absorption spectrum")
    sp.set_defaults()
    cp = sub.add_parser("current", parents=[common], help="persistent current sweep")
    cp.add_argument("--allow-markovian", action="store_true",
                    help="permit the Markovian equation for the current")
    kp = sub.add_parser("kernel-check", parents=[common], help="Pade kernel vs Matsubara sum")
    kp.add_argument("--K-list", default="0,1,2,3,4,5,6")
    kp.add_argument("--M", type=int, default=1000)
    vp = sub.add_parser("converge", parents=[common], help="hierarchy convergence scan")
    vp.add_argument("--N-list", default="2,4,6")
    vp.add_argument("--K-list", default="")
    vp.add_argument("--observable", default="current", choices=["current", "peak"])
    return p


def _ints(text: str):
    return [int(x) for x in text.replace(",", " ").split()]


def _tag(i: int, n: int) -> str:
    return "" if n == 1 else f"_{i:03d}"


def _equilibrium(cfg: RunConfig, out: Path, args):
    files = []
    for i, fb in enumerate(cfg.flux):
        eq = pipeline.equilibrium(cfg, fb)
        d = eq.distribution
        header = ["n_or_p", "value"]
        cols = [d.n if d.is_discrete else d.p, d.value]
        if eq.reference is not None:
            header.append("gaussian")
            cols.append(eq.reference)
        files.append(write_csv(out / f"pdist{_tag(i, len(cfg.flux))}.csv", header, zip(*cols)))
    return files


def _spectrum(cfg: RunConfig, out: Path, args):
    files = []
    for i, fb in enumerate(cfg.flux):
        sr = pipeline.spectrum_run(cfg, fb)
        tag = _tag(i, len(cfg.flux))
        files.append(write_csv(out / f"spectrum{tag}.csv", ["omega", "sigma"],
                               zip(sr.omega, sr.sigma)))
        files.append(write_csv(out / f"r1{tag}.csv", ["t", "value"], zip(sr.t, sr.r1)))
    return files


def _pool_map(cfg: RunConfig, fn, jobs):
    # results come back in job order whatever the worker count
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def _current_point(job):
    cfg, fb, allow = job
    return pipeline.current_run(cfg, fb, allow_markovian=allow)


def _current(cfg: RunConfig, out: Path, args):
    flux = sorted(cfg.flux)
    values = _pool_map(cfg, _current_point, [(cfg, fb, args.allow_markovian) for fb in flux])
    rows = [(fb, j, cfg.eta, cfg.beta, cfg.pade_K, cfg.N_trunc) for fb, j in zip(flux, values)]
    return [write_csv(out / "current.csv",
                      ["phi_bar", "current", "eta", "beta", "K", "N_trunc"], rows)]


def _kernel(cfg: RunConfig, out: Path, args):
    rows = pipeline.kernel_table(cfg, _ints(args.K_list), args.M)
    return [write_csv(out / "kernel.csv",
                      ["K", "t", "re_pade", "im_pade", "re_matsubara", "abs_err"], rows)]


def _converge_point(job):
    cfg, (K, N, fb), observable = job
    return pipeline.convergence_point(cfg, K, N, fb, observable)


def _converge(cfg: RunConfig, out: Path, args):
    K_list = _ints(args.K_list) if args.K_list else [cfg.pade_K]
    jobs = pipeline.convergence_jobs(cfg, _ints(args.N_list), K_list)
    values = _pool_map(cfg, _converge_point, [(cfg, j, args.observable) for j in jobs])
    rows = [j + (v,) for j, v in zip(jobs, values)]
    return [write_csv(out / "convergence.csv", ["K", "N_trunc", "phi_bar", args.observable], rows)]


_COMMANDS = {"equilibrium": _equilibrium, "spectrum": _spectrum, "current": _current,
             "kernel-check": _kernel, "converge": _converge}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(name)s %(message)s",
                            stream=sys.stderr)
    overrides = {name: getattr(args, name) for _, name, _, _ in _FLAGS}
    try:
        cfg = load_config(args.config, overrides)
        if args.command in ("equilibrium", "spectrum") or (
                args.command == "current" and args.allow_markovian):
            cfg.check_markovian()
    except ConfigError as exc:
        parser.error(str(exc))
    out = cfg.resolved_output()
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    manifest = {"command": args.command, "config": cfg.to_dict(), "version": _version(),
                "argv": list(sys.argv[1:] if argv is None else argv)}
    try:
        files = _COMMANDS[args.command](cfg, out, args)
    except Exception as exc:  # solver failures end the run with a diagnostic file
        manifest.update(status="failed", error=f"{type(exc).__name__}: {exc}",
                        wall_time=time.perf_counter() - start)
        (out / "error.txt").write_text(traceback.format_exc())
        write_manifest(out, manifest)
        print(f"ringheom: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    manifest.update(status="ok", outputs=[Path(f).name for f in files],
                    wall_time=time.perf_counter() - start)
    write_manifest(out, manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
