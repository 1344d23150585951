"""``funnel-ras`` command line: reach, ras and check runs driven by a run spec.

Every run writes into ``--out``, one file set per initial state ``i``:

    traj_<i>.csv      trajectory samples
    report_<i>.json   run report, plus the choice log for ``ras``
    funnel_<i>.json   funnel definition (reach parameters and bumps)
    envelope_<i>.csv  reach and adaptive bounds per sample
    plot_<i>.json     labelled series and obstacle outlines for plotting
    error_<i>.json    only when the run failed

Exit status is 0 when every run terminated with no violations, 1 when a run
failed or violated an invariant, 2 when the spec or the command is invalid.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .adaptive import ModifiedFunnel
from .controller import FunnelLoop
from .errors import FunnelRASError, SpecError, SynthesisError
from .fileio import (RunSpec, load_runspec, parse_runspec, plot_data, read_funnel, read_json,
                     read_trajectory, write_envelope, write_funnel, write_json, write_report,
                     write_trajectory)
from .geometry import Environment
from .reach import make_reach_funnel
from .simulator import check_invariants, simulate
from .synthesis import synthesize

log = logging.getLogger("funnel_ras")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _error_record(out: Path, idx, err: Exception, **extra) -> None:
    name = "error.json" if idx is None else f"error_{idx}.json"
    rec = {"error": type(err).__name__, "message": str(err), **extra}
    for base in type(err).__mro__[1:]:
        if base.__module__ == "funnel_ras.errors":
            rec.setdefault("kind", []).append(base.__name__)
    write_json(out / name, rec)


def _export(out: Path, idx: int, spec: RunSpec, env: Environment, mf: ModifiedFunnel,
            traj, report, **extra) -> None:
    write_trajectory(out / f"traj_{idx}.csv", traj)
    write_report(out / f"report_{idx}.json", report,
                 initial_state=spec.initial_states[idx].tolist(), **extra)
    write_funnel(out / f"funnel_{idx}.json", mf)
    write_envelope(out / f"envelope_{idx}.csv", traj, mf)
    write_json(out / f"plot_{idx}.json", plot_data(traj, env, mf))


def run_reach(spec: RunSpec, idx: int, out: Path) -> bool:
    """Funnel-only run; obstacles are left out of the environment."""
    env = Environment(spec.env.state_space, spec.env.target, ())
    p = spec.params
    x0 = spec.initial_states[idx]
    (out / f"error_{idx}.json").unlink(missing_ok=True)
    try:
        mf = ModifiedFunnel(make_reach_funnel(env, p.eta, p.l, p.rho_inf), (), p.adaptive)
        traj, rep = simulate(spec.plant, FunnelLoop(spec.plant, mf, p.gain, p.xi_mode), x0,
                             cfg=p.sim, env=env)
    except FunnelRASError as err:
        _error_record(out, idx, err, subcommand="reach", initial_state=x0.tolist())
        return False
    _export(out, idx, spec, env, mf, traj, rep, subcommand="reach")
    if not rep.accepted:
        _error_record(out, idx, FunnelRASError(rep.aborted or "funnel violation"),
                      subcommand="reach", funnel_violations=rep.funnel_violations)
    return rep.accepted


def run_ras(spec: RunSpec, idx: int, out: Path) -> bool:
    x0 = spec.initial_states[idx]
    (out / f"error_{idx}.json").unlink(missing_ok=True)
    try:
        res = synthesize(spec.env, spec.plant, x0, spec.params)
    except SynthesisError as err:
        if err.trajectory is not None:
            write_trajectory(out / f"traj_{idx}.csv", err.trajectory)
            write_report(out / f"report_{idx}.json", err.report, subcommand="ras",
                         initial_state=x0.tolist(),
                         choice_log=[c.to_dict() for c in err.choice_log or []])
        _error_record(out, idx, err, subcommand="ras", initial_state=x0.tolist(),
                      choice_log=[c.to_dict() for c in err.choice_log or []])
        return False
    except FunnelRASError as err:
        _error_record(out, idx, err, subcommand="ras", initial_state=x0.tolist())
        return False
    _export(out, idx, spec, spec.env, res.funnel, res.trajectory, res.report, subcommand="ras",
            seed=spec.params.seed, iterations_used=res.iterations_used,
            choice_log=[c.to_dict() for c in res.choice_log])
    return res.report.accepted


def run_check(spec: RunSpec, out: Path) -> int:
    files = sorted(out.glob("traj_*.csv"))
    if not files:
        _error_record(out, None, SpecError(f"no traj_*.csv files in {out}"), subcommand="check")
        return EXIT_USAGE
    status = EXIT_OK
    for path in files:
        idx = path.stem.split("_", 1)[1]
        fpath = out / f"funnel_{idx}.json"
        try:
            traj = read_trajectory(path)
            mf = read_funnel(fpath) if fpath.exists() else None
            if traj.n != spec.env.n:
                raise SpecError(f"{path.name} has {traj.n} states, the spec {spec.env.n}")
            rep = check_invariants(traj, spec.env, mf)
        except (FunnelRASError, ValueError) as err:
            _error_record(out, idx, err, subcommand="check", file=path.name)
            status = EXIT_FAIL
            continue
        write_report(out / f"check_{idx}.json", rep, subcommand="check", file=path.name,
                     funnel_file=fpath.name if mf is not None else None)
        if not rep.accepted:
            log.warning("%s: obstacle violations %s, funnel violations %s", path.name,
                        rep.obstacle_violations, rep.funnel_violations)
            status = EXIT_FAIL
    return status


def _job(args):
    sub, raw, name, idx, out = args
    spec = parse_runspec(raw, name)
    return (run_reach if sub == "reach" else run_ras)(spec, idx, Path(out))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="funnel-ras",
                                 description="Funnel-based reach-avoid-stay control synthesis.")
    ap.add_argument("command", choices=["reach", "ras", "check"])
    ap.add_argument("--spec", required=True, help="run spec (JSON)")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--seed", type=int, help="override synthesis.seed")
    ap.add_argument("--dt", type=float, help="override sim.h")
    ap.add_argument("--horizon", type=float, help="override sim.horizon")
    ap.add_argument("--parallel", action="store_true",
                    help="run the initial states in separate processes")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        spec = load_runspec(args.spec).with_overrides(args.seed, args.dt, args.horizon)
    except FunnelRASError as err:
        _error_record(out, None, err, subcommand=args.command, spec=str(args.spec))
        print(f"funnel-ras: {err}", file=sys.stderr)
        return EXIT_USAGE

    if args.command == "check":
        return run_check(spec, out)

    jobs = [(args.command, spec.raw, spec.name, i, str(out))
            for i in range(len(spec.initial_states))]
    if args.parallel and len(jobs) > 1:
        with ProcessPoolExecutor() as pool:
            results = list(pool.map(_job, jobs))
    else:
        runner = run_reach if args.command == "reach" else run_ras
        results = [runner(spec, i, out) for i in range(len(jobs))]
    for i, ok in enumerate(results):
        if not ok:
            rec = out / f"error_{i}.json"
            detail = ""
            if rec.exists():
                r = read_json(rec)
                detail = f": {r['error']}: {r['message']} (record in {rec})"
            print(f"funnel-ras: initial state {i} failed{detail}", file=sys.stderr)
    return EXIT_OK if all(results) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
