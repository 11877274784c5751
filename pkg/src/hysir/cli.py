"""Command-line front end.

Exit codes: 0 ok, 1 runtime fault, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .config import load_config
from .equilibria import endemic_from_v0, infection_free
from .errors import DomainError, NoEquilibriumError, ValidationError
from .lyapunov import theorem2_condition
from .preisach import MemoryStaircase, RelayBank
from .simulate import Event, Trajectory, classify, run
from .sir import r0

SWEEPABLE = ("sigma", "beta", "v_nat", "mu")


class UsageError(Exception):
    pass


def _num(x):
    return repr(float(x))


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not serialisable: {type(o).__name__}")


def _clean(obj):
    # JSON has no inf/nan
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True, default=_json_default)


def trajectory_csv(traj):
    buf = io.StringIO()
    buf.write("t,I,S,R,v\n")
    for t, I, S, v in zip(traj.t.tolist(), traj.I.tolist(), traj.S.tolist(), traj.v.tolist()):
        buf.write(f"{t!r},{I!r},{S!r},{1.0 - I - S!r},{v!r}\n")
    return buf.getvalue()


def events_json(traj):
    return [{"t": e.t, "I": e.I, "S": e.S, "kind": e.kind} for e in traj.events]


def memory_from_json(obj):
    if obj.get("type") == "relay_bank":
        return RelayBank.from_json(obj)
    return MemoryStaircase.from_json(obj)


def _write_atomic(files):
    # write everything to temporaries first so a failure leaves no partial outputs
    tmp = []
    try:
        for path, text in files.items():
            os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
            t = path + ".tmp"
            with open(t, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            tmp.append((t, path))
        for t, path in tmp:
            os.replace(t, path)
    finally:
        for t, _ in tmp:
            if os.path.exists(t):
                os.remove(t)


def simulate_config(cfg):
    mem0 = cfg.initial_memory()
    return run(cfg.params, cfg.density, cfg.init, mem0, cfg.run.t_end, cfg.solver,
               cfg.classifier, cfg.run.max_doublings, cfg.run.discard)


# --- subcommands ---------------------------------------------------------------

def cmd_simulate(args):
    cfg = load_config(args.config)
    out = args.out or cfg.outputs.get("dir") or "."
    traj, cls = simulate_config(cfg)
    if traj.status != "ok":
        print(f"warning: {traj.message}", file=sys.stderr)
    files = {
        os.path.join(out, "trajectory.csv"): trajectory_csv(traj),
        os.path.join(out, "events.json"): dumps(events_json(traj)),
        os.path.join(out, "final_memory.json"): dumps(traj.final_memory.to_json()),
        os.path.join(out, "attractor.json"): dumps(cls.to_json()),
    }
    _write_atomic(files)
    print(dumps(cls.to_json()))
    return 0


def _sweep_one(job):
    cfg, value = job
    traj, cls = simulate_config(cfg)
    return value, cls


def cmd_sweep(args):
    if args.param not in SWEEPABLE:
        raise UsageError(f"--param must be one of {', '.join(SWEEPABLE)}")
    try:
        values = sorted(float(x) for x in args.values.split(",") if x.strip())
    except ValueError:
        raise UsageError("--values must be a comma separated list of numbers") from None
    if not values:
        raise UsageError("--values is empty")
    cfg = load_config(args.config)
    jobs = [(cfg.with_value(args.param, v), v) for v in values]
    workers = min(len(jobs), os.cpu_count() or 1)
    cap = os.environ.get("HYSIR_THREADS")
    if cap:
        try:
            workers = max(1, min(workers, int(cap)))
        except ValueError:
            raise UsageError("HYSIR_THREADS must be an integer") from None
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["value", "class", "I_star", "S_star", "v_star", "period", "I_bar", "S_bar", "v_bar"])
    for value, cls in results:
        avg = cls.averages or ("", "", "")
        row = [value, cls.kind, cls.I_star, cls.S_star, cls.v_star, cls.period, *avg]
        w.writerow(["" if x is None else (_num(x) if isinstance(x, float) else x) for x in row])
    text = buf.getvalue()
    if args.out:
        _write_atomic({args.out: text})
    sys.stdout.write(text)
    return 0


def cmd_equilibria(args):
    cfg = load_config(args.config)
    p, d = cfg.params, cfg.density
    I0, S0 = infection_free(p)
    v_max = d.total()
    out = {"R0": r0(p), "infection_free": {"I": I0, "S": S0}, "S_star": p.delta / p.beta,
           "v0_range": [p.v_nat, p.v_nat + v_max]}
    rng = {}
    for key, v0 in (("I_star_at_v_nat", p.v_nat), ("I_star_at_v_max", p.v_nat + v_max)):
        try:
            rng[key] = endemic_from_v0(p, v0).I_star
        except NoEquilibriumError:
            rng[key] = None
    out.update(rng)
    print(dumps(out))
    return 0


def cmd_stability(args):
    cfg = load_config(args.config)
    print(dumps(theorem2_condition(cfg.params, cfg.density).to_json()))
    return 0


def read_trajectory_csv(path, params, events=()):
    try:
        with open(path, encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["t", "I", "S", "R", "v"]:
                raise ValidationError(f"{path}: header must be t,I,S,R,v")
            rows = np.array([[float(x) for x in r] for r in reader if r])
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    except ValueError:
        raise ValidationError(f"{path}: non-numeric entry") from None
    if rows.size == 0:
        raise ValidationError(f"{path}: no samples")
    t, I, S, v = rows[:, 0], rows[:, 1], rows[:, 2], rows[:, 4]
    ev = [Event(float(e["t"]), float(e["I"]), float(e["S"]), e["kind"]) for e in events]
    mask = np.isin(t, [e.t for e in ev])
    return Trajectory(t, I, S, v, mask, ev, None, params)


def cmd_analyze(args):
    cfg = load_config(args.config)
    ev_path = args.events or os.path.join(os.path.dirname(os.path.abspath(args.csv)), "events.json")
    events = []
    if os.path.exists(ev_path):
        try:
            with open(ev_path, encoding="utf-8") as fh:
                events = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{ev_path}: malformed JSON ({exc.msg})") from None
    traj = read_trajectory_csv(args.csv, cfg.params, events)
    cls = classify(traj, cfg.classifier, cfg.run.discard)
    print(dumps(cls.to_json()))
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="hysir", description="SIR epidemics with Preisach-hysteretic vaccination.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("simulate", help="integrate one scenario and classify its attractor")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="output directory (default: outputs.dir or .)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="classify one run per parameter value")
    s.add_argument("--config", required=True)
    s.add_argument("--param", required=True, help="sigma, beta, v_nat or mu")
    s.add_argument("--values", required=True, help="comma separated values")
    s.add_argument("--out", help="write the table to this CSV file as well")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("equilibria", help="infection-free point, S* and the I* range")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_equilibria)

    s = sub.add_parser("stability", help="global-stability diagnostic as JSON")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_stability)

    s = sub.add_parser("analyze", help="re-classify an existing trajectory CSV")
    s.add_argument("--config", required=True)
    s.add_argument("--csv", required=True)
    s.add_argument("--events", help="events JSON (default: events.json next to the CSV)")
    s.set_defaults(func=cmd_analyze)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        ap.print_usage(sys.stderr)
        print(f"hysir: error: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, DomainError) as exc:
        print(f"hysir: config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime fault
        print(f"hysir: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
