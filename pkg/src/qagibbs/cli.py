"""Command-line driver: ``qagibbs <command> [options]``.

Every command that writes data puts a CSV (or JSON) under ``--out`` and a
``<stem>.manifest.json`` beside it recording inputs, seeds and versions.
"""
import argparse
import csv
import json
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, _accel
from .backends import ANNEAL_LABELS, collect_with_gauges, make_backend
from .distributions import (DiscreteDistribution, GibbsFamily, build_alpha_grid,
                            empirical_distribution, finite_sampling_bound)
from .errors import QAGibbsError
from .instances import NAMES, generate_instance, load_instance, resolve_model
from .ising import ground_states
from .screening import three_spin_sweep, zero_crossing

DEFAULT_ALPHA_MAX = 13.0


def cell_seed(seed, *key):
    """Independent per-cell seed derived from the run seed and a grid position."""
    return int(np.random.SeedSequence(int(seed), spawn_key=tuple(key)).generate_state(1, np.uint64)[0])


def versions():
    out = {"qagibbs": __version__, "numpy": np.__version__, "python": platform.python_version()}
    if _accel.HAVE_NUMBA:
        out["numba"] = _accel.numba.__version__
    out["kernels"] = "numba" if _accel.USE_NUMBA else "numpy"
    return out


def _inputs(args):
    skip = {"func", "config"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def write_manifest(path, args, seeds, extra=None):
    manifest = {
        "command": args.command,
        "inputs": _inputs(args),
        "seeds": seeds,
        "versions": versions(),
        "output": Path(path).name,
    }
    manifest.update(extra or {})
    mpath = Path(path).with_suffix(".manifest.json")
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return mpath


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


def _fmt(x):
    return repr(float(x))


def _unit_interval(values, what):
    for v in values:
        if not 0.0 <= v <= 1.0:
            raise SystemExit(f"error: {what} value {v} outside [0, 1]")
    return values


def _backend(args):
    options = dict(args.backend_options or {})
    if args.backend == "remote":
        options.setdefault("fixture_dir", args.fixtures)
        options.setdefault("mode", args.remote_mode)
    return make_backend(args.backend, **options)


def cmd_degeneracy(args):
    model = resolve_model(args.instance, args.dwave_convention)
    gs = ground_states(model)
    report = {"instance": args.instance, "degeneracy": gs.degeneracy, "min_energy": gs.min_energy,
              "sites": model.n}
    if args.instance in NAMES:
        report["declared_degeneracy"] = load_instance(args.instance, args.dwave_convention).declared_degeneracy
    print(json.dumps(report))
    return report


def tv_sweep_rows(model, backend, alpha_ins, labels, alpha_max, samples, batch, seed, trials=8, workers=1):
    """Rows ``(alpha_in, label, tv, alpha_out, tv_floor)`` in grid order."""
    family = GibbsFamily(model, build_alpha_grid(alpha_max))

    def run(cell):
        i, j = cell
        a_in, label = alpha_ins[i], labels[j]
        s = cell_seed(seed, i, j)
        got = collect_with_gauges(backend, model.scaled(a_in), samples, batch=batch, seed=s,
                                  anneal_label=label, alpha_in=a_in)
        alpha_out, tv = family.fit(empirical_distribution(got))
        floor = finite_sampling_bound(model, alpha_out, samples, trials=trials, seed=s)
        return (a_in, label, tv, alpha_out, floor), s

    cells = [(i, j) for i in range(len(alpha_ins)) for j in range(len(labels))]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            out = list(pool.map(run, cells))
    else:
        out = [run(c) for c in cells]
    return [r for r, _ in out], {f"{i},{j}": s for (i, j), (_, s) in zip(cells, out)}


def cmd_tv_sweep(args):
    model = resolve_model(args.instance, args.dwave_convention)
    alpha_ins = _unit_interval(args.alpha_in or list(build_alpha_grid(1.0)), "alpha_in")
    labels = args.labels or list(ANNEAL_LABELS)
    rows, seeds = tv_sweep_rows(model, _backend(args), alpha_ins, labels, args.alpha_max, args.samples,
                                args.batch, args.seed, args.floor_trials, args.workers)
    path = write_csv(Path(args.out) / "tv_sweep.csv", ["alpha_in", "anneal_label", "tv", "alpha_out", "tv_floor"],
                     [(_fmt(a), lab, _fmt(tv), _fmt(ao), _fmt(fl)) for a, lab, tv, ao, fl in rows])
    write_manifest(path, args, {"run": args.seed, "cells": seeds}, {"rows": len(rows)})
    print(path)
    return path


def _chain_rows(args, source, stem):
    grid = _unit_interval(args.j_grid or list(build_alpha_grid(1.0)), "J_in")
    params = {"beta": args.beta}
    if source == "toy":
        params.update(gamma=args.gamma, eta=args.eta)
    elif source == "bs":
        params.update(chi=args.chi)
    else:
        params.update(num_samples=args.samples, batch=args.batch, seed=args.seed, anneal_label=args.label)
    rows = three_spin_sweep(grid, source, workers=args.workers, **params)
    path = write_csv(Path(args.out) / f"{stem}.csv", ["j_in", "j12_rec", "j23_rec", "j13_rec"],
                     [(_fmt(r.j_in), _fmt(r.j12), _fmt(r.j23), _fmt(r.j13)) for r in rows])
    crossing = zero_crossing([r.j_in for r in rows], [r.j13 for r in rows])
    seeds = {"run": args.seed}
    if not isinstance(source, str):
        seeds["points"] = [args.seed + k for k in range(len(grid))]
    write_manifest(path, args, seeds, {
        "rows": len(rows), "j13_zero_crossing": crossing,
        "converged": all(r.converged for r in rows),
    })
    print(path)
    return path


def cmd_chain3(args):
    source = args.source
    if source == "backend":
        source = _backend(args)
    return _chain_rows(args, source, "chain3")


def cmd_bs(args):
    return _chain_rows(args, "bs", "bs")


def _load_nu(path, n_sites):
    data = json.loads(Path(path).read_text())
    if "configs" in data:
        return empirical_distribution(np.asarray(data["configs"], dtype=np.int64), n_sites)
    if "probs" in data:
        return DiscreteDistribution(int(data.get("n_sites", n_sites)), np.asarray(data["probs"], dtype=float))
    raise SystemExit(f"error: {path} holds neither 'configs' nor 'probs'")


def cmd_fit_alpha(args):
    model = resolve_model(args.instance, args.dwave_convention)
    nu = _load_nu(args.nu_file, model.n)
    alpha_out, tv = GibbsFamily(model, build_alpha_grid(args.alpha_max)).fit(nu)
    report = {"alpha_out": alpha_out, "tv": tv, "alpha_max": args.alpha_max}
    print(json.dumps(report))
    return report


def cmd_gen_instance(args):
    rng = np.random.default_rng(args.seed)
    model, deg = generate_instance(rng, args.with_fields, args.target_degeneracy, args.max_tries)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"instance-{args.seed}.json"
    path.write_text(json.dumps(model.to_dict()) + "\n")
    write_manifest(path, args, {"run": args.seed}, {"degeneracy": deg})
    print(json.dumps({"path": str(path), "degeneracy": deg}))
    return path


def cmd_sample(args):
    model = resolve_model(args.instance, args.dwave_convention)
    _unit_interval([args.alpha_in], "alpha_in")
    got = collect_with_gauges(_backend(args), model.scaled(args.alpha_in), args.samples, batch=args.batch,
                              seed=args.seed, anneal_label=args.label, alpha_in=args.alpha_in)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "samples.json"
    path.write_text(got.to_json() + "\n")
    write_manifest(path, args, {"run": args.seed}, {"samples": len(got), "gauges": len(got.gauges)})
    print(path)
    return path


def _label(text):
    try:
        return int(text)
    except ValueError:
        return text


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--backend", choices=("exact", "toy", "emulator", "remote"), default="exact")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--config", help="JSON file whose keys override option defaults")
    common.add_argument("--dwave-convention", action=argparse.BooleanOptionalAction, default=True,
                        help="negate catalog J and h on load (tables use the D-Wave sign convention)")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--fixtures", default="fixtures", help="remote backend fixture directory")
    common.add_argument("--remote-mode", choices=("replay", "record", "live"), default="replay")

    p = argparse.ArgumentParser(prog="qagibbs", description="Gibbs-sampling analysis toolkit for small Ising models.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("degeneracy", parents=[common], help="brute-force ground-state degeneracy")
    s.add_argument("instance", help="catalog name or instance JSON file")
    s.set_defaults(func=cmd_degeneracy)

    s = sub.add_parser("tv-sweep", parents=[common], help="TV and alpha_out per (alpha_in, anneal label)")
    s.add_argument("--instance", default="GSD-6")
    s.add_argument("--alpha-in", type=float, nargs="+", help="programming scales (default: the 30-point grid)")
    s.add_argument("--alpha-max", type=float, default=DEFAULT_ALPHA_MAX, help="top of the alpha_out search grid")
    s.add_argument("--labels", type=_label, nargs="+")
    s.add_argument("--samples", type=int, default=1_000_000)
    s.add_argument("--batch", type=int, default=100)
    s.add_argument("--floor-trials", type=int, default=8)
    s.set_defaults(func=cmd_tv_sweep)

    chain_help = {"chain3": "three-spin chain reconstruction sweep",
                  "bs": "three-spin sweep under the background-susceptibility model"}
    for name, func in (("chain3", cmd_chain3), ("bs", cmd_bs)):
        s = sub.add_parser(name, parents=[common], help=chain_help[name])
        s.add_argument("--j-grid", type=float, nargs="+", help="J_in values (default: the 30-point grid)")
        s.add_argument("--beta", type=float, default=11.0)
        if name == "chain3":
            s.add_argument("--source", choices=("toy", "bs", "backend"), default="toy")
            s.add_argument("--gamma", type=float, default=0.013)
            s.add_argument("--eta", type=float, default=0.04)
            s.add_argument("--samples", type=int, default=5_000_000)
            s.add_argument("--batch", type=int, default=100)
            s.add_argument("--label", type=_label, default=1)
        s.add_argument("--chi", type=float, default=0.05)
        s.set_defaults(func=func)

    s = sub.add_parser("fit-alpha", parents=[common], help="closest Gibbs temperature for an observed law")
    s.add_argument("nu_file", help="JSON with 'configs' (sample indices) or 'probs'")
    s.add_argument("--instance", default="GSD-6")
    s.add_argument("--alpha-max", type=float, default=DEFAULT_ALPHA_MAX)
    s.set_defaults(func=cmd_fit_alpha)

    s = sub.add_parser("gen-instance", parents=[common], help="random +-1 instance on the two-cell graph")
    s.add_argument("--with-fields", action="store_true")
    s.add_argument("--target-degeneracy", type=int)
    s.add_argument("--max-tries", type=int, default=10_000)
    s.set_defaults(func=cmd_gen_instance)

    s = sub.add_parser("sample", parents=[common], help="gauge-cycled samples from a backend")
    s.add_argument("--instance", default="GSD-6")
    s.add_argument("--alpha-in", type=float, default=0.3)
    s.add_argument("--label", type=_label, default=1)
    s.add_argument("--samples", type=int, default=10_000)
    s.add_argument("--batch", type=int, default=100)
    s.set_defaults(func=cmd_sample)

    for action in sub.choices.values():
        action.set_defaults(backend_options=None)
    p.commands = sub.choices
    return p


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    cfg = json.loads(Path(known.config).read_text())
    if not isinstance(cfg, dict):
        raise SystemExit("error: config file must hold a JSON object")
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    for action in parser.commands.values():
        action.set_defaults(**cfg)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    _apply_config(parser, argv)
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (QAGibbsError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
