"""``qentrec`` command line: rotations, libraries, training, evaluation and dynamics.

Every subcommand writes ``run.json`` next to its outputs; it lists every
effective setting, so feeding ``argv`` back reproduces the run.
Exit codes: 0 ok, 2 validation, 3 numerical failure, 4 I/O.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import cnn, harness
from .imaging import DEFAULT_W, FormatError, load_rotations, sample_cue_rotations, save_rotations
from .library import (
    MANIFEST_NAME,
    UnreachableBinError,
    BinningScheme,
    bin_labels,
    build_dissipative_library,
    build_excited_library,
    build_ground_library,
    build_unitary_dynamics_library,
    dynamics_scheme,
    entropy_scheme,
    read_library,
    write_library,
)
from .measures import MeasureKind
from .models import ModelKind, NumericalDriftError

log = logging.getLogger("qentrec")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4
RUN_MANIFEST = "run.json"
PARAMS_NAME = "params.qern"

DESK_L, PAPER_L = 8, 10
# Total images per recipe at full scale (--paper-scale); desk scale divides by ten.
PAPER_COUNTS = {"ground": 50_000, "excited": 50_000, "dynamics": 150_000, "dissipative": 250_000}
DEFAULT_NBIN = {"ground": 4, "excited": 10, "dynamics": 10, "dissipative": 10}
TFI_ONLY = ("dynamics", "dissipative")


class AuditError(RuntimeError):
    pass


def _threads_default() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def _prepare_out(path, force: bool, is_dir: bool = True) -> Path:
    p = Path(path)
    if p.exists() and not force:
        raise FileExistsError(f"{p} exists; pass --force to overwrite")
    if is_dir:
        p.mkdir(parents=True, exist_ok=True)
    else:
        p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _write_run(out_dir: Path, args: argparse.Namespace, **effective) -> None:
    record = {k: v for k, v in vars(args).items() if k != "func"}
    record.update(effective)
    record["argv"] = _argv(args)
    (out_dir / RUN_MANIFEST).write_text(json.dumps(record, sort_keys=True, indent=1, default=str) + "\n",
                                        encoding="utf-8")


def _argv(args) -> list[str]:
    out = [args.command]
    for k, v in sorted(vars(args).items()):
        if k in ("func", "command", "verbose") or v is None or v is False:
            continue
        flag = "--" + k.replace("_", "-")
        if v is True:
            out.append(flag)
        else:
            out += [flag, ",".join(map(str, v)) if isinstance(v, (list, tuple)) else str(v)]
    return out


def _shots(text: str) -> list[int]:
    vals = sorted({int(s) for s in text.split(",") if s.strip()}, reverse=True)
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("shot levels must be positive integers")
    return vals


# --- subcommands ------------------------------------------------------------------


def cmd_gen_rotations(args) -> int:
    L = args.L if args.L is not None else (PAPER_L if args.paper_scale else DESK_L)
    args.L = L
    out = _prepare_out(args.out, args.force, is_dir=False)
    rot = sample_cue_rotations(args.W, L, args.seed)
    save_rotations(rot, out)
    load_rotations(out)  # re-validates unitarity and checksum
    manifest = out.with_name(out.name + ".json")
    _write_json(manifest, {"command": "gen-rotations", "L": L, "W": args.W, "seed": args.seed, "out": str(out)})
    return EXIT_OK


def _write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def _scheme_for(args, L: int) -> BinningScheme:
    kind = MeasureKind(args.measure) if args.measure else (
        MeasureKind.LOG_NEGATIVITY if args.recipe == "dissipative" else MeasureKind.ENTROPY)
    if args.recipe == "dissipative" and kind is not MeasureKind.LOG_NEGATIVITY:
        raise ValueError("the dissipative recipe is labelled by log-negativity")
    if args.recipe != "dissipative" and kind is not MeasureKind.ENTROPY:
        raise ValueError(f"the {args.recipe} recipe is labelled by entropy")
    if args.e_max is not None:
        return BinningScheme(kind, args.e_max, args.nbin)
    if args.recipe == "ground":
        return entropy_scheme(args.nbin)
    return dynamics_scheme(kind, L, args.nbin)


def _split(total: int, weights) -> tuple[int, ...]:
    parts = [total * w // sum(weights) for w in weights]
    parts[-1] += total - sum(parts)
    return tuple(parts)


def audit_library(lib) -> None:
    if not np.all(np.isfinite(lib.images)):
        raise AuditError("non-finite image entries")
    rows = lib.images.astype(np.float64).sum(axis=2)
    if np.abs(rows - 1).max() > 1e-4:
        raise AuditError("image rows are not normalized")
    if np.any(lib.images < 0):
        raise AuditError("negative image entries")
    if not np.array_equal(bin_labels(lib.values, lib.scheme), lib.bins):
        raise AuditError("stored bins disagree with stored values")


def cmd_gen_library(args) -> int:
    if args.recipe in TFI_ONLY and args.model not in (None, ModelKind.TFI_PLUS.value):
        raise ValueError(f"the {args.recipe} recipe is built from tfi+ states only")
    if args.model is None:
        args.model = ModelKind.TFI_PLUS.value
    if args.nbin is None:
        args.nbin = DEFAULT_NBIN[args.recipe]
    if not 2 <= args.nbin <= 10:
        raise ValueError("--nbin must be in 2..10")
    if args.count is None:
        args.count = PAPER_COUNTS[args.recipe] // (1 if args.paper_scale else 10)
    if args.count < 1:
        raise ValueError("--count must be positive")
    rot = load_rotations(args.rotations)
    scheme = _scheme_for(args, rot.L)
    out = _prepare_out(args.out, args.force)
    seed = args.seed
    if args.recipe == "ground":
        lib = build_ground_library(args.model, scheme, args.count, rot, seed)
    elif args.recipe == "excited":
        lib = build_excited_library(args.model, scheme, args.count, rot, seed)
    elif args.recipe == "dynamics":
        lib = build_unitary_dynamics_library(scheme, _split(args.count, (1, 1, 1)), rot, seed)
    else:
        lib = build_dissipative_library(scheme, _split(args.count, (1, 1, 1, 2)), rot, seed)
    lib.meta["rotations_file"] = str(args.rotations)
    audit_library(lib)
    write_library(lib, out)
    audit_library(read_library(out))
    return EXIT_OK


def cmd_train(args) -> int:
    lib = read_library(args.library)
    if args.nbin is not None and args.nbin != lib.scheme.n_bins:
        raise ValueError(f"library uses {lib.scheme.n_bins} bins, --nbin asked for {args.nbin}")
    out = _prepare_out(args.out, args.force)
    cfg = cnn.TrainConfig(learning_rate=args.lr, batch_size=args.batch, epochs=args.epochs, rng_seed=args.seed)
    params, tlog = harness.train_on_library(lib, cfg, init_seed=args.seed)
    if not all(np.all(np.isfinite(t)) for t in params.tensors.values()):
        raise AuditError("trained parameters are not finite")
    cnn.save_params(params, out / PARAMS_NAME)
    with open(out / "training_log.csv", "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(tlog.to_csv_rows())
    _write_run(out, args, scheme=lib.scheme.to_dict(), library_meta=lib.meta, best_epoch=tlog.best_epoch,
               n_train=tlog.n_train, n_validation=tlog.n_validation)
    return EXIT_OK


def _load_params(path) -> cnn.NetworkParams:
    p = Path(path)
    return cnn.load_params(p / PARAMS_NAME if p.is_dir() else p)


def cmd_eval(args) -> int:
    params = _load_params(args.params)
    lib = read_library(args.test_library)
    out = _prepare_out(args.out, args.force)
    stats = harness.evaluate(params, lib)
    if stats.count != len(lib):
        raise AuditError("histogram does not account for every test image")
    harness.write_errors_csv(stats, out / "errors.csv")
    harness.write_stats_csv([(lib.scheme.n_bins, stats)], out / "stats.csv")
    if args.ppm is not None:
        harness.write_ppm(lib.images[args.ppm], out / "image.ppm", scale=8)
    _write_run(out, args, scheme=lib.scheme.to_dict(), n_test=len(lib),
               p_delta0=stats.probability(0), mu=stats.mu, sigma=stats.sigma)
    return EXIT_OK


def cmd_dynamics(args) -> int:
    params = _load_params(args.params)
    rot = load_rotations(args.rotations)
    if params.config.input_shape != (rot.W, 2**rot.L):
        raise ValueError("rotation file does not match the network input shape")
    kind = MeasureKind.ENTROPY if args.gamma == 0 else MeasureKind.LOG_NEGATIVITY
    scheme = dynamics_scheme(kind, rot.L, params.config.n_outputs)
    if args.library is not None:
        lib_scheme = BinningScheme.from_dict(json.loads((Path(args.library) / MANIFEST_NAME).read_text())["scheme"])
        if lib_scheme != scheme:
            raise ValueError(f"training library scheme {lib_scheme} differs from {scheme}")
    if args.ensemble < 1:
        raise ValueError("--ensemble must be positive")
    out = _prepare_out(args.out, args.force)
    times = harness.default_time_grid(args.n_times, args.t_min, args.t_max)
    states = harness.random_product_ensemble(rot.L, args.ensemble, [args.seed, 0])
    ev = harness.evaluate_dynamics(params, states, rot, scheme, gamma=args.gamma, h=args.h, times=times,
                                   shot_levels=args.shots, rng_seed=[args.seed, 1], dt=args.dt)
    if np.any(ev.exact < -1e-12) or np.any(ev.exact > scheme.e_max + 1e-9):
        raise AuditError("exact trajectory values left [0, e_max]")
    harness.write_dynamics_csv(ev, out / "dynamics.csv")
    _write_run(out, args, scheme=scheme.to_dict(), L=rot.L, W=rot.W,
               mean_abs_delta={str(m): ev.mean_abs_delta(m) for m in ev.shot_levels})
    return EXIT_OK


# --- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qentrec", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--force", action="store_true", help="overwrite existing outputs")
        sp.add_argument("--threads", type=int, default=_threads_default())
        sp.add_argument("--paper-scale", action="store_true", help="L=10 and full library sizes")

    sp = sub.add_parser("gen-rotations", help="draw W random local rotations")
    sp.add_argument("--L", type=int, default=None)
    sp.add_argument("--W", type=int, default=DEFAULT_W)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    common(sp)
    sp.set_defaults(func=cmd_gen_rotations)

    sp = sub.add_parser("gen-library", help="build a labelled image library")
    sp.add_argument("--recipe", required=True, choices=["ground", "excited", "dynamics", "dissipative"])
    sp.add_argument("--model", choices=[k.value for k in ModelKind], default=None)
    sp.add_argument("--nbin", type=int, default=None)
    sp.add_argument("--count", type=int, default=None)
    sp.add_argument("--measure", choices=[k.value for k in MeasureKind], default=None)
    sp.add_argument("--e-max", type=float, default=None)
    sp.add_argument("--rotations", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    common(sp)
    sp.set_defaults(func=cmd_gen_library)

    sp = sub.add_parser("train", help="train a network on a library")
    sp.add_argument("--library", required=True)
    sp.add_argument("--nbin", type=int, default=None, help="expected number of bins (checked)")
    sp.add_argument("--epochs", type=int, default=cnn.TrainConfig.epochs)
    sp.add_argument("--lr", type=float, default=cnn.TrainConfig.learning_rate)
    sp.add_argument("--batch", type=int, default=cnn.TrainConfig.batch_size)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    common(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="binning-error statistics on a test library")
    sp.add_argument("--params", required=True)
    sp.add_argument("--test-library", required=True)
    sp.add_argument("--ppm", type=int, default=None, metavar="INDEX", help="also render this test image")
    sp.add_argument("--out", required=True)
    common(sp)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("dynamics", help="track entanglement along random product-state trajectories")
    sp.add_argument("--params", required=True)
    sp.add_argument("--rotations", required=True)
    sp.add_argument("--library", default=None, help="training library, to cross-check the binning")
    sp.add_argument("--gamma", type=float, default=0.0)
    sp.add_argument("--h", type=float, default=harness.DYNAMICS_H)
    sp.add_argument("--ensemble", type=int, default=harness.DEFAULT_ENSEMBLE)
    sp.add_argument("--shots", type=_shots, default=list(harness.DEFAULT_SHOTS))
    sp.add_argument("--n-times", type=int, default=60)
    sp.add_argument("--t-min", type=float, default=0.1)
    sp.add_argument("--t-max", type=float, default=1e3)
    sp.add_argument("--dt", type=float, default=harness.SPLIT_DT)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    common(sp)
    sp.set_defaults(func=cmd_dynamics)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (FormatError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_IO
    except (cnn.TrainingDivergedError, NumericalDriftError, UnreachableBinError, AuditError,
            FloatingPointError) as exc:
        log.error("%s", exc)
        return EXIT_NUMERICAL
    except (ValueError, KeyError) as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
