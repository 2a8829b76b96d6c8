"""``surftopo`` command line: generate, extract, train, predict, evaluate, render.

Every run writes a sidecar next to its main output (``<output>.config``, or
``generate.config`` inside the generated directory) holding the subcommand
and every option as ``key = value`` lines. Passing that file back with
``--config`` replays the run; options given explicitly on the command line
override the recorded ones.

Failures print a single line to stderr,
``surftopo: error command=<sub> type=<kind> message=<json string>``,
and exit with status 2 for usage errors and 1 otherwise.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import evaluation
from .clbp import ClbpConfig, clbp_maps
from .cubical import build_filtration
from .descriptors import PiConfig, persistence_image
from .features import (
    FeatureConfig, describe, patch_diagrams, prepare_patches, read_feature_csv, write_feature_csv,
)
from .grid_ingest import load_depth_map, load_label_mask, save_depth_map, save_label_mask
from .persistence import PersistenceDiagram
from .rusboost import RUSBoostConfig, load_model, predict, save_model, train_rusboost
from .synthetic import BenchmarkSpec, SyntheticSpec, benchmark_maps

MASK_SUFFIX = "_mask.png"
SIDECAR_HEADER = "# surftopo run configuration; replay with: surftopo --config <this file>"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- sidecar ---------------------------------------------------------------

def write_sidecar(path: Path, command: str, args: argparse.Namespace) -> None:
    lines = [SIDECAR_HEADER, f"subcommand = {command}"]
    for key, value in sorted(vars(args).items()):
        if key in ("command", "func", "config"):
            continue
        if value is None:
            text = ""
        elif isinstance(value, bool):
            text = "true" if value else "false"
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    path.write_text("\n".join(lines) + "\n")


def read_sidecar(path) -> dict[str, str]:
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{n}: expected 'key = value'")
        out[key.strip()] = value.strip()
    if "subcommand" not in out:
        raise UsageError(f"{path}: no subcommand recorded")
    return out


def _sidecar_argv(parser: argparse.ArgumentParser, values: dict[str, str]) -> list[str]:
    actions = {a.dest: a for a in parser._actions if a.option_strings}
    argv = []
    for key, value in values.items():
        action = actions.get(key)
        if action is None:
            raise UsageError(f"sidecar key {key!r} is not an option of this subcommand")
        if value == "":
            continue
        if isinstance(action, argparse.BooleanOptionalAction):
            positive = next(o for o in action.option_strings if not o.startswith("--no-"))
            negative = next(o for o in action.option_strings if o.startswith("--no-"))
            argv.append(positive if value.lower() == "true" else negative)
        else:
            argv += [action.option_strings[0], value]
    return argv


def _expand_config(argv: list[str], subparsers: dict[str, argparse.ArgumentParser]) -> list[str]:
    path = None
    rest = []
    i = 0
    while i < len(argv):
        if argv[i] == "--config":
            if i + 1 >= len(argv):
                raise UsageError("--config needs a file")
            path = argv[i + 1]
            i += 2
            continue
        if argv[i].startswith("--config="):
            path = argv[i].split("=", 1)[1]
        else:
            rest.append(argv[i])
        i += 1
    if path is None:
        return argv
    values = read_sidecar(path)
    command = values.pop("subcommand")
    if command not in subparsers:
        raise UsageError(f"{path}: unknown subcommand {command!r}")
    if rest and not rest[0].startswith("-"):
        if rest[0] != command:
            raise UsageError(f"{path} records subcommand {command!r}, not {rest[0]!r}")
        rest = rest[1:]
    return [command, *_sidecar_argv(subparsers[command], values), *rest]


# -- helpers ---------------------------------------------------------------

def _csv_list(text: Optional[str]) -> tuple[str, ...]:
    if not text:
        return ()
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _pair(text: str) -> tuple[float, float]:
    parts = _csv_list(text)
    if len(parts) != 2:
        raise UsageError(f"expected 'lo,hi', got {text!r}")
    return float(parts[0]), float(parts[1])


def _grid(text: str) -> tuple[tuple[int, int], ...]:
    out = []
    for item in _csv_list(text):
        rounds, _, depth = item.partition("x")
        if not depth:
            raise UsageError(f"cv grid entries look like ROUNDSxDEPTH, got {item!r}")
        out.append((int(rounds), int(depth)))
    return tuple(out)


def load_maps(path) -> dict:
    """``{map_id: (DepthMap, LabelMask or None)}`` from one depth file or a directory of them.

    A mask is picked up from ``<stem>_mask.png`` next to the depth file.
    """
    path = Path(path)
    if path.is_dir():
        files = sorted(p for p in path.iterdir()
                       if p.suffix.lower() in (".png", ".txt", ".csv") and not p.name.endswith(MASK_SUFFIX))
    elif path.exists():
        files = [path]
    else:
        raise FileNotFoundError(f"{path} does not exist")
    if not files:
        raise FileNotFoundError(f"no depth maps in {path}")
    out = {}
    for f in files:
        mask_path = f.with_name(f.stem + MASK_SUFFIX)
        mask = load_label_mask(mask_path) if mask_path.exists() else None
        out[f.stem] = (load_depth_map(f), mask)
    return out


def _feature_config(args) -> FeatureConfig:
    pi = PiConfig(resolution=args.pi_resolution, sigma=args.pi_sigma, weighted=args.pi_weighted,
                  birth_range=_pair(args.pi_birth_range), death_range=_pair(args.pi_death_range),
                  axes=args.pi_axes)
    return FeatureConfig(
        patch_size=args.patch_size, patch_step=args.patch_step, label_threshold=args.label_threshold,
        normalization=args.normalization, bounds=_pair(args.bounds) if args.bounds else None,
        bounds_from=_csv_list(args.bounds_from), input=args.input,
        clbp=ClbpConfig(args.clbp_radius, args.clbp_samples, args.clbp_encoding),
        direction=args.direction, finitize=args.finitize, drop_zero_length=not args.keep_zero_length,
        homology=args.homology, descriptor=args.descriptor, pi=pi, pi_max_persistence=args.pi_max_persistence,
    )


def _classifier_config(args) -> RUSBoostConfig:
    return RUSBoostConfig(n_rounds=args.n_rounds, max_depth=args.max_depth,
                          undersample_ratio=args.undersample_ratio, seed=args.seed,
                          max_retries=args.max_retries, undersample=args.undersample)


def _labeled(features: dict, ids: Sequence[str]) -> None:
    for mid in ids:
        if mid not in features:
            raise KeyError(f"no features for map {mid!r}")
        if np.any(features[mid].labels < 0):
            raise ValueError(f"map {mid!r} has unlabeled patches (no mask)")


def _pi_block(names: Sequence[str], values: np.ndarray, block: str) -> np.ndarray:
    idx = [i for i, n in enumerate(names) if n.startswith(f"{block}pi_")]
    side = math.isqrt(len(idx))
    if not idx or side * side != len(idx):
        raise ValueError(f"no square persistence-image block with prefix {block!r}")
    return np.asarray(values)[..., idx].reshape(*np.shape(values)[:-1], side, side)


# -- subcommands -----------------------------------------------------------

def cmd_generate(args) -> Path:
    template = SyntheticSpec(base_roughness=args.base_roughness, base_amplitude=args.base_amplitude,
                             groove_depth=args.groove_depth, groove_width=args.groove_width,
                             noise_amplitude=args.noise_amplitude, peck_amplitude=args.peck_amplitude)
    spec = BenchmarkSpec(n_maps=args.n_maps, size=args.size, target_fraction=args.fraction,
                         template=template, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for mid, depth, mask in benchmark_maps(spec):
        save_depth_map(depth, out / f"{mid}.txt", "text-matrix")
        save_label_mask(mask, out / f"{mid}{MASK_SUFFIX}")
        print(f"{mid}: {depth.height}x{depth.width}, class-1 fraction {mask.labels.mean():.4f}")
    return out / "generate.config"


def cmd_extract(args) -> Path:
    config = _feature_config(args)
    maps = load_maps(args.maps)
    out = Path(args.out)
    if args.dump_cells:
        cells = Path(args.dump_cells)
        cells.mkdir(parents=True, exist_ok=True)
        for mid, patches in prepare_patches(maps, config).items():
            for p in patches:
                build_filtration(p.values, config.direction).dump_csv(
                    cells / f"{mid}_{p.origin[0]}_{p.origin[1]}_cells.csv")
    diagrams = patch_diagrams(maps, config, args.threads)
    features = describe(diagrams, config)
    write_feature_csv(out, features.values())
    if not args.skip_diagrams:
        ddir = Path(args.diagrams) if args.diagrams else out.with_name(out.stem + "_diagrams")
        ddir.mkdir(parents=True, exist_ok=True)
        for mid, ds in diagrams.items():
            for (r, c), d in zip(ds.origins, ds.diagrams):
                d.to_csv(ddir / f"{mid}_{r}_{c}.csv")
    for mid, pf in features.items():
        print(f"{mid}: {len(pf)} patches, {pf.X.shape[1]} features")
    return Path(str(out) + ".config")


def cmd_train(args) -> Path:
    features = read_feature_csv(args.features)
    ids = _csv_list(args.train_maps) or tuple(features)
    _labeled(features, ids)
    X, y = evaluation._stack(features, ids)
    config = _classifier_config(args)
    report = [("n_rounds", "max_depth", "cv_dsc", "selected")]
    if args.cv:
        scores = evaluation.cv_scores(X, y, config, _grid(args.cv_grid), args.folds,
                                      np.random.default_rng(args.seed))
        best = max(range(len(scores)), key=lambda i: (scores[i][1], -i))
        config = scores[best][0]
        for i, (cfg, score) in enumerate(scores):
            report.append((cfg.n_rounds, cfg.max_depth, repr(score), int(i == best)))
    else:
        report.append((config.n_rounds, config.max_depth, "", 1))
    ensemble = train_rusboost(X, y, config, feature_names=list(features[ids[0]].names))
    out = Path(args.out)
    save_model(ensemble, out)
    with open(out.with_name(out.stem + "_report.csv"), "w", newline="") as fh:
        csv.writer(fh).writerows(report)
    train_dsc = evaluation.dsc(predict(ensemble, X)[1], y)
    print(f"trained {len(ensemble.trees)} trees (rounds={config.n_rounds}, depth={config.max_depth}); "
          f"training DSC {train_dsc:.4f}")
    return Path(str(out) + ".config")


def cmd_predict(args) -> Path:
    ensemble = load_model(args.model)
    features = read_feature_csv(args.features)
    ids = _csv_list(args.maps) or tuple(features)
    out = Path(args.out)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source_id", "row", "col", "truth", "score", "label"])
        for mid in ids:
            if mid not in features:
                raise KeyError(f"no features for map {mid!r}")
            pf = features[mid]
            scores, labels = predict(ensemble, pf.X)
            for (r, c), t, s, lab in zip(pf.origins, pf.labels, scores, labels):
                writer.writerow([mid, int(r), int(c), int(t), repr(float(s)), int(lab)])
    return Path(str(out) + ".config")


def cmd_evaluate(args) -> Path:
    features = read_feature_csv(args.features)
    eval_ids = _csv_list(args.eval_maps)
    if not eval_ids:
        raise UsageError("--eval-maps is required")
    _labeled(features, eval_ids)
    row = {"features": Path(args.features).name, "eval_maps": " ".join(eval_ids)}
    if args.model:
        ensemble = load_model(args.model)
        X, y = evaluation._stack(features, eval_ids)
        result = evaluation.RunResult.from_values([evaluation.dsc(predict(ensemble, X)[1], y)])
        row.update(model=Path(args.model).name, n_rounds=ensemble.config.n_rounds,
                   max_depth=ensemble.config.max_depth)
    else:
        train_ids = _csv_list(args.train_maps)
        if not train_ids:
            raise UsageError("--train-maps is required unless --model is given")
        _labeled(features, train_ids)
        plan = evaluation.ExperimentPlan(
            train_ids, eval_ids, args.class1_fraction, args.class2_fraction, args.repetitions,
            args.folds, args.seed, _grid(args.cv_grid) if args.cv else ())
        result = evaluation.run_experiment(plan, features, _classifier_config(args))
        row.update(train_maps=" ".join(train_ids), n_rounds=args.n_rounds, max_depth=args.max_depth,
                   cv=args.cv, seed=args.seed)
    out = Path(args.out)
    evaluation.write_results_csv(out, [(row, result)])
    print(evaluation.format_table([(row, result)]))
    return Path(str(out) + ".config")


def cmd_render(args) -> Path:
    from . import render

    out = Path(args.out)
    kind = args.kind
    if kind == "pd":
        render.render_diagram(PersistenceDiagram.from_csv(args.input), out, args.title)
    elif kind == "pi":
        diagram = PersistenceDiagram.from_csv(args.input)
        mp = args.pi_max_persistence
        if args.pi_weighted and mp is None:
            mp = float(diagram.lengths.max()) if len(diagram) and diagram.is_finite() else 1.0
        cfg = PiConfig(resolution=args.pi_resolution, sigma=args.pi_sigma, weighted=args.pi_weighted,
                       birth_range=_pair(args.pi_birth_range), death_range=_pair(args.pi_death_range),
                       max_persistence=mp or 1.0, axes=args.pi_axes)
        render.render_image(persistence_image(diagram, cfg), out, args.title)
    elif kind == "importance":
        ensemble = load_model(args.input)
        names = ensemble.feature_names or [f"pi_{i:04d}" for i in range(ensemble.n_features)]
        grid = _pi_block(names, ensemble.feature_importance, args.block)
        render.render_grid(grid, out, args.title or "Gini importance", xlabel="birth bin", ylabel="death bin",
                           cmap="magma")
    elif kind == "fisher":
        features = read_feature_csv(args.input)
        pfs = [pf for pf in features.values() if np.all(pf.labels >= 0)]
        if not pfs:
            raise ValueError("no labeled patches to score")
        X = np.vstack([pf.X for pf in pfs])
        y = np.concatenate([pf.labels for pf in pfs])
        grid = _pi_block(pfs[0].names, X, args.block)
        score = evaluation.fisher_map(grid.reshape(len(y), -1), y, grid.shape[1:])
        render.render_grid(score, out, args.title or "Fisher discriminant", xlabel="birth bin",
                           ylabel="death bin", cmap="magma")
    elif kind == "clbp":
        cfg = ClbpConfig(args.clbp_radius, args.clbp_samples, args.clbp_encoding)
        maps = clbp_maps(load_depth_map(args.input), cfg)
        codes = maps.s_map if args.clbp_code == "s" else maps.m_map
        render.render_code_map(codes, out, cfg.code_count, args.title)
    return Path(str(out) + ".config")


# -- parser ----------------------------------------------------------------

def _add_feature_options(p) -> None:
    p.add_argument("--patch-size", type=int, default=128)
    p.add_argument("--patch-step", type=int, default=16)
    p.add_argument("--label-threshold", type=float, default=0.5)
    p.add_argument("--normalization", choices=("none", "minmax", "global"), default="global")
    p.add_argument("--bounds", help="fixed global normalization range 'lo,hi'")
    p.add_argument("--bounds-from", help="comma-separated map ids whose range sets the global bounds")
    p.add_argument("--input", choices=("depth", "clbp_s", "clbp_m"), default="depth")
    p.add_argument("--direction", choices=("sublevel", "superlevel"), default="sublevel")
    p.add_argument("--finitize", choices=("cap_at_max", "drop_essential"), default="cap_at_max")
    p.add_argument("--keep-zero-length", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--homology", choices=("all", "h0", "h1", "per_dim"), default="all")
    p.add_argument("--descriptor", choices=("pi", "pd_agg", "both"), default="pi")
    _add_pi_options(p)
    p.add_argument("--pi-max-persistence", type=float,
                   help="weight-ramp normalizer; default: largest persistence over the bounds maps")
    _add_clbp_options(p)


def _add_pi_options(p) -> None:
    p.add_argument("--pi-resolution", type=int, default=16)
    p.add_argument("--pi-sigma", type=float, default=0.001)
    p.add_argument("--pi-weighted", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--pi-birth-range", default="0,1")
    p.add_argument("--pi-death-range", default="0,1")
    p.add_argument("--pi-axes", choices=("birth_death", "birth_persistence"), default="birth_death")


def _add_clbp_options(p) -> None:
    p.add_argument("--clbp-radius", type=int, default=3)
    p.add_argument("--clbp-samples", type=int, default=8)
    p.add_argument("--clbp-encoding", choices=("riu2", "ri"), default="riu2")


def _add_classifier_options(p) -> None:
    defaults = RUSBoostConfig()
    p.add_argument("--n-rounds", type=int, default=defaults.n_rounds)
    p.add_argument("--max-depth", type=int, default=defaults.max_depth)
    p.add_argument("--undersample-ratio", type=float, default=defaults.undersample_ratio)
    p.add_argument("--undersample", action=argparse.BooleanOptionalAction, default=defaults.undersample)
    p.add_argument("--max-retries", type=int, default=defaults.max_retries)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cv", action=argparse.BooleanOptionalAction, default=False,
                   help="choose rounds/depth by cross-validation over --cv-grid")
    p.add_argument("--cv-grid", default=",".join(f"{r}x{d}" for r, d in evaluation.DEFAULT_CV_GRID))
    p.add_argument("--folds", type=int, default=5)


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = _Parser(prog="surftopo", description="Topological texture features for depth-map patches.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    subs = {}

    p = subs["generate"] = sub.add_parser("generate", help="write a seeded synthetic benchmark")
    spec = {f.name: f.default for f in fields(SyntheticSpec)}
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n-maps", type=int, default=4)
    p.add_argument("--size", type=int, default=512)
    p.add_argument("--fraction", type=float, default=0.166, help="target class-1 pixel fraction")
    p.add_argument("--seed", type=int, default=0)
    for name in ("base_roughness", "base_amplitude", "groove_depth", "groove_width",
                 "noise_amplitude", "peck_amplitude"):
        p.add_argument("--" + name.replace("_", "-"), type=float, default=spec[name])
    p.set_defaults(func=cmd_generate)

    p = subs["extract"] = sub.add_parser("extract", help="patch features (+ diagrams) from depth maps")
    p.add_argument("--maps", required=True, help="depth-map file or directory")
    p.add_argument("--out", required=True, help="feature CSV")
    p.add_argument("--diagrams", help="diagram CSV directory (default: <out stem>_diagrams)")
    p.add_argument("--skip-diagrams", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--dump-cells", help="directory for per-patch filtration cell CSVs (debug)")
    p.add_argument("--threads", type=int, default=1)
    _add_feature_options(p)
    p.set_defaults(func=cmd_extract)

    p = subs["train"] = sub.add_parser("train", help="fit a RUSBoost model on a feature CSV")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True, help="model JSON")
    p.add_argument("--train-maps", help="comma-separated map ids (default: all)")
    _add_classifier_options(p)
    p.set_defaults(func=cmd_train)

    p = subs["predict"] = sub.add_parser("predict", help="per-patch labels from a model")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True, help="label CSV")
    p.add_argument("--maps", help="comma-separated map ids (default: all)")
    p.set_defaults(func=cmd_predict)

    p = subs["evaluate"] = sub.add_parser("evaluate", help="DSC of a model, or the repeated protocol")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True, help="results CSV")
    p.add_argument("--eval-maps", required=True)
    p.add_argument("--train-maps")
    p.add_argument("--model", help="score this model instead of running the repeated protocol")
    p.add_argument("--repetitions", type=int, default=10)
    p.add_argument("--class1-fraction", type=float, default=0.5)
    p.add_argument("--class2-fraction", type=float, default=0.3)
    _add_classifier_options(p)
    p.set_defaults(func=cmd_evaluate)

    p = subs["render"] = sub.add_parser("render", help="PNG of a diagram, image, score map or code map")
    p.add_argument("--kind", required=True, choices=("pd", "pi", "importance", "fisher", "clbp"))
    p.add_argument("--input", required=True,
                   help="diagram CSV (pd, pi), model JSON (importance), feature CSV (fisher), depth map (clbp)")
    p.add_argument("--out", required=True)
    p.add_argument("--title")
    p.add_argument("--block", default="", help="feature-name prefix of the PI block, e.g. h0_")
    _add_pi_options(p)
    p.add_argument("--pi-max-persistence", type=float)
    _add_clbp_options(p)
    p.add_argument("--clbp-code", choices=("s", "m"), default="s")
    p.set_defaults(func=cmd_render)
    return parser, subs


def _fail(command: str, kind: str, message: str, status: int) -> int:
    print(f"surftopo: error command={command} type={kind} message={json.dumps(message)}", file=sys.stderr)
    return status


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    command = next((a for a in argv if a in subs), "-")
    try:
        args = parser.parse_args(_expand_config(argv, subs))
    except UsageError as exc:
        return _fail(command, "usage", str(exc), 2)
    command = args.command
    try:
        sidecar = args.func(args)
        write_sidecar(sidecar, command, args)
    except UsageError as exc:
        return _fail(command, "usage", str(exc), 2)
    except (OSError, ValueError, KeyError) as exc:
        message = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
        return _fail(command, type(exc).__name__, str(message), 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
