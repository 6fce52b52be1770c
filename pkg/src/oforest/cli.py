"""Command-line entry point.

Subcommands: fit, encode, decode, roundtrip, ablate.  A run is described by
a JSON config file (see README for the schema); any config key can be
overridden by a flag of the same name.  Every command is deterministic
given config + seed: timing values go to stdout or dedicated CSV columns,
never into model/code files.

Exit codes: 0 success, 2 config error, 3 data error, 4 model/data mismatch,
5 partial decode failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import codec, dataio, forest, metrics
from .errors import (ChannelMismatch, ConfigInvalid, CorruptHeader,
                     DimensionMismatch, EmptyData, InfeasibleCode,
                     IterationLimit, NotAnImage, OForestError, ParseError,
                     RaggedRows, SchemaError, SizesExceedData,
                     UnknownLeaf, UnsupportedFormat, VersionMismatch)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_MISMATCH = 4
EXIT_PARTIAL = 5

_DATA_ERRORS = (ParseError, RaggedRows, UnsupportedFormat, CorruptHeader,
                NotAnImage, SizesExceedData, EmptyData, FileNotFoundError,
                IsADirectoryError, NotADirectoryError)
_MISMATCH_ERRORS = (DimensionMismatch, ChannelMismatch, UnknownLeaf,
                    SchemaError, VersionMismatch)

CHANNEL_TAGS = {1: ["gray"], 3: ["R", "G", "B"]}


@dataclass
class RunConfig:
    tree_kind: str = "hhcart"
    transform: str = "eig"
    n_estimators: int = 100
    max_depth: int = 3
    max_samples: float = 1.0
    max_features: float = 1.0
    seed: int = 0
    input_kind: str = "csv"          # csv | image_dir
    csv_header: bool = False
    standardize: bool = False
    box_mode: str = "none"           # none | pixels
    test_size: float | None = None
    n_train: int | None = None
    n_test: int | None = None
    workers: int = 1

    def validate(self):
        if self.input_kind not in ("csv", "image_dir"):
            raise ConfigInvalid(f"input_kind must be csv or image_dir, got {self.input_kind!r}")
        if self.box_mode not in ("none", "pixels"):
            raise ConfigInvalid(f"box_mode must be none or pixels, got {self.box_mode!r}")
        if self.box_mode == "pixels" and self.input_kind != "image_dir":
            raise ConfigInvalid("box_mode=pixels requires image input")
        if self.standardize and self.input_kind == "image_dir":
            raise ConfigInvalid("standardize applies to tabular input only")
        if self.test_size is not None and not 0.0 < self.test_size < 1.0:
            raise ConfigInvalid(f"test_size must be in (0, 1), got {self.test_size}")
        if self.workers < 1:
            raise ConfigInvalid(f"workers must be >= 1, got {self.workers}")
        self.forest_config().validate()

    def forest_config(self) -> forest.ForestConfig:
        return forest.ForestConfig(
            tree_kind=self.tree_kind, transform=self.transform,
            n_estimators=self.n_estimators, max_depth=self.max_depth,
            max_samples=self.max_samples, max_features=self.max_features,
            seed=self.seed)


_CONFIG_FIELDS = {f.name: f for f in fields(RunConfig)}


def load_run_config(path, overrides: dict) -> RunConfig:
    values = {}
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigInvalid(f"config file not found: {path}") from None
        except json.JSONDecodeError as e:
            raise ConfigInvalid(f"{path}: invalid JSON ({e})") from None
        if not isinstance(doc, dict):
            raise ConfigInvalid(f"{path}: config must be a JSON object")
        for key, val in doc.items():
            if key not in _CONFIG_FIELDS:
                raise ConfigInvalid(f"{path}: unknown config key {key!r}")
            values[key] = val
    for key, val in overrides.items():
        if val is not None:
            values[key] = val
    try:
        cfg = RunConfig(**values)
    except TypeError as e:
        raise ConfigInvalid(str(e)) from None
    cfg.validate()
    return cfg


# --- input handling --------------------------------------------------------


def load_input(cfg: RunConfig, path) -> dataio.Dataset:
    if cfg.input_kind == "csv":
        return dataio.read_csv(path, has_header=cfg.csv_header)
    root = Path(path)
    if not root.is_dir():
        raise NotADirectoryError(f"image_dir input needs a directory: {path}")
    files = sorted(p for p in root.iterdir() if p.suffix.lower() in (".pgm", ".ppm"))
    if not files:
        raise EmptyData(f"no .pgm/.ppm files in {path}")
    parts = [dataio.read_image(f) for f in files]
    shape = parts[0].image_shape
    for f, d in zip(files, parts):
        if d.image_shape != shape:
            raise DimensionMismatch(f"{f}: shape {d.image_shape}, expected {shape}")
    return dataio.Dataset(x=np.vstack([d.x for d in parts]), image_shape=shape)


def resolve_split(cfg: RunConfig, n: int) -> dataio.SplitSpec | None:
    if cfg.test_size is None and cfg.n_train is None and cfg.n_test is None:
        return None
    n_test = cfg.n_test
    if n_test is None and cfg.test_size is not None:
        n_test = max(1, int(np.ceil(cfg.test_size * n - 1e-9)))
    n_train = cfg.n_train
    if n_train is None:
        n_train = n - (n_test or 0)
    if n_test is None:
        n_test = n - n_train
    return dataio.SplitSpec(n_train=n_train, n_test=n_test, seed=cfg.seed)


def split_data(cfg: RunConfig, data: dataio.Dataset):
    """(train, test); without a split spec both are the full data."""
    spec = resolve_split(cfg, data.n)
    if spec is None:
        return data, data
    return dataio.train_test_split(data, spec)


def channel_paths(path, tags: list[str]) -> list[Path]:
    p = Path(path)
    if len(tags) == 1:
        return [p]
    return [p.with_name(f"{p.stem}_{t}{p.suffix}") for t in tags]


def resolve_model_paths(path) -> list[Path]:
    p = Path(path)
    if p.exists():
        return [p]
    rgb = channel_paths(path, CHANNEL_TAGS[3])
    if all(q.exists() for q in rgb):
        return rgb
    raise FileNotFoundError(f"no model file at {path} (or {rgb[0].name}..{rgb[2].name})")


def load_models(path) -> list[forest.ForestModel]:
    return [dataio.load_model(p) for p in resolve_model_paths(path)]


# --- fit ---------------------------------------------------------------------


def fit_models(cfg: RunConfig, train: dataio.Dataset) -> tuple[list[forest.ForestModel], float]:
    """Fit one model (tabular/grayscale) or three (RGB); returns models and
    the total fit wall time."""
    fc = cfg.forest_config()
    models = []
    with metrics.stopwatch("fit") as sw:
        if cfg.input_kind == "csv":
            std = dataio.Standardizer.from_data(train.x) if cfg.standardize else None
            x = std.transform(train.x) if std is not None else train.x
            models.append(forest.fit(x, fc, workers=cfg.workers, standardizer=std))
        else:
            h, w, c = train.image_shape
            hw = h * w
            for ci, tag in enumerate(CHANNEL_TAGS[c]):
                x = train.x[:, ci * hw:(ci + 1) * hw]
                models.append(forest.fit(x, replace(fc), workers=cfg.workers,
                                         channel_tag=tag, image_shape=(h, w)))
    return models, sw.seconds


def cmd_fit(args) -> int:
    cfg = load_run_config(args.config, _overrides(args))
    data = load_input(cfg, args.input)
    train, _ = split_data(cfg, data)
    models, seconds = fit_models(cfg, train)
    tags = [m.channel_tag or "gray" for m in models]
    for model, path in zip(models, channel_paths(args.output, tags)):
        dataio.save_model(model, path)
    print(f"fit_seconds={seconds} n_train={train.n} n_estimators={cfg.n_estimators}")
    return EXIT_OK


# --- encode ------------------------------------------------------------------


def _encode_tabular(model: forest.ForestModel, x: np.ndarray) -> np.ndarray:
    if model.standardizer is not None:
        x = model.standardizer.transform(x)
    return np.vstack([codec.encode(model, row).leaves for row in x])


def cmd_encode(args) -> int:
    cfg = load_run_config(args.config, _overrides(args))
    models = load_models(args.model)
    if len(models) == 1 and models[0].image_shape is None:
        data = dataio.read_csv(args.input, has_header=cfg.csv_header)
        dataio.save_codes(_encode_tabular(models[0], data.x), args.output)
    else:
        h, w = models[0].image_shape
        c = len(models)
        data = load_input(replace(cfg, input_kind="image_dir"), args.input)
        if data.image_shape != (h, w, c):
            raise DimensionMismatch(f"images are {data.image_shape}, model expects {(h, w, c)}")
        per_channel = [[] for _ in range(c)]
        for row in data.x:
            codes = codec.encode_image(models, dataio.image_from_row(row, data.image_shape))
            for ci in range(c):
                per_channel[ci].append(codes[ci].leaves)
        tags = [m.channel_tag for m in models]
        for ci, path in enumerate(channel_paths(args.output, tags)):
            dataio.save_codes(np.vstack(per_channel[ci]), path)
    return EXIT_OK


# --- decode ------------------------------------------------------------------


def _decode_one(models, code_rows, box_pair):
    """Decode one sample (all channels); returns (values, seconds)."""
    with metrics.stopwatch("decode") as sw:
        if len(models) == 1 and models[0].image_shape is None:
            out = codec.decode(models[0], codec.LeafCode(code_rows[0]),
                               box=None if box_pair is None else codec.BoxSpec(*box_pair))
        else:
            h, w = models[0].image_shape
            codes = [codec.LeafCode(r) for r in code_rows]
            out = codec.decode_image(models, codes, (h, w))
    return out, sw.seconds


def _decode_batch(models, code_mats, workers: int):
    """Decode all samples; returns list of (result | exception, seconds)."""
    items = [[mat[i] for mat in code_mats] for i in range(code_mats[0].shape[0])]
    box_pair = None
    if models[0].image_shape is not None:
        box_pair = codec.PIXEL_BOX.pair
    packed = [(models, rows, box_pair) for rows in items]
    if workers <= 1 or len(items) == 1:
        return [_decode_worker(p) for p in packed]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_decode_worker, packed))


def _decode_worker(packed):
    models, rows, box_pair = packed
    try:
        return _decode_one(models, rows, box_pair)
    except (InfeasibleCode, IterationLimit) as e:
        return e, 0.0


def cmd_decode(args) -> int:
    cfg = load_run_config(args.config, _overrides(args))
    models = load_models(args.model)
    tags = [m.channel_tag for m in models]
    if len(models) > 1:
        code_paths = channel_paths(args.codes, tags)
    else:
        code_paths = [Path(args.codes)]
    code_mats = [dataio.load_codes(p) for p in code_paths]
    n = code_mats[0].shape[0]
    for mat, model in zip(code_mats, models):
        if mat.shape[0] != n:
            raise DimensionMismatch("code files disagree on sample count")
        if mat.shape[1] != model.n_estimators:
            raise DimensionMismatch(
                f"codes have {mat.shape[1]} columns, model has {model.n_estimators} trees")

    results = _decode_batch(models, code_mats, cfg.workers)
    failures = [i for i, (r, _) in enumerate(results) if isinstance(r, Exception)]
    for i in failures:
        print(f"sample {i}: {results[i][0]}", file=sys.stderr)

    is_image = models[0].image_shape is not None
    if is_image:
        out_dir = Path(args.output)
        out_dir.mkdir(parents=True, exist_ok=True)
        ext = ".ppm" if len(models) == 3 else ".pgm"
        for i, (r, _) in enumerate(results):
            if not isinstance(r, Exception):
                dataio.write_image(out_dir / f"sample_{i:05d}{ext}", r)
    else:
        good = [r for r, _ in results if not isinstance(r, Exception)]
        dataio.save_csv(np.vstack(good) if good else np.zeros((0, models[0].p)), args.output)
    print(f"decode_seconds={sum(s for _, s in results)}")
    return EXIT_PARTIAL if failures else EXIT_OK


# --- roundtrip ---------------------------------------------------------------


def _metric_rows(models, cfg: RunConfig, test: dataio.Dataset, want_ssim: bool, workers: int):
    """Encode+decode every test sample; per-sample metric rows plus failures."""
    is_image = cfg.input_kind == "image_dir"
    if is_image:
        h, w, c = test.image_shape
        code_mats = [[] for _ in range(c)]
        for row in test.x:
            codes = codec.encode_image(models, dataio.image_from_row(row, test.image_shape))
            for ci in range(c):
                code_mats[ci].append(codes[ci].leaves)
        code_mats = [np.vstack(m) for m in code_mats]
    else:
        code_mats = [_encode_tabular(models[0], test.x)]
    results = _decode_batch(models, code_mats, workers)
    rows = []
    failures = []
    for i, (r, secs) in enumerate(results):
        if isinstance(r, Exception):
            failures.append((i, r))
            continue
        if is_image:
            original = dataio.image_from_row(test.x[i], test.image_shape)
            row = [i, metrics.mse(dataio.row_from_image(r), test.x[i])]
            if want_ssim:
                row.append(metrics.ssim(r.astype(float), original))
        else:
            row = [i, metrics.mse(r, test.x[i])]
        row.append(secs)
        rows.append(row)
    return rows, failures


def _write_report(path, rows, want_ssim: bool):
    header = ["sample_index", "mse"] + (["ssim"] if want_ssim else []) + ["decode_seconds"]
    with open(path, "w", newline="") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join([str(row[0])] + [repr(float(v)) for v in row[1:]]) + "\n")
        if rows:
            means = [repr(float(np.mean([row[k] for row in rows])))
                     for k in range(1, len(header))]
            f.write(",".join(["mean"] + means) + "\n")


def cmd_roundtrip(args) -> int:
    cfg = load_run_config(args.config, _overrides(args))
    want = [m.strip() for m in args.metrics.split(",") if m.strip()]
    for m in want:
        if m not in ("mse", "ssim"):
            raise ConfigInvalid(f"unknown metric {m!r}")
    want_ssim = "ssim" in want
    if want_ssim and cfg.input_kind != "image_dir":
        raise ConfigInvalid("ssim metric requires image input")
    data = load_input(cfg, args.input)
    train, test = split_data(cfg, data)
    if args.model is not None:
        models = load_models(args.model)
    else:
        models, _ = fit_models(cfg, train)
    rows, failures = _metric_rows(models, cfg, test, want_ssim, cfg.workers)
    for i, exc in failures:
        print(f"sample {i}: {exc}", file=sys.stderr)
    _write_report(args.output, rows, want_ssim)
    return EXIT_PARTIAL if failures else EXIT_OK


# --- ablate ------------------------------------------------------------------


ABLATE_PARAMS = ("n_estimators", "max_depth", "max_features", "max_samples", "n_train")


def _parse_values(param: str, text: str) -> list:
    kind = int if param in ("n_estimators", "max_depth", "n_train") else float
    try:
        return [kind(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigInvalid(f"bad value list for {param}: {text!r}") from None


def cmd_ablate(args) -> int:
    if args.param not in ABLATE_PARAMS:
        raise ConfigInvalid(f"param must be one of {ABLATE_PARAMS}, got {args.param!r}")
    if args.runs < 1:
        raise ConfigInvalid(f"runs must be >= 1, got {args.runs}")
    base = load_run_config(args.config, _overrides(args))
    values = _parse_values(args.param, args.values)
    if not values:
        raise ConfigInvalid("empty value list")
    data = load_input(base, args.input)
    is_image = base.input_kind == "image_dir"
    header = ["param", "value", "run", "seed", "mse_mean"]
    if is_image:
        header.append("ssim_mean")
    header += ["fit_seconds", "decode_seconds"]
    lines = [",".join(header)]
    for value in values:
        for run in range(args.runs):
            cfg = replace(base, seed=base.seed + run)
            if args.param == "n_train":
                cfg = replace(cfg, n_train=value)
            else:
                cfg = replace(cfg, **{args.param: value})
            cfg.validate()
            train, test = split_data(cfg, data)
            models, fit_seconds = fit_models(cfg, train)
            rows, failures = _metric_rows(models, cfg, test, is_image, cfg.workers)
            for i, exc in failures:
                print(f"value {value} run {run} sample {i}: {exc}", file=sys.stderr)
            if not rows:
                continue
            mse_mean = float(np.mean([r[1] for r in rows]))
            decode_seconds = float(sum(r[-1] for r in rows))
            cells = [args.param, repr(value) if isinstance(value, float) else str(value),
                     str(run), str(cfg.seed), repr(mse_mean)]
            if is_image:
                cells.append(repr(float(np.mean([r[2] for r in rows]))))
            cells += [repr(fit_seconds), repr(decode_seconds)]
            lines.append(",".join(cells))
    Path(args.output).write_text("\n".join(lines) + "\n")
    return EXIT_OK


# --- argument parsing ----------------------------------------------------------


def _add_config_flags(sp):
    sp.add_argument("--config", default=None)
    sp.add_argument("--tree_kind", default=None)
    sp.add_argument("--transform", default=None)
    sp.add_argument("--n_estimators", type=int, default=None)
    sp.add_argument("--max_depth", type=int, default=None)
    sp.add_argument("--max_samples", type=float, default=None)
    sp.add_argument("--max_features", type=float, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--input_kind", default=None)
    sp.add_argument("--csv_header", action=argparse.BooleanOptionalAction, default=None)
    sp.add_argument("--standardize", action=argparse.BooleanOptionalAction, default=None)
    sp.add_argument("--box_mode", default=None)
    sp.add_argument("--test_size", type=float, default=None)
    sp.add_argument("--n_train", type=int, default=None)
    sp.add_argument("--n_test", type=int, default=None)
    sp.add_argument("--workers", type=int, default=None)


def _overrides(args) -> dict:
    return {name: getattr(args, name) for name in _CONFIG_FIELDS if hasattr(args, name)}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="oforest",
                                 description="Oblique-forest autoencoder: fit, encode, decode, evaluate.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit model file(s) from a dataset")
    _add_config_flags(p)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("encode", help="write leaf-code CSV for a dataset")
    _add_config_flags(p)
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="reconstruct samples from leaf codes")
    _add_config_flags(p)
    p.add_argument("--model", required=True)
    p.add_argument("--codes", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("roundtrip", help="fit (optional), encode+decode test samples, report metrics")
    _add_config_flags(p)
    p.add_argument("--input", required=True)
    p.add_argument("--model", default=None)
    p.add_argument("--output", required=True)
    p.add_argument("--metrics", default="mse")
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("ablate", help="sweep one parameter, one CSV row per (value, run)")
    _add_config_flags(p)
    p.add_argument("--input", required=True)
    p.add_argument("--param", required=True)
    p.add_argument("--values", required=True)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_ablate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigInvalid as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except _DATA_ERRORS as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except _MISMATCH_ERRORS as e:
        print(f"model/data mismatch: {e}", file=sys.stderr)
        return EXIT_MISMATCH
    except OForestError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
