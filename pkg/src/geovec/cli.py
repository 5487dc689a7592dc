"""Command-line surface tying the pipeline together.

Commands: prompt, embed, gp, forecast train|eval|zeroshot, adjacency,
sample-raster. A single JSON config file provides defaults; flags
override. All randomness flows from one master seed through keyed
sub-seeds. Exit codes: 0 success, 2 input or prompt errors, 3 provider
errors, 4 GP alignment errors, 5 forecast errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .dataio import (
    load_attribute_csv,
    load_nodes_csv,
    load_raster_ascii,
    load_timeseries_csv,
    chronological_split,
    sample_raster,
)
from .embedding import (
    MockProvider,
    RemoteProvider,
    RffProvider,
    build_geovec,
    instruction_only_source,
    load_store,
    osm_prompt_source,
    save_store,
)
from .errors import (
    DimMismatch,
    GeovecError,
    Misalignment,
    NodeMismatch,
    NonFiniteLoss,
    OverlapDetected,
    ProviderUnavailable,
    TooShort,
)
from .forecast import (
    ForecastConfig,
    evaluate_forecaster,
    load_checkpoint,
    save_checkpoint,
    train_forecaster,
    train_with_node_table,
    write_loss_history_csv,
    zero_shot_eval,
)
from .geo import Coordinate, build_adjacency
from .osm import FixtureSource, OsmClient
from .prompts import PromptVariant, build_prompt
from .predict import concat_representations, holdout_eval, kfold_cv
from .synth import derive_seed

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PROVIDER = 3
EXIT_GP = 4
EXIT_FORECAST = 5


@dataclass
class RunConfig:
    """One diffable record of a run; JSON file fields, overridden by flags."""

    seed: int = 0
    offline: bool = True
    nodes: str | None = None
    attributes: str | None = None
    timeseries: str | None = None
    cache_dir: str = ".geovec-cache"
    store: str | None = None
    fixtures: str | None = None
    provider: str = "mock"
    provider_dim: int = 64
    provider_seed: int | None = None
    provider_model: str | None = None
    provider_url: str | None = None
    lengthscale_deg: float = 10.0
    variant: str = "instruction-address-top10"
    radius_km: float = 100.0
    alpha: float = 1.0
    folds: int = 5
    train_frac: float = 0.8
    history: int = 12
    horizon: int = 12
    token_dim: int = 32
    adapter_dim: int = 16
    hidden: int = 64
    lr: float = 1e-3
    epochs: int = 50
    batch: int = 256
    leaky_slope: float = 0.01
    epsilon_revin: float = 1e-5
    preserve_width: bool = False
    figures: bool = True

    @classmethod
    def load(cls, path: str | Path | None) -> "RunConfig":
        config = cls()
        if path is None:
            return config
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise GeovecError(f"unknown config fields: {sorted(unknown)}")
        for key, value in doc.items():
            setattr(config, key, value)
        return config

    def apply_flags(self, args: argparse.Namespace) -> None:
        for f in fields(self):
            value = getattr(args, f.name, None)
            if value is not None:
                setattr(self, f.name, value)

    def require_paths(self, *names: str) -> None:
        for name in names:
            value = getattr(self, name)
            if value is None:
                raise GeovecError(f"config field {name!r} is required for this command")
            if not Path(value).exists():
                raise GeovecError(f"{name} path does not exist: {value}")

    def forecast_config(self) -> ForecastConfig:
        return ForecastConfig(
            history=self.history,
            horizon=self.horizon,
            token_dim=self.token_dim,
            adapter_dim=self.adapter_dim,
            hidden=self.hidden,
            lr=self.lr,
            epochs=self.epochs,
            batch=self.batch,
            seed=derive_seed(self.seed, "forecast"),
            leaky_slope=self.leaky_slope,
            epsilon_revin=self.epsilon_revin,
            preserve_width=self.preserve_width,
        )


def _provider(config: RunConfig):
    seed = config.provider_seed
    if seed is None:
        seed = derive_seed(config.seed, "provider")
    if config.provider == "mock":
        return MockProvider(dim=config.provider_dim, seed=seed)
    if config.provider == "rff":
        return RffProvider(
            dim=config.provider_dim, seed=seed, lengthscale_deg=config.lengthscale_deg
        )
    if config.provider == "remote":
        if not config.provider_url or not config.provider_model:
            raise GeovecError("remote provider needs provider_url and provider_model")
        return RemoteProvider(
            base_url=config.provider_url, model=config.provider_model, dim=config.provider_dim
        )
    raise GeovecError(f"unknown provider {config.provider!r}; pick mock, rff or remote")


def _osm_client(config: RunConfig) -> OsmClient:
    fixtures = None
    if config.fixtures:
        fixtures = FixtureSource.from_file(config.fixtures)
    return OsmClient(
        cache_dir=config.cache_dir,
        offline=config.offline,
        fixtures=fixtures,
    )


def _figure_path(out: str | Path, suffix: str = "") -> Path:
    out = Path(out)
    return out.with_name(out.stem + suffix + ".png")


# -- commands -----------------------------------------------------------------


def cmd_prompt(config: RunConfig, args: argparse.Namespace) -> int:
    variant = PromptVariant.from_label(config.variant)
    if args.node_id is not None:
        config.require_paths("nodes")
        nodes = load_nodes_csv(config.nodes)
        try:
            coord = nodes.coord_of(args.node_id)
        except KeyError:
            raise GeovecError(f"unknown node id {args.node_id!r}") from None
    elif args.lat is not None and args.lon is not None:
        coord = Coordinate(lon=args.lon, lat=args.lat)
    else:
        raise GeovecError("prompt needs --node-id or both --lat and --lon")
    if variant.kind == "instruction-only":
        prompt = build_prompt(variant, coord)
    else:
        client = _osm_client(config)
        geocode = client.reverse_geocode(coord)
        places = None
        if variant.k is not None:
            places = client.nearby_places(coord, radius_km=config.radius_km, k=variant.k)
        prompt = build_prompt(variant, coord, geocode=geocode, places=places)
    sys.stdout.write(prompt.text)
    return EXIT_OK


def cmd_embed(config: RunConfig, args: argparse.Namespace) -> int:
    config.require_paths("nodes")
    if config.store is None:
        raise GeovecError("config field 'store' is required for embed")
    nodes = load_nodes_csv(config.nodes)
    provider = _provider(config)
    variant = PromptVariant.from_label(config.variant)
    if variant.kind == "instruction-only" or config.provider == "rff":
        source = instruction_only_source(variant)
    else:
        source = osm_prompt_source(_osm_client(config), variant, radius_km=config.radius_km)
    rep = build_geovec(nodes, provider, variant, source, workers=args.workers)
    save_store(rep, config.store)
    print(f"wrote {config.store}: N={rep.n_nodes} M={rep.dim} provider={rep.provider_id}")
    return EXIT_OK


def cmd_gp(config: RunConfig, args: argparse.Namespace) -> int:
    config.require_paths("store", "attributes")
    rep = load_store(config.store)
    if args.concat:
        rep = concat_representations([rep, load_store(args.concat)])
    attr = load_attribute_csv(config.attributes)
    out = Path(args.out)
    if args.mode == "cv":
        cv = kfold_cv(
            rep, attr, folds=config.folds, alpha=config.alpha,
            seed=derive_seed(config.seed, "gp-folds"),
        )
        doc = {"mode": "cv", "attribute": attr.name, "provider_id": rep.provider_id}
        doc.update(cv.to_dict())
        out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        print(
            f"{attr.name}: {config.folds}-fold CV mean MAE={cv.mean_mae:.4f} "
            f"RMSE={cv.mean_rmse:.4f} R2={cv.mean_r2:.4f}"
        )
        if config.figures:
            from .report import render_cv_figure

            render_cv_figure(cv, _figure_path(out))
    else:
        rng_ids = list(rep.node_ids)
        order = np.random.default_rng(derive_seed(config.seed, "gp-holdout")).permutation(len(rng_ids))
        cut = int(len(rng_ids) * config.train_frac)
        train_ids = [rng_ids[i] for i in order[:cut]]
        test_ids = [rng_ids[i] for i in order[cut:]]
        mae, rmse, r2 = holdout_eval(rep, attr, (train_ids, test_ids), alpha=config.alpha)
        doc = {
            "mode": "holdout",
            "attribute": attr.name,
            "provider_id": rep.provider_id,
            "alpha": config.alpha,
            "train_n": len(train_ids),
            "test_n": len(test_ids),
            "mae": mae,
            "rmse": rmse,
            "r2": r2,
        }
        out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        print(f"{attr.name}: holdout MAE={mae:.4f} RMSE={rmse:.4f} R2={r2:.4f}")
        if config.figures:
            from .report import render_holdout_figure

            render_holdout_figure(mae, rmse, r2, _figure_path(out))
    return EXIT_OK


def _write_metrics_csv(path: Path, mse: float, mae: float, imp: float | None = None) -> None:
    if imp is None:
        path.write_text(f"mse,mae\n{mse!r},{mae!r}\n", encoding="utf-8")
    else:
        path.write_text(f"mse,mae,imp\n{mse!r},{mae!r},{imp!r}\n", encoding="utf-8")


def _read_metrics_csv(path: str | Path) -> tuple[float, float]:
    lines = Path(path).read_text(encoding="utf-8").strip().splitlines()
    header = lines[0].split(",")
    row = lines[1].split(",")
    values = dict(zip(header, row))
    return float(values["mse"]), float(values["mae"])


def _split_for(ds, which: str, config: ForecastConfig):
    train, val, test = chronological_split(ds, min_length=config.history + config.horizon)
    return {"train": train, "val": val, "test": test}[which]


def cmd_forecast_train(config: RunConfig, args: argparse.Namespace) -> int:
    config.require_paths("timeseries")
    ds = load_timeseries_csv(config.timeseries)
    fc = config.forecast_config()
    if config.store and args.node_table:
        raise GeovecError("pick either a store or --node-table, not both")
    if config.store:
        config.require_paths("store")
        rep = load_store(config.store)
        result = train_forecaster(ds, rep, fc)
    elif args.node_table:
        result = train_with_node_table(ds, fc)
    else:
        result = train_forecaster(ds, None, fc)
    ckpt = Path(args.checkpoint)
    save_checkpoint(result, ckpt)
    loss_csv = Path(args.loss_csv) if args.loss_csv else ckpt.with_name(ckpt.stem + "_loss.csv")
    write_loss_history_csv(result.loss_history, loss_csv)
    best = min(v for _, _, v in result.loss_history)
    print(
        f"trained {result.mode} model: best val MSE {best:.6f} at epoch "
        f"{result.best_epoch}; checkpoint {ckpt}"
    )
    if config.figures:
        from .report import render_loss_figure

        render_loss_figure(result.loss_history, _figure_path(loss_csv))
    return EXIT_OK


def cmd_forecast_eval(config: RunConfig, args: argparse.Namespace) -> int:
    config.require_paths("timeseries")
    result = load_checkpoint(args.checkpoint)
    ds = load_timeseries_csv(config.timeseries)
    rep = None
    if result.mode == "geovec":
        config.require_paths("store")
        rep = load_store(config.store)
    split_ds = _split_for(ds, args.split, result.config)
    mse, mae = evaluate_forecaster(result, split_ds, rep)
    out = Path(args.out)
    imp = None
    if args.compare:
        other_mse, _ = _read_metrics_csv(args.compare)
        imp = 100.0 * (other_mse - mse) / other_mse
        print(f"{args.split} MSE={mse:.6f} MAE={mae:.6f} IMP={imp:.2f}%")
        if config.figures:
            from .report import render_compare_figure

            render_compare_figure(["baseline", result.mode], [other_mse, mse], _figure_path(out), imp)
    else:
        print(f"{args.split} MSE={mse:.6f} MAE={mae:.6f}")
    _write_metrics_csv(out, mse, mae, imp)
    return EXIT_OK


def cmd_forecast_zeroshot(config: RunConfig, args: argparse.Namespace) -> int:
    result = load_checkpoint(args.checkpoint)
    target_path = args.target_timeseries or config.timeseries
    if target_path is None or not Path(target_path).exists():
        raise GeovecError(f"target timeseries path does not exist: {target_path}")
    target_ds = load_timeseries_csv(target_path)
    target_rep = None
    if result.mode == "geovec":
        store = args.target_store or config.store
        if store is None or not Path(store).exists():
            raise GeovecError(f"target store path does not exist: {store}")
        target_rep = load_store(store)
    split_ds = _split_for(target_ds, args.split, result.config)
    mse, mae = zero_shot_eval(result, split_ds, target_rep)
    out = Path(args.out)
    imp = None
    if args.compare:
        other_mse, _ = _read_metrics_csv(args.compare)
        imp = 100.0 * (other_mse - mse) / other_mse
        print(f"zero-shot MSE={mse:.6f} MAE={mae:.6f} IMP={imp:.2f}%")
        if config.figures:
            from .report import render_compare_figure

            render_compare_figure(["baseline", result.mode], [other_mse, mse], _figure_path(out), imp)
    else:
        print(f"zero-shot MSE={mse:.6f} MAE={mae:.6f}")
    _write_metrics_csv(out, mse, mae, imp)
    return EXIT_OK


def cmd_adjacency(config: RunConfig, args: argparse.Namespace) -> int:
    config.require_paths("nodes")
    nodes = load_nodes_csv(config.nodes)
    adj = build_adjacency(nodes, min_dist_km=args.min_dist_km)
    lines = ["id," + ",".join(nodes.ids)]
    for nid, row in zip(nodes.ids, adj.weights):
        lines.append(nid + "," + ",".join(format(w, ".17g") for w in row))
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {args.out}: {adj.n} x {adj.n} inverse-distance weights")
    return EXIT_OK


def cmd_sample_raster(config: RunConfig, args: argparse.Namespace) -> int:
    grid = load_raster_ascii(args.raster)
    if args.nodes or config.nodes:
        nodes_path = args.nodes or config.nodes
        if not Path(nodes_path).exists():
            raise GeovecError(f"nodes path does not exist: {nodes_path}")
        if not args.out:
            raise GeovecError("sampling a node table needs --out for the labels CSV")
        nodes = load_nodes_csv(nodes_path)
        lines = ["id,value"]
        for nid, coord in zip(nodes.ids, nodes.coords):
            lines.append(f"{nid},{sample_raster(grid, coord)!r}")
        Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"wrote {args.out}: {len(nodes)} sampled labels")
    elif args.lat is not None and args.lon is not None:
        value = sample_raster(grid, Coordinate(lon=args.lon, lat=args.lat))
        print(repr(value))
    else:
        raise GeovecError("sample-raster needs --nodes or both --lat and --lon")
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file with RunConfig fields")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--offline", action="store_const", const=True, default=None)
    parser.add_argument("--live", dest="offline", action="store_const", const=False)
    parser.add_argument("--nodes")
    parser.add_argument("--attributes")
    parser.add_argument("--timeseries")
    parser.add_argument("--cache-dir", dest="cache_dir")
    parser.add_argument("--store")
    parser.add_argument("--fixtures")
    parser.add_argument("--provider", choices=["mock", "rff", "remote"])
    parser.add_argument("--provider-dim", dest="provider_dim", type=int)
    parser.add_argument("--provider-seed", dest="provider_seed", type=int)
    parser.add_argument("--provider-model", dest="provider_model")
    parser.add_argument("--provider-url", dest="provider_url")
    parser.add_argument("--lengthscale-deg", dest="lengthscale_deg", type=float)
    parser.add_argument("--variant")
    parser.add_argument("--radius-km", dest="radius_km", type=float)
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--folds", type=int)
    parser.add_argument("--train-frac", dest="train_frac", type=float)
    parser.add_argument("--history", type=int)
    parser.add_argument("--horizon", type=int)
    parser.add_argument("--token-dim", dest="token_dim", type=int)
    parser.add_argument("--adapter-dim", dest="adapter_dim", type=int)
    parser.add_argument("--hidden", type=int)
    parser.add_argument("--lr", type=float)
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--batch", type=int)
    parser.add_argument("--no-figures", dest="figures", action="store_const", const=False, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geovec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prompt", help="print the rendered prompt for a node or coordinate")
    _add_config_flags(p)
    p.add_argument("--node-id", dest="node_id")
    p.add_argument("--lat", type=float)
    p.add_argument("--lon", type=float)
    p.set_defaults(func=cmd_prompt, error_exit=EXIT_INPUT)

    p = sub.add_parser("embed", help="build the embedding store for a node table")
    _add_config_flags(p)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_embed, error_exit=EXIT_PROVIDER)

    p = sub.add_parser("gp", help="geographic prediction: CV or holdout report")
    _add_config_flags(p)
    p.add_argument("--mode", choices=["cv", "holdout"], default="cv")
    p.add_argument("--concat", help="second store to concatenate before fitting")
    p.add_argument("--out", required=True, help="report JSON path")
    p.set_defaults(func=cmd_gp, error_exit=EXIT_GP)

    fc = sub.add_parser("forecast", help="train and evaluate the reference forecaster")
    fsub = fc.add_subparsers(dest="subcommand", required=True)

    p = fsub.add_parser("train")
    _add_config_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--loss-csv", dest="loss_csv")
    p.add_argument("--node-table", dest="node_table", action="store_true")
    p.set_defaults(func=cmd_forecast_train, error_exit=EXIT_FORECAST)

    p = fsub.add_parser("eval")
    _add_config_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", choices=["train", "val", "test"], default="test")
    p.add_argument("--out", required=True, help="metrics CSV path")
    p.add_argument("--compare", help="baseline metrics CSV; adds the IMP column")
    p.set_defaults(func=cmd_forecast_eval, error_exit=EXIT_FORECAST)

    p = fsub.add_parser("zeroshot")
    _add_config_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--target-timeseries", dest="target_timeseries")
    p.add_argument("--target-store", dest="target_store")
    p.add_argument("--split", choices=["train", "val", "test"], default="test")
    p.add_argument("--out", required=True, help="metrics CSV path")
    p.add_argument("--compare", help="baseline metrics CSV; adds the IMP column")
    p.set_defaults(func=cmd_forecast_zeroshot, error_exit=EXIT_FORECAST)

    p = sub.add_parser("adjacency", help="emit the inverse-distance adjacency as CSV")
    _add_config_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--min-dist-km", dest="min_dist_km", type=float, default=0.1)
    p.set_defaults(func=cmd_adjacency, error_exit=EXIT_INPUT)

    p = sub.add_parser("sample-raster", help="sample an ASCII raster at coordinates")
    _add_config_flags(p)
    p.add_argument("--raster", required=True)
    p.add_argument("--lat", type=float)
    p.add_argument("--lon", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample_raster, error_exit=EXIT_INPUT)

    return parser


def _exit_code_for(e: GeovecError, command_exit: int) -> int:
    if isinstance(e, ProviderUnavailable):
        return EXIT_PROVIDER
    if isinstance(e, DimMismatch) and command_exit == EXIT_PROVIDER:
        return EXIT_PROVIDER
    if command_exit == EXIT_FORECAST and isinstance(e, (TooShort, Misalignment, NonFiniteLoss)):
        return EXIT_FORECAST
    if command_exit == EXIT_GP and isinstance(e, (Misalignment, NodeMismatch, OverlapDetected)):
        return EXIT_GP
    return EXIT_INPUT


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig.load(args.config)
        config.apply_flags(args)
        return args.func(config, args)
    except GeovecError as e:
        print(f"error: {e}", file=sys.stderr)
        return _exit_code_for(e, args.error_exit)
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
