"""Command-line entry point.

One executable with subcommands covering the full workflow: metric
comparison, gradient verification, training, trade-off selection, prior
sampling, super-resolution evaluation, and feature extraction. Every
subcommand that takes a seed is byte-reproducible, numeric output is printed
with 6 significant digits, and exit codes follow one contract: 0 success,
1 runtime failure, 2 usage or config error.
"""

import argparse
import csv
import os
import sys

import numpy as np

from .autoencoder import default_bottleneck
from .config import load_config, require_blocks
from .datasets import edge_images, toy_images
from .elvae import ElVaeConfig, elvae_loss, reconstruct_mode, sample_prior, train_elvae
from .exceptions import ConfigError, SimlearnError, UnsupportedImageFormat
from .image_io import load_image, save_image
from .image_ops import rescale_range, rgb_to_luma
from .losses import Loss, estimate_loss_scale, mae, mse, psnr
from .metrics import (
    MetricParams,
    fd_gradient,
    fd_relative_error,
    max_feasible_scales,
    ms_ssim,
    ms_ssim_grad,
    ssim,
    ssim_grad,
)
from .model_selection import select_tradeoff
from .nn import (
    EarlyStop,
    LayerSpec,
    OptimizerConfig,
    dense,
    encode,
    forward,
    init_network,
    load_checkpoint,
    save_checkpoint,
    tanh,
    train_autoencoder,
)
from .nn.gradcheck import _perturbed, network_fd_error, ste_backward_error
from .nn.layers import conv2d, flatten, relu, reshape, upsample2
from .rng import substream
from .sr import bicubic_method, emit_report, evaluate_dir, model_method, report_to_markdown


def _fmt(value) -> str:
    if value is None:
        return "n/a"
    return f"{float(value):.6g}"


def _load_gray(path) -> np.ndarray:
    """Loads an image as a [0, 1] grayscale array (RGB goes through luma)."""
    img = load_image(path)
    if img.ndim == 3:
        return rgb_to_luma(img)
    return img


# ---------------------------------------------------------------- compare

def cmd_compare(args) -> int:
    ref = _load_gray(args.reference)
    test = _load_gray(args.test)
    if ref.shape != test.shape:
        raise ConfigError(f"image sizes differ: {ref.shape} vs {test.shape}")
    params = MetricParams(window_size=args.window)
    feasible = min(args.scales, max_feasible_scales(ref.shape, args.window))
    lines = [
        ("psnr_db", _fmt(psnr(ref, test, dynamic_range=1.0))),
        ("ssim", _fmt(ssim(ref, test, params))),
        (
            "ms_ssim",
            _fmt(ms_ssim(ref, test, params.with_scales(feasible)))
            if feasible >= 1
            else "n/a",
        ),
        ("mse", _fmt(mse(ref, test)[0])),
        ("mae", _fmt(mae(ref, test)[0])),
    ]
    for name, value in lines:
        print(f"{name:<8} {value}")
    return 0


# ------------------------------------------------------------- grad-check

def _random_pair(seed: int, index: int, size: int):
    gen = substream(seed, "pairs", f"{index}")
    x = gen.uniform(0.05, 0.95, size=(size, size))
    y = np.clip(x + gen.normal(scale=0.08, size=x.shape), 0.0, 1.0)
    return x, y


def _metric_check(name, seed, pairs, size, params, corrupt):
    grad_fn = ssim_grad if name == "ssim" else ms_ssim_grad
    worst = 0.0
    for i in range(pairs):
        x, y = _random_pair(seed, i, size)
        _, analytic = grad_fn(x, y, params)
        if corrupt:
            analytic = analytic.copy()
            analytic[0, 0] += 1e-3
        if name == "ssim":
            fd = fd_gradient("ssim", x, y, params)
            worst = max(worst, fd_relative_error(analytic, fd))
        else:
            gen = substream(seed, "fd-pixels", f"{i}")
            rows = gen.integers(0, size, size=100)
            cols = gen.integers(0, size, size=100)
            pixels = list(zip(rows.tolist(), cols.tolist()))
            fd = fd_gradient("ms-ssim", x, y, params, eps=1e-5, pixels=pixels)
            picked = np.array([analytic[r, c] for r, c in pixels])
            worst = max(worst, fd_relative_error(picked, fd))
    return worst


def _elvae_fd_check(seed: int, corrupt: bool) -> float:
    enc = init_network([dense(9, 6), tanh(), dense(6, 4)], seed=seed)
    dec = init_network([dense(2, 6), tanh(), dense(6, 9), tanh()], seed=seed + 1)
    cfg = ElVaeConfig(c=50.0, latent_dim=2, mc_samples=2, loss=Loss("mse"))
    x = substream(seed, "elvae-x").uniform(-0.8, 0.8, size=(3, 3))
    _, (enc_grads, dec_grads) = elvae_loss(x, enc, dec, cfg, seed=seed)

    def value(e, d):
        return elvae_loss(x, e, d, cfg, seed=seed)[0]

    analytic, reference = [], []
    eps = 1e-6
    for net, grads, rebuild in (
        (enc, enc_grads, lambda e: value(e, dec)),
        (dec, dec_grads, lambda d: value(enc, d)),
    ):
        for layer_index, layer in enumerate(net.params):
            for name in sorted(layer):
                arr = layer[name]
                for index in np.ndindex(arr.shape):
                    hi = rebuild(_perturbed(net, layer_index, name, index, eps))
                    lo = rebuild(_perturbed(net, layer_index, name, index, -eps))
                    reference.append((hi - lo) / (2.0 * eps))
                    analytic.append(grads[layer_index][name][index])
    analytic = np.array(analytic)
    if corrupt:
        analytic[0] += 1e-3
    return fd_relative_error(analytic, np.array(reference))


def _grad_checks(seed: int, block: dict):
    """Ordered (name, threshold, runner) triples for every check."""
    pairs = block.get("pairs", 2)
    ssim_size = block.get("ssim_size", 16)
    ms_size = block.get("ms_size", 48)
    ms_scales = block.get("ms_scales", 3)
    layer_nets = [
        ("dense", [dense(12, 7), tanh(), dense(7, 12)], (3, 12)),
        ("conv2d-same", [conv2d(1, 2, kernel=3), relu(), conv2d(2, 1, kernel=3)], (2, 1, 8, 8)),
        ("conv2d-valid", [conv2d(1, 2, kernel=3, padding="valid")], (2, 1, 8, 8)),
        ("conv2d-stride2", [conv2d(1, 2, kernel=3, stride=2)], (2, 1, 8, 8)),
        ("upsample2", [upsample2(), conv2d(1, 1, kernel=3)], (2, 1, 4, 4)),
        (
            "flatten-reshape",
            [flatten(), dense(16, 8), tanh(), dense(8, 16), reshape(1, 4, 4)],
            (2, 1, 4, 4),
        ),
    ]
    checks = [
        (
            "ssim",
            1e-5,
            lambda corrupt: _metric_check(
                "ssim", seed, pairs, ssim_size, MetricParams(), corrupt
            ),
        ),
        (
            "ms-ssim",
            1e-4,
            lambda corrupt: _metric_check(
                "ms-ssim", seed, pairs, ms_size, MetricParams(scales=ms_scales), corrupt
            ),
        ),
    ]
    for name, specs, shape in layer_nets:
        checks.append(
            (
                name,
                1e-6,
                lambda corrupt, s=specs, sh=shape: network_fd_error(
                    s, sh, seed=seed, corrupt=corrupt
                ),
            )
        )
    checks.append(
        ("binarize-ste", 0.0, lambda corrupt: ste_backward_error(seed, corrupt=corrupt))
    )
    checks.append(("elvae", 1e-5, lambda corrupt: _elvae_fd_check(seed, corrupt)))
    return checks


def cmd_grad_check(args) -> int:
    config = load_config(args.config) if args.config else {}
    block = config.get("grad_check", {})
    seed = args.seed if args.seed is not None else config.get("seed", 0)
    corrupt_name = block.get("corrupt")
    checks = _grad_checks(seed, block)
    names = [name for name, _, _ in checks]
    if corrupt_name is not None and corrupt_name not in names:
        raise ConfigError(
            f"grad_check.corrupt names unknown check {corrupt_name!r}; "
            f"choose from {names}"
        )
    failures = 0
    for name, threshold, runner in checks:
        error = runner(name == corrupt_name)
        ok = error <= threshold
        failures += 0 if ok else 1
        print(f"{name:<16} {error:>12.6g}  {'pass' if ok else 'FAIL'}")
    if failures:
        print(f"{failures} check(s) failed")
        return 1
    print("all checks passed")
    return 0


# ------------------------------------------------------------------ train

def _split_dataset(images, fraction, seed):
    n = len(images)
    n_valid = max(1, int(round(fraction * n)))
    if n_valid >= n:
        raise ConfigError(
            f"valid_fraction {fraction} leaves no training data for {n} images"
        )
    order = substream(seed, "split").permutation(n)
    valid = [images[i] for i in order[:n_valid]]
    train = [images[i] for i in order[n_valid:]]
    return train, valid


def _list_image_files(directory):
    directory = os.fspath(directory)
    if not os.path.isdir(directory):
        raise ConfigError(f"dataset path {directory!r} is not a directory")
    return sorted(
        os.path.join(directory, entry)
        for entry in os.listdir(directory)
        if os.path.isfile(os.path.join(directory, entry))
    )


def _dataset_from_config(block: dict, seed: int):
    """Returns (train, valid, drange_name) per the dataset block."""
    kind = block["kind"]
    fraction = block.get("valid_fraction", 0.2)
    if kind == "toy":
        images = list(toy_images(block["n"], block.get("size", 16), block.get("seed", 0)))
        drange = "signed"
    elif kind == "edges":
        images = list(edge_images(block["n"], block.get("size", 32), block.get("seed", 0)))
        drange = "unit"
    else:
        drange = block.get("drange", "signed")
        files = _list_image_files(block["path"])
        if not files:
            raise ConfigError(f"dataset directory {block['path']!r} is empty")
        images = [_load_gray(path) for path in files]
        if drange == "signed":
            images = [rescale_range(img, "unit", "signed") for img in images]
    train, valid = _split_dataset(images, fraction, seed)
    return train, valid, drange


def _loss_from_config(block: dict, drange: str, image_shape, train, seed: int) -> Loss:
    name = block["name"]
    params_doc = dict(block.get("params", {}))
    loss_params = None
    if name in ("ssim", "ms-ssim"):
        params_doc.setdefault("dynamic_range", 2.0 if drange == "signed" else 1.0)
        feasible = max_feasible_scales(image_shape, params_doc.get("window_size", 11))
        if name == "ms-ssim":
            params_doc.setdefault("scales", min(5, feasible))
        if params_doc.get("scales", 1) > feasible:
            raise ConfigError(
                f"{params_doc['scales']} scales are infeasible for {image_shape} "
                f"images (max {feasible})"
            )
        for key in ("betas", "gammas"):
            if key in params_doc:
                params_doc[key] = tuple(params_doc[key])
        loss_params = MetricParams(**params_doc)
    elif params_doc:
        raise ConfigError(f"loss {name!r} takes no metric params")
    loss = Loss(name, params=loss_params)
    if block.get("normalize_scale", False):
        scale = estimate_loss_scale(
            loss, train, n_pairs=block.get("scale_pairs", 10000), seed=seed
        )
        loss = loss.with_scale(scale)
    return loss


def _reconstructions(net, images):
    first = net.specs[0].kind
    stack = np.stack(images)
    if first in ("conv2d", "upsample2"):
        batch = stack[:, None, :, :]
    else:
        batch = stack.reshape(len(images), -1)
    out, _ = forward(net, batch, mode="eval")
    return [out[i].reshape(images[0].shape) for i in range(len(images))]


def _write_grid(path, originals, recons, drange):
    grid = np.vstack([np.hstack(originals), np.hstack(recons)])
    if drange == "signed":
        grid = rescale_range(np.clip(grid, -1.0, 1.0), "signed", "unit")
    save_image(grid, path)


def _write_train_report_csv(path, report):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "train_loss", "valid_metric"])
        writer.writerow([0, "", _fmt(report.valid_metric[0])])
        for epoch, train_value in enumerate(report.train_loss, start=1):
            writer.writerow([epoch, _fmt(train_value), _fmt(report.valid_metric[epoch])])


def cmd_train(args) -> int:
    config = load_config(args.config)
    require_blocks(config, "model", "loss", "dataset")
    seed = args.seed if args.seed is not None else config.get("seed", 0)
    out_dir = args.out_dir or config.get("out_dir")
    if not out_dir:
        raise ConfigError("an output directory is required (--out-dir or out_dir)")
    model = config["model"]
    if model == "autoencoder":
        require_blocks(config, "architecture")
    else:
        require_blocks(config, "encoder", "decoder")

    train, valid, drange = _dataset_from_config(config["dataset"], seed)
    image_shape = train[0].shape
    loss = _loss_from_config(config["loss"], drange, image_shape, train, seed)
    opt = OptimizerConfig(**config.get("optimizer", {}))
    stop = EarlyStop(**config.get("early_stop", {}))
    init = config.get("init", "fan-in")
    gaussian_std = config.get("gaussian_std", 0.001)

    os.makedirs(out_dir, exist_ok=True)
    subset = valid[: min(8, len(valid))]

    def grid_path(epoch):
        return os.path.join(out_dir, f"recon_epoch{epoch:03d}.png")

    if model == "autoencoder":
        arch = [LayerSpec.from_dict(doc) for doc in config["architecture"]]

        def on_epoch(epoch, net):
            _write_grid(grid_path(epoch), subset, _reconstructions(net, subset), drange)

        net, report = train_autoencoder(
            arch, loss, train, valid, opt=opt, stop=stop, seed=seed,
            init=init, gaussian_std=gaussian_std, on_epoch=on_epoch,
        )
        try:
            bottleneck = default_bottleneck(arch)
        except ValueError:
            bottleneck = None
        meta = {
            "report": report.to_dict(),
            "loss": loss.identifier,
            "loss_scale": loss.scale,
            "image_shape": list(image_shape),
            "drange": drange,
            "bottleneck": bottleneck,
        }
        save_checkpoint(
            os.path.join(out_dir, "checkpoint.json"), "autoencoder", {"net": net}, meta
        )
    else:
        encoder_arch = [LayerSpec.from_dict(doc) for doc in config["encoder"]]
        decoder_arch = [LayerSpec.from_dict(doc) for doc in config["decoder"]]
        block = config.get("elvae", {})
        cfg = ElVaeConfig(
            c=block.get("c", 1000.0),
            latent_dim=block.get("latent_dim", 8),
            mc_samples=block.get("mc_samples", 1),
            loss=loss,
        )
        span = (-1.0, 1.0) if drange == "signed" else (0.0, 1.0)

        def on_epoch(epoch, enc, dec):
            recons = [reconstruct_mode(enc, dec, img, drange=span) for img in subset]
            _write_grid(grid_path(epoch), subset, recons, drange)

        encoder, decoder, report = train_elvae(
            encoder_arch, decoder_arch, cfg, train, valid, opt=opt, stop=stop,
            seed=seed, init=init, gaussian_std=gaussian_std, on_epoch=on_epoch,
        )
        meta = {
            "report": report.to_dict(),
            "loss": loss.identifier,
            "loss_scale": loss.scale,
            "image_shape": list(image_shape),
            "drange": drange,
            "c": cfg.c,
            "latent_dim": cfg.latent_dim,
            "mc_samples": cfg.mc_samples,
        }
        save_checkpoint(
            os.path.join(out_dir, "checkpoint.json"), "elvae",
            {"encoder": encoder, "decoder": decoder}, meta,
        )

    _write_train_report_csv(os.path.join(out_dir, "report.csv"), report)
    print(
        f"stopped after epoch {report.stop_epoch} (best epoch {report.best_epoch}); "
        f"valid {_fmt(report.valid_metric[0])} -> {_fmt(min(report.valid_metric))}"
    )
    print(f"wrote checkpoint.json, report.csv, and grids to {out_dir}")
    return 0


# --------------------------------------------------------------- select-c

def _samples_from_source(source: dict, label: str, seed: int, n_samples: int):
    kind = source["kind"]
    if kind == "dir":
        files = _list_image_files(source["path"])
        if not files:
            raise ConfigError(f"sample directory {source['path']!r} is empty")
        images = [_load_gray(path) for path in files]
        shapes = {img.shape for img in images}
        if len(shapes) > 1:
            raise ConfigError(f"images in {source['path']!r} have mixed shapes {shapes}")
        return np.stack([img.ravel() for img in images])
    if kind == "csv":
        return _read_feature_csv(source["path"])
    if kind == "checkpoint":
        ckpt = load_checkpoint(source["path"])
        if ckpt.kind != "elvae":
            raise ConfigError(
                f"sample source {source['path']!r} has kind {ckpt.kind!r}; "
                "prior sampling needs an elvae checkpoint"
            )
        n = source.get("n_samples", n_samples)
        shape = tuple(ckpt.meta["image_shape"])
        span = (-1.0, 1.0) if ckpt.meta.get("drange", "signed") == "signed" else (0.0, 1.0)
        draw_seed = int(substream(seed, "select-c", label).integers(0, 2**31 - 1))
        images = sample_prior(ckpt.networks["decoder"], n, draw_seed, shape, drange=span)
        return np.stack([img.ravel() for img in images])
    gen = substream(source.get("seed", seed), "select-c", label, "gaussian")
    return gen.normal(size=(source["n"], source["dim"])) + source.get("shift", 0.0)


def _read_feature_csv(path) -> np.ndarray:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError(f"feature CSV {path!r} is empty")

    def numeric(cell):
        try:
            float(cell)
            return True
        except ValueError:
            return False

    if not all(numeric(cell) for cell in rows[0]):
        rows = rows[1:]  # header row
    if rows and rows[0] and not numeric(rows[0][0]):
        rows = [row[1:] for row in rows]  # leading name column
    if not rows:
        raise ConfigError(f"feature CSV {path!r} has no data rows")
    try:
        return np.array([[float(cell) for cell in row] for row in rows])
    except ValueError as exc:
        raise ConfigError(f"feature CSV {path!r} has non-numeric cells: {exc}") from exc


def _candidate_keys(raw_keys):
    try:
        converted = {key: float(key) for key in raw_keys}
    except ValueError:
        return {key: key for key in raw_keys}
    return converted


def cmd_select_c(args) -> int:
    config = load_config(args.config)
    require_blocks(config, "select_c")
    block = config["select_c"]
    seed = args.seed if args.seed is not None else config.get("seed", 0)
    n_samples = block.get("n_samples", 200)
    ref = _samples_from_source(block["ref"], "ref", seed, n_samples)
    key_map = _candidate_keys(block["candidates"].keys())
    candidates = {
        key_map[raw]: _samples_from_source(source, raw, seed, n_samples)
        for raw, source in block["candidates"].items()
    }
    result = select_tradeoff(
        ref, candidates, bandwidth=block.get("bandwidth"), seed=seed
    )

    def label(key):
        return f"{key:g}" if isinstance(key, float) else str(key)

    print(f"bandwidth {_fmt(result.bandwidth)}")
    for key in sorted(result.mmd2):
        print(f"mmd2 C={label(key)}: {_fmt(result.mmd2[key])}")
    for (a, b), value in sorted(result.pairwise.items()):
        print(f"relative C={label(a)} vs C={label(b)}: {_fmt(value)}")
    print(f"chosen C = {label(result.chosen)}")
    return 0


# ----------------------------------------------------------------- sample

def cmd_sample(args) -> int:
    if args.n < 0:
        raise ConfigError("--n must be nonnegative")
    ckpt = load_checkpoint(args.checkpoint)
    if ckpt.kind != "elvae":
        raise ConfigError(
            f"checkpoint kind {ckpt.kind!r} has no prior to sample; expected 'elvae'"
        )
    shape = tuple(ckpt.meta["image_shape"])
    drange = ckpt.meta.get("drange", "signed")
    span = (-1.0, 1.0) if drange == "signed" else (0.0, 1.0)
    images = sample_prior(ckpt.networks["decoder"], args.n, args.seed, shape, drange=span)
    os.makedirs(args.out_dir, exist_ok=True)
    for i, img in enumerate(images):
        if drange == "signed":
            img = rescale_range(img, "signed", "unit")
        save_image(img, os.path.join(args.out_dir, f"sample{i:03d}.png"))
    print(f"wrote {len(images)} sample(s) to {args.out_dir}")
    return 0


# ---------------------------------------------------------------- sr-eval

def _sr_methods(block: dict, seed: int):
    methods = []
    for doc in block["methods"]:
        name = doc["name"]
        if "checkpoint" in doc and "architecture" in doc:
            raise ConfigError(
                f"method {name!r} gives both a checkpoint and an architecture"
            )
        if "checkpoint" in doc:
            ckpt = load_checkpoint(doc["checkpoint"])
            if ckpt.kind != "sr":
                raise ConfigError(
                    f"method {name!r} checkpoint has kind {ckpt.kind!r}; expected 'sr'"
                )
            (net,) = ckpt.networks.values()
            methods.append((name, model_method(net)))
        elif "architecture" in doc:
            specs = [LayerSpec.from_dict(layer) for layer in doc["architecture"]]
            net = init_network(
                specs,
                seed=doc.get("seed", seed),
                init=doc.get("init", "fan-in"),
                gaussian_std=doc.get("gaussian_std", 0.001),
            )
            methods.append((name, model_method(net)))
        elif name == "bicubic":
            methods.append((name, bicubic_method))
        else:
            raise ConfigError(
                f"method {name!r} needs a checkpoint or architecture "
                "(only 'bicubic' runs without one)"
            )
    return methods


def cmd_sr_eval(args) -> int:
    config = load_config(args.config)
    require_blocks(config, "sr")
    block = config["sr"]
    seed = args.seed if args.seed is not None else config.get("seed", 0)
    out_dir = args.out_dir or config.get("out_dir")
    if not out_dir:
        raise ConfigError("an output directory is required (--out-dir or out_dir)")
    if not os.path.isdir(block["hr_dir"]):
        raise ConfigError(f"hr_dir {block['hr_dir']!r} is not a directory")
    methods = _sr_methods(block, seed)
    report = evaluate_dir(
        block["hr_dir"], methods, scale=block["scale"], border=block.get("border")
    )
    os.makedirs(out_dir, exist_ok=True)
    emit_report(report, "csv", os.path.join(out_dir, "sr_report.csv"))
    emit_report(report, "markdown", os.path.join(out_dir, "sr_report.md"))
    print(report_to_markdown(report), end="")
    print(f"wrote sr_report.csv and sr_report.md to {out_dir}")
    return 0


# ----------------------------------------------------------------- encode

def cmd_encode(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    if ckpt.kind != "autoencoder":
        raise ConfigError(
            f"checkpoint kind {ckpt.kind!r} cannot encode; expected 'autoencoder'"
        )
    net = ckpt.networks["net"]
    bottleneck = ckpt.meta.get("bottleneck")
    if bottleneck is None:
        raise ConfigError("checkpoint does not record a bottleneck layer")
    shape = tuple(ckpt.meta["image_shape"])
    drange = ckpt.meta.get("drange", "signed")
    files = _list_image_files(args.dataset)
    images, names = [], []
    for path in files:
        img = _load_gray(path)
        if img.shape != shape:
            raise ConfigError(
                f"{path}: image shape {img.shape} does not match model {shape}"
            )
        if drange == "signed":
            img = rescale_range(img, "unit", "signed")
        images.append(img)
        names.append(os.path.splitext(os.path.basename(path))[0])
    if images:
        features = encode(net, images, bottleneck)
    else:
        probe = encode(net, [np.zeros(shape)], bottleneck)
        features = probe[:0]
    with open(args.out_csv, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["name"] + [f"z{i}" for i in range(features.shape[1])])
        for name, row in zip(names, features):
            writer.writerow([name] + [repr(float(v)) for v in row])
    print(f"wrote {len(names)} row(s) to {args.out_csv}")
    return 0


# ------------------------------------------------------------------ main

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simlearn",
        description="Perceptual-loss learning toolbox: metrics, training, "
        "selection, and super-resolution evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compare", help="print metrics between two image files")
    p.add_argument("reference")
    p.add_argument("test")
    p.add_argument("--window", type=int, default=11, help="SSIM window size")
    p.add_argument("--scales", type=int, default=5,
                   help="max MS-SSIM scales (auto-reduced to what fits)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("grad-check", help="verify analytic gradients against "
                       "finite differences")
    p.add_argument("--config", help="JSON config with an optional grad_check block")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_grad_check)

    p = sub.add_parser("train", help="train an autoencoder or EL-VAE from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("select-c", help="rank candidate sample sets against a "
                       "reference by squared MMD")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_select_c)

    p = sub.add_parser("sample", help="decode prior draws from an EL-VAE checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("sr-eval", help="evaluate super-resolution methods on a "
                       "directory of images")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_sr_eval)

    p = sub.add_parser("encode", help="write bottleneck features of a dataset to CSV")
    p.add_argument("checkpoint")
    p.add_argument("dataset")
    p.add_argument("out_csv")
    p.set_defaults(func=cmd_encode)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, NotADirectoryError,
            UnsupportedImageFormat) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SimlearnError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
