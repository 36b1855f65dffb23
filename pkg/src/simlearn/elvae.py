"""Variational autoencoder trained on an expected reconstruction loss.

The objective for one image is

    C * (1/S) * sum_s delta(x, decode(z_s)) / scale  +  KL(q(z|x) || N(0, I))

where z_s are reparameterized draws from the Gaussian posterior produced by
the encoder (mean and log-variance heads), delta is any loss from the losses
module, and scale is its normalization divisor. Batches average the
per-image objective. All sampling flows through named substreams, so the
objective is a deterministic function of parameters once the seed is fixed,
which is what makes finite-difference checks of the full gradient possible.
"""

import time
from dataclasses import dataclass

import numpy as np

from .base import ParamsMixin, check_fitted
from .exceptions import DivergenceError, NonFiniteActivation
from .losses import Loss, estimate_loss_scale
from .nn import (
    EarlyStop,
    Network,
    OptimizerConfig,
    TrainReport,
    backward,
    forward,
    init_network,
    init_optimizer_state,
    optimizer_step,
)
from .nn.training import _as_image_list, _batch_arrays, _outputs_as_images
from .rng import substream


@dataclass(frozen=True)
class ElVaeConfig:
    """Trade-off constant, latent size, Monte-Carlo sample count, and loss."""

    c: float = 1000.0
    latent_dim: int = 8
    mc_samples: int = 1
    loss: Loss = Loss("mse")

    def __post_init__(self):
        if self.c < 0 or not np.isfinite(self.c):
            raise ValueError(f"c must be finite and >= 0, got {self.c}")
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be >= 1")


def kl_standard_normal(mu, log_var):
    """KL(N(mu, diag(exp(log_var))) || N(0, I)) summed over all entries.

    Returns ``(value, grad_mu, grad_log_var)`` with the exact closed-form
    gradients.
    """
    mu = np.asarray(mu, dtype=np.float64)
    log_var = np.asarray(log_var, dtype=np.float64)
    if mu.shape != log_var.shape:
        raise ValueError(f"mu shape {mu.shape} != log_var shape {log_var.shape}")
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(log_var))):
        raise ValueError("posterior parameters must be finite")
    var = np.exp(log_var)
    value = 0.5 * float((mu * mu + var - 1.0 - log_var).sum())
    return value, mu.copy(), 0.5 * (var - 1.0)


def reparameterize(mu, log_var, eps):
    """z = mu + exp(log_var / 2) * eps, elementwise."""
    mu = np.asarray(mu, dtype=np.float64)
    log_var = np.asarray(log_var, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if not mu.shape == log_var.shape == eps.shape:
        raise ValueError("mu, log_var, and eps must share one shape")
    return mu + np.exp(0.5 * log_var) * eps


def _split_heads(enc_out, latent_dim):
    if enc_out.ndim != 2 or enc_out.shape[1] != 2 * latent_dim:
        raise ValueError(
            f"encoder must emit (batch, {2 * latent_dim}) for mean and "
            f"log-variance heads, got {enc_out.shape}"
        )
    return enc_out[:, :latent_dim], enc_out[:, latent_dim:]


def _add_grads(total, extra):
    if total is None:
        return extra
    return [
        {name: total[i][name] + extra[i][name] for name in total[i]}
        for i in range(len(total))
    ]


def _batch_objective(
    xs, encoder, decoder, cfg, eps, image_shape, with_grads=True
):
    """Mean per-image objective over a batch; optionally all gradients.

    ``eps`` has shape (mc_samples, batch, latent_dim). Returns
    ``(value, encoder_grads, decoder_grads)``; the gradient lists are None
    when ``with_grads`` is false.
    """
    n = len(xs)
    enc_out, enc_tape = forward(encoder, _batch_arrays(xs, encoder.specs[0].kind))
    mu, log_var = _split_heads(enc_out, cfg.latent_dim)
    kl_value, kl_gmu, kl_glv = kl_standard_normal(mu, log_var)
    if eps.shape != (cfg.mc_samples, n, cfg.latent_dim):
        raise ValueError(
            f"eps shape {eps.shape} != {(cfg.mc_samples, n, cfg.latent_dim)}"
        )

    recon_total = 0.0
    coeff = cfg.c / (cfg.mc_samples * cfg.loss.scale * n)
    grad_mu = np.zeros_like(mu)
    grad_lv = np.zeros_like(log_var)
    dec_grads = None
    for s in range(cfg.mc_samples):
        z = reparameterize(mu, log_var, eps[s])
        dec_out, dec_tape = forward(decoder, z)
        ys = _outputs_as_images(dec_out, image_shape)
        if not with_grads:
            recon_total += sum(
                cfg.loss.pair_value(x, y) for x, y in zip(xs, ys)
            )
            continue
        gout = np.empty_like(dec_out)
        for i in range(n):
            delta, g = cfg.loss.pair(xs[i], ys[i])
            recon_total += delta
            gout[i] = (coeff * g).reshape(dec_out.shape[1:])
        sample_grads, gz = backward(decoder, dec_tape, gout)
        dec_grads = _add_grads(dec_grads, sample_grads)
        gz = gz.reshape(n, cfg.latent_dim)
        grad_mu += gz
        grad_lv += gz * (z - mu) / 2.0

    value = coeff * recon_total + kl_value / n
    if not with_grads:
        return value, None, None
    enc_gout = np.concatenate(
        [grad_mu + kl_gmu / n, grad_lv + kl_glv / n], axis=1
    )
    enc_grads, _ = backward(encoder, enc_tape, enc_gout)
    return value, enc_grads, dec_grads


def elvae_loss(x, encoder, decoder, cfg: ElVaeConfig, seed: int = 0):
    """Objective and all parameter gradients for a single image.

    The Monte-Carlo draws come from a substream of ``seed``, so repeated
    calls with the same arguments are bit-identical.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"x must be a 2-D image, got shape {x.shape}")
    eps = substream(seed, "eps").normal(size=(cfg.mc_samples, 1, cfg.latent_dim))
    value, enc_grads, dec_grads = _batch_objective(
        [x], encoder, decoder, cfg, eps, x.shape
    )
    return value, (enc_grads, dec_grads)


def train_elvae(
    encoder_arch,
    decoder_arch,
    cfg: ElVaeConfig,
    train,
    valid,
    opt: OptimizerConfig = OptimizerConfig(kind="adam", lr=1e-3),
    stop: EarlyStop = EarlyStop(),
    seed: int = 0,
    init: str = "fan-in",
    gaussian_std: float = 0.001,
    on_epoch=None,
):
    """Mini-batch training of the expected-loss objective.

    Validation uses one epsilon draw set fixed for the whole run, so the
    objective is comparable across epochs; the best-validation snapshot of
    both networks is returned along with the TrainReport.
    ``on_epoch(epoch, encoder, decoder)`` is called at the untrained
    baseline (epoch 0) and after each epoch's validation pass.
    """
    start = time.monotonic()
    train = _as_image_list(train, "train")
    valid = _as_image_list(valid, "valid")
    if train[0].shape != valid[0].shape:
        raise ValueError("train and valid images must share one shape")
    image_shape = train[0].shape

    enc_seed = int(substream(seed, "encoder").integers(0, 2**31 - 1))
    dec_seed = int(substream(seed, "decoder").integers(0, 2**31 - 1))
    encoder = init_network(encoder_arch, enc_seed, init=init, gaussian_std=gaussian_std)
    decoder = init_network(decoder_arch, dec_seed, init=init, gaussian_std=gaussian_std)
    enc_state = init_optimizer_state(encoder, opt)
    dec_state = init_optimizer_state(decoder, opt)

    eps_valid = substream(seed, "valid-eps").normal(
        size=(cfg.mc_samples, len(valid), cfg.latent_dim)
    )

    def valid_objective(enc, dec):
        value, _, _ = _batch_objective(
            valid, enc, dec, cfg, eps_valid, image_shape, with_grads=False
        )
        return value

    report = TrainReport()
    best_value = valid_objective(encoder, decoder)
    report.valid_metric.append(best_value)
    best = (encoder.params, decoder.params)
    bad_epochs = 0
    if on_epoch is not None:
        on_epoch(0, encoder, decoder)

    for epoch in range(1, stop.max_epochs + 1):
        order = substream(seed, "data", f"epoch{epoch}").permutation(len(train))
        epoch_total = 0.0
        n_batches = 0
        for step, lo in enumerate(range(0, len(order), opt.batch_size)):
            batch = [train[i] for i in order[lo : lo + opt.batch_size]]
            eps = substream(seed, "eps", f"epoch{epoch}", f"step{step}").normal(
                size=(cfg.mc_samples, len(batch), cfg.latent_dim)
            )
            try:
                value, enc_grads, dec_grads = _batch_objective(
                    batch, encoder, decoder, cfg, eps, image_shape
                )
            except NonFiniteActivation as exc:
                raise DivergenceError(epoch, str(exc)) from exc
            if not np.isfinite(value):
                raise DivergenceError(epoch)
            epoch_total += value
            n_batches += 1
            encoder, enc_state = optimizer_step(encoder, enc_grads, enc_state, opt)
            decoder, dec_state = optimizer_step(decoder, dec_grads, dec_state, opt)
        report.train_loss.append(epoch_total / n_batches)

        try:
            metric = valid_objective(encoder, decoder)
        except NonFiniteActivation as exc:
            raise DivergenceError(epoch, str(exc)) from exc
        if not np.isfinite(metric):
            raise DivergenceError(
                epoch, f"validation objective became non-finite at epoch {epoch}"
            )
        report.valid_metric.append(metric)
        report.stop_epoch = epoch
        if on_epoch is not None:
            on_epoch(epoch, encoder, decoder)
        if metric < best_value - stop.min_delta:
            best_value = metric
            best = (encoder.params, decoder.params)
            report.best_epoch = epoch
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs > stop.patience:
                break

    encoder = Network(specs=encoder.specs, params=best[0], seed=enc_seed)
    decoder = Network(specs=decoder.specs, params=best[1], seed=dec_seed)
    report.wall_seconds = time.monotonic() - start
    return encoder, decoder, report


def _decode_images(decoder, z, image_shape, drange):
    out, _ = forward(decoder, z, mode="eval")
    lo, hi = drange
    return [np.clip(img, lo, hi) for img in _outputs_as_images(out, image_shape)]


def reconstruct_mode(encoder, decoder, x, drange=(-1.0, 1.0)):
    """Decodes the posterior mean (the mode of the Gaussian posterior)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"x must be a 2-D image, got shape {x.shape}")
    enc_out, _ = forward(encoder, _batch_arrays([x], encoder.specs[0].kind), mode="eval")
    latent_dim = enc_out.shape[1] // 2
    mu, _ = _split_heads(enc_out, latent_dim)
    return _decode_images(decoder, mu, x.shape, drange)[0]


def decoder_latent_dim(decoder) -> int:
    first = decoder.specs[0]
    if first.kind != "dense":
        raise ValueError("cannot infer latent size: decoder must start with dense")
    return first.in_dim


def sample_prior(decoder, n: int, seed: int, image_shape, drange=(-1.0, 1.0)):
    """Decodes ``n`` standard-normal latent draws into images."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return []
    z = substream(seed, "prior").normal(size=(n, decoder_latent_dim(decoder)))
    return _decode_images(decoder, z, tuple(image_shape), drange)


class ExpectedLossVAE(ParamsMixin):
    """Estimator wrapper: fit on images, then reconstruct, sample, or embed.

    Fitted attributes: ``encoder_``, ``decoder_``, ``report_``, ``config_``,
    ``image_shape_``.
    """

    def __init__(
        self,
        encoder_arch,
        decoder_arch,
        c=1000.0,
        latent_dim=8,
        mc_samples=1,
        loss="mse",
        optimizer=None,
        early_stop=None,
        seed=0,
        normalize_scale=False,
        scale_pairs=10000,
        valid_fraction=0.2,
        drange=(-1.0, 1.0),
    ):
        self.encoder_arch = encoder_arch
        self.decoder_arch = decoder_arch
        self.c = c
        self.latent_dim = latent_dim
        self.mc_samples = mc_samples
        self.loss = loss
        self.optimizer = optimizer
        self.early_stop = early_stop
        self.seed = seed
        self.normalize_scale = normalize_scale
        self.scale_pairs = scale_pairs
        self.valid_fraction = valid_fraction
        self.drange = drange

    def fit(self, images, valid=None):
        images = _as_image_list(images, "images")
        if valid is None:
            n_valid = max(1, int(round(self.valid_fraction * len(images))))
            if n_valid >= len(images):
                raise ValueError("dataset too small to hold out validation images")
            order = substream(self.seed, "split").permutation(len(images))
            chosen = set(order[:n_valid].tolist())
            valid = [images[i] for i in range(len(images)) if i in chosen]
            train = [images[i] for i in range(len(images)) if i not in chosen]
        else:
            train, valid = images, _as_image_list(valid, "valid")
        loss = self.loss if isinstance(self.loss, Loss) else Loss(self.loss)
        if self.normalize_scale:
            loss = loss.with_scale(
                estimate_loss_scale(loss, train, n_pairs=self.scale_pairs, seed=self.seed)
            )
        self.config_ = ElVaeConfig(
            c=self.c,
            latent_dim=self.latent_dim,
            mc_samples=self.mc_samples,
            loss=loss,
        )
        self.encoder_, self.decoder_, self.report_ = train_elvae(
            self.encoder_arch,
            self.decoder_arch,
            self.config_,
            train,
            valid,
            opt=self.optimizer or OptimizerConfig(kind="adam", lr=1e-3),
            stop=self.early_stop or EarlyStop(),
            seed=self.seed,
        )
        self.image_shape_ = train[0].shape
        return self

    def transform(self, images) -> np.ndarray:
        """Posterior means, one row per image."""
        check_fitted(self, "encoder_")
        images = _as_image_list(images, "images")
        enc_out, _ = forward(
            self.encoder_, _batch_arrays(images, self.encoder_.specs[0].kind), mode="eval"
        )
        mu, _ = _split_heads(enc_out, self.config_.latent_dim)
        return mu

    def reconstruct(self, images):
        check_fitted(self, "encoder_")
        return [
            reconstruct_mode(self.encoder_, self.decoder_, img, self.drange)
            for img in _as_image_list(images, "images")
        ]

    def sample(self, n: int, seed: int | None = None):
        check_fitted(self, "decoder_")
        return sample_prior(
            self.decoder_,
            n,
            self.seed if seed is None else seed,
            self.image_shape_,
            self.drange,
        )

    def score(self, images) -> float:
        """Negative mean objective under a fixed evaluation draw (higher is better)."""
        check_fitted(self, "encoder_")
        images = _as_image_list(images, "images")
        eps = substream(self.seed, "score-eps").normal(
            size=(self.config_.mc_samples, len(images), self.config_.latent_dim)
        )
        value, _, _ = _batch_objective(
            images,
            self.encoder_,
            self.decoder_,
            self.config_,
            eps,
            self.image_shape_,
            with_grads=False,
        )
        return -value
