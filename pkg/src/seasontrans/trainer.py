"""Alternating training of the two generators and two style discriminators.

Generators are updated first on their adversarial + cycle + identity
objectives, then each discriminator on its least-squares + style-vector
objective using history-buffer fakes.  The learning rate is held constant
for ``epochs_constant`` epochs and then decays linearly to zero.  All
randomness (init, data order, buffers) derives from one seed so serial runs
reproduce loss logs exactly.
"""

import csv
import hashlib
import json
import random
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from . import losses
from .discriminator import DiscriminatorConfig, StyleDiscriminator
from .generator import GeneratorConfig, TranslationGenerator

CHECKPOINT_FORMAT_VERSION = 1

LOG_HEADER = ["iter", "epoch", "lr", "g_xy_total", "g_yx_total", "d_x_total", "d_y_total",
              "gan", "cycle", "identity", "style"]


class TrainingDiverged(RuntimeError):
    """Raised when a loss goes non-finite; carries the offending values."""

    def __init__(self, message, diagnostics):
        super().__init__(f"{message}: {diagnostics}")
        self.diagnostics = diagnostics


@dataclass
class TrainConfig:
    epochs_total: int = 200
    epochs_constant: int = 100
    lr0: float = 2e-4
    lambda_cyc: float = 10.0
    lambda_id: float = 5.0
    batch_size: int = 1
    seed: int = 0
    scale: float = 1.0
    style_to_generator: bool = False
    image_size: int = 256
    n_blocks: int = 9
    buffer_capacity: int = 50
    beta1: float = 0.5
    beta2: float = 0.999
    checkpoint_every: int = 0
    deterministic: bool = True

    def __post_init__(self):
        if self.epochs_constant > self.epochs_total:
            raise ValueError("epochs_constant must not exceed epochs_total")
        if self.lr0 <= 0:
            raise ValueError("lr0 must be positive")
        if self.lambda_cyc < 0:
            raise ValueError("lambda_cyc must be non-negative")


def lr_schedule(epoch: int, cfg: TrainConfig) -> float:
    """Constant lr0 for the first epochs_constant epochs, then linear decay
    to zero at epochs_total."""
    if epoch < 0 or epoch > cfg.epochs_total:
        raise ValueError(f"epoch {epoch} outside [0, {cfg.epochs_total}]")
    if epoch < cfg.epochs_constant or cfg.epochs_total == cfg.epochs_constant:
        return cfg.lr0
    frac = (epoch - cfg.epochs_constant) / (cfg.epochs_total - cfg.epochs_constant)
    return cfg.lr0 * (1.0 - frac)


class HistoryBuffer:
    """Pool of previously generated images used to update discriminators.

    Once full, a query returns the fresh image with probability 1/2 and
    otherwise swaps it against a stored one.  Capacity 0 disables pooling.
    """

    def __init__(self, capacity: int = 50, seed: int = 0):
        self.capacity = capacity
        self.stored = []
        self._rng = random.Random(seed)

    def query(self, image: torch.Tensor) -> torch.Tensor:
        if self.capacity == 0:
            return image
        out = []
        for img in image.detach():
            if len(self.stored) < self.capacity:
                self.stored.append(img.clone())
                out.append(img)
            elif self._rng.random() < 0.5:
                out.append(img)
            else:
                idx = self._rng.randrange(self.capacity)
                out.append(self.stored[idx])
                self.stored[idx] = img.clone()
        return torch.stack(out)


class TranslationModel:
    """The four networks plus their configs; owns nothing about training."""

    def __init__(self, cfg: TrainConfig):
        self.cfg = cfg
        gen_cfg = GeneratorConfig(scale=cfg.scale, n_blocks=cfg.n_blocks)
        disc_cfg = DiscriminatorConfig.for_image_size(cfg.image_size, scale=cfg.scale)
        self.g_xy = TranslationGenerator(gen_cfg)
        self.g_yx = TranslationGenerator(gen_cfg)
        self.d_x = StyleDiscriminator(disc_cfg)
        self.d_y = StyleDiscriminator(disc_cfg)

    def networks(self):
        return {"g_xy": self.g_xy, "g_yx": self.g_yx, "d_x": self.d_x, "d_y": self.d_y}

    def translate(self, image: torch.Tensor, direction: str) -> torch.Tensor:
        if direction not in ("xy", "yx"):
            raise ValueError(f"direction must be 'xy' or 'yx', got {direction!r}")
        gen = self.g_xy if direction == "xy" else self.g_yx
        gen.eval()
        with torch.no_grad():
            out = gen(image)
        gen.train()
        return out

    def train(self):
        for net in self.networks().values():
            net.train()

    def eval(self):
        for net in self.networks().values():
            net.eval()


def build_model(cfg: TrainConfig) -> TranslationModel:
    """Construct the four networks with seed-deterministic initialization."""
    torch.manual_seed(cfg.seed)
    return TranslationModel(cfg)


def _set_requires_grad(module, flag):
    for p in module.parameters():
        p.requires_grad_(flag)


class TrainState:
    """Model, optimizers, buffers, and counters for one training run."""

    def __init__(self, cfg: TrainConfig, model: TranslationModel | None = None):
        self.cfg = cfg
        self.model = model or build_model(cfg)
        betas = (cfg.beta1, cfg.beta2)
        gen_params = list(self.model.g_xy.parameters()) + list(self.model.g_yx.parameters())
        self.opt_g = torch.optim.Adam(gen_params, lr=cfg.lr0, betas=betas)
        self.opt_dx = torch.optim.Adam(self.model.d_x.parameters(), lr=cfg.lr0, betas=betas)
        self.opt_dy = torch.optim.Adam(self.model.d_y.parameters(), lr=cfg.lr0, betas=betas)
        self.buffer_x = HistoryBuffer(cfg.buffer_capacity, seed=cfg.seed + 1)
        self.buffer_y = HistoryBuffer(cfg.buffer_capacity, seed=cfg.seed + 2)
        self.epoch = 0
        self.iteration = 0

    def set_lr(self, lr: float):
        for opt in (self.opt_g, self.opt_dx, self.opt_dy):
            for group in opt.param_groups:
                group["lr"] = lr


def _check_finite(reports):
    bad = {k: v for k, v in reports.items() if not np.isfinite(v.total)}
    if bad:
        raise TrainingDiverged("non-finite loss", {k: asdict(v) for k, v in bad.items()})


def train_step(state: TrainState, batch_x: torch.Tensor, batch_y: torch.Tensor):
    """One alternating update; returns LossReports for g_xy, g_yx, d_x, d_y."""
    cfg = state.cfg
    model = state.model
    if batch_x.dim() == 3:
        batch_x = batch_x.unsqueeze(0)
    if batch_y.dim() == 3:
        batch_y = batch_y.unsqueeze(0)

    # --- generators ---
    _set_requires_grad(model.d_x, False)
    _set_requires_grad(model.d_y, False)
    state.opt_g.zero_grad()

    fake_y = model.g_xy(batch_x)
    fake_x = model.g_yx(batch_y)
    rec_x = model.g_yx(fake_y)
    rec_y = model.g_xy(fake_x)
    id_y = model.g_xy(batch_y)
    id_x = model.g_yx(batch_x)

    m_fake_y = model.d_y.encode(fake_y)
    m_fake_x = model.d_x.encode(fake_x)
    gan_xy = losses.gan_loss_generator(model.d_y.decide(m_fake_y))
    gan_yx = losses.gan_loss_generator(model.d_x.decide(m_fake_x))
    cyc_x = losses.cycle_loss(batch_x, rec_x)
    cyc_y = losses.cycle_loss(batch_y, rec_y)
    idt_y = losses.identity_loss(batch_y, id_y)
    idt_x = losses.identity_loss(batch_x, id_x)

    style_xy = torch.zeros(())
    style_yx = torch.zeros(())
    style_weight = 0.0
    if cfg.style_to_generator:
        style_weight = 1.0
        with torch.no_grad():
            s_real_y = model.d_y.style_vector(model.d_y.encode(batch_y))
            s_real_x = model.d_x.style_vector(model.d_x.encode(batch_x))
        style_xy = losses.style_loss(model.d_y.style_vector(m_fake_y), s_real_y)
        style_yx = losses.style_loss(model.d_x.style_vector(m_fake_x), s_real_x)

    g_total = (gan_xy + gan_yx
               + cfg.lambda_cyc * (cyc_x + cyc_y)
               + cfg.lambda_id * (idt_y + idt_x)
               + style_weight * (style_xy + style_yx))
    g_total.backward()
    state.opt_g.step()

    report_g_xy = losses.generator_objective(
        gan_xy.item(), cyc_x.item(), idt_y.item(), style_xy.item(), style_weight,
        lambda_cycle=cfg.lambda_cyc, lambda_identity=cfg.lambda_id)
    report_g_yx = losses.generator_objective(
        gan_yx.item(), cyc_y.item(), idt_x.item(), style_yx.item(), style_weight,
        lambda_cycle=cfg.lambda_cyc, lambda_identity=cfg.lambda_id)

    # --- discriminators ---
    _set_requires_grad(model.d_x, True)
    _set_requires_grad(model.d_y, True)

    def update_discriminator(disc, opt, real, fake):
        opt.zero_grad()
        m_real = disc.encode(real)
        m_fake = disc.encode(fake)
        gan = losses.gan_loss_discriminator(disc.decide(m_real), disc.decide(m_fake))
        style = losses.style_loss(disc.style_vector(m_fake), disc.style_vector(m_real))
        (gan + style).backward()
        opt.step()
        return losses.discriminator_objective(gan.item(), style.item())

    report_d_y = update_discriminator(model.d_y, state.opt_dy, batch_y,
                                      state.buffer_y.query(fake_y))
    report_d_x = update_discriminator(model.d_x, state.opt_dx, batch_x,
                                      state.buffer_x.query(fake_x))

    reports = {"g_xy": report_g_xy, "g_yx": report_g_yx, "d_x": report_d_x, "d_y": report_d_y}
    _check_finite(reports)
    state.iteration += 1
    return reports


def log_row(state: TrainState, lr, reports) -> dict:
    return {
        "iter": state.iteration,
        "epoch": state.epoch,
        "lr": lr,
        "g_xy_total": reports["g_xy"].total,
        "g_yx_total": reports["g_yx"].total,
        "d_x_total": reports["d_x"].total,
        "d_y_total": reports["d_y"].total,
        "gan": reports["g_xy"].gan + reports["g_yx"].gan,
        "cycle": reports["g_xy"].cycle + reports["g_yx"].cycle,
        "identity": reports["g_xy"].identity + reports["g_yx"].identity,
        "style": reports["d_x"].style + reports["d_y"].style,
    }


def config_hash(cfg: TrainConfig) -> str:
    payload = json.dumps(asdict(cfg), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


def save_checkpoint(state: TrainState, path) -> Path:
    """Versioned container: named parameter tensors, optimizer moments,
    epoch index, config, and a shape/dtype manifest."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    manifest = {}
    nets = state.model.networks()
    for net_name, net in nets.items():
        for tensor_name, tensor in net.state_dict().items():
            manifest[f"{net_name}.{tensor_name}"] = {
                "shape": list(tensor.shape), "dtype": str(tensor.dtype)}
    payload = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "epoch": state.epoch,
        "iteration": state.iteration,
        "config": asdict(state.cfg),
        "config_hash": config_hash(state.cfg),
        "manifest": manifest,
        "state": {name: net.state_dict() for name, net in nets.items()},
        "optim": {"g": state.opt_g.state_dict(),
                  "d_x": state.opt_dx.state_dict(),
                  "d_y": state.opt_dy.state_dict()},
    }
    torch.save(payload, path)
    return path


def load_checkpoint(path) -> TrainState:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    version = payload.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format version {version}")
    cfg = TrainConfig(**payload["config"])
    state = TrainState(cfg)
    for name, net in state.model.networks().items():
        net.load_state_dict(payload["state"][name])
        for tensor_name, tensor in net.state_dict().items():
            entry = payload["manifest"][f"{name}.{tensor_name}"]
            if list(tensor.shape) != entry["shape"]:
                raise ValueError(f"manifest mismatch for {name}.{tensor_name}")
    state.opt_g.load_state_dict(payload["optim"]["g"])
    state.opt_dx.load_state_dict(payload["optim"]["d_x"])
    state.opt_dy.load_state_dict(payload["optim"]["d_y"])
    state.epoch = payload["epoch"]
    state.iteration = payload.get("iteration", 0)
    return state


def fit(dataset_x, dataset_y, cfg: TrainConfig, out_dir=None, state: TrainState | None = None):
    """Train for cfg.epochs_total epochs; returns (state, log rows).

    Each epoch makes one pass over the larger domain while the smaller one
    is sampled with replacement.  When ``out_dir`` is given, the CSV log is
    written incrementally and checkpoints land there.  Deterministic for a
    fixed (datasets, cfg, seed) under serial execution.
    """
    if state is None:
        state = TrainState(cfg)
    out_dir = Path(out_dir) if out_dir is not None else None
    rows = []
    writer = None
    log_file = None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        log_file = open(out_dir / "training_log.csv", "w", newline="")
        writer = csv.DictWriter(log_file, fieldnames=LOG_HEADER)
        writer.writeheader()

    try:
        if cfg.epochs_total > state.epoch and (len(dataset_x) == 0 or len(dataset_y) == 0):
            raise ValueError("both domains need at least one image to train")
        order_rng = np.random.default_rng([cfg.seed, 7])
        n_iters = max(len(dataset_x), len(dataset_y)) if cfg.epochs_total > state.epoch else 0
        n_batches = max(1, n_iters // cfg.batch_size) if n_iters else 0

        for epoch in range(state.epoch, cfg.epochs_total):
            state.epoch = epoch
            lr = lr_schedule(epoch, cfg)
            state.set_lr(lr)
            idx_x = _epoch_indices(len(dataset_x), n_iters, order_rng)
            idx_y = _epoch_indices(len(dataset_y), n_iters, order_rng)
            for b in range(n_batches):
                sel = slice(b * cfg.batch_size, (b + 1) * cfg.batch_size)
                batch_x = torch.stack([dataset_x.get(i, epoch) for i in idx_x[sel]])
                batch_y = torch.stack([dataset_y.get(i, epoch) for i in idx_y[sel]])
                reports = train_step(state, batch_x, batch_y)
                row = log_row(state, lr, reports)
                rows.append(row)
                if writer is not None:
                    writer.writerow(row)
            state.epoch = epoch + 1
            if out_dir is not None and cfg.checkpoint_every and (epoch + 1) % cfg.checkpoint_every == 0:
                save_checkpoint(state, out_dir / f"checkpoint_epoch{epoch + 1:04d}.pt")
        if out_dir is not None:
            save_checkpoint(state, out_dir / "checkpoint.pt")
    finally:
        if log_file is not None:
            log_file.close()
    return state, rows


def _epoch_indices(n, total, rng):
    """Permutation when n == total, else sampling with replacement."""
    if total == 0 or n == 0:
        return []
    if n >= total:
        return list(rng.permutation(n)[:total])
    return list(rng.integers(0, n, size=total))
