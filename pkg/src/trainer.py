"""Training regimes (SPCGAN, GAN + pixel-wise, FCN-only), model selection and inference

Domain A is the raw image, domain B the segmentation. ``G_AB`` segments, ``G_BA``
synthesizes an image from a mask. ``D_forward`` judges masks per pixel,
``D_backward`` judges image patches. Masks are handled on the internal scale
{0, 1} -> {-1, +1}.
"""

import warnings
from collections.abc import Iterator
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import torch

from .config import settings
from .errors import DomainError, NumericFaultError, ShapeError
from .evalstat import dice
from .losses import (
    LossParts,
    combine,
    cycle_loss,
    discriminator_objective,
    generator_adversarial_loss,
    pixelwise_loss,
    squash,
    total_objective,
)
from .models.losses import LossReport, Regime
from .models.phantom import GrayImage, PairedSample, SegMask
from .models.trainer import (
    Checkpoint,
    IterationRecord,
    TrainConfig,
    TrainLog,
    ValidationRecord,
    ValMetric,
)
from .netzoo import NetHandle, build_discriminator, build_generator
from .phantom import augment

NET_ORDER = ("G_AB", "G_BA", "D_forward", "D_backward")


def lr_at(epoch: int, cfg: TrainConfig) -> float:
    """Constant rate until ``decay_start_epoch``, then linear to zero at ``epochs``"""
    if not 0 <= epoch <= cfg.epochs:
        raise DomainError(f"epoch {epoch} outside [0, {cfg.epochs}]")
    if epoch <= cfg.decay_start_epoch:
        return cfg.lr
    return cfg.lr * (cfg.epochs - epoch) / (cfg.epochs - cfg.decay_start_epoch)


class ImagePool:
    """History of generated samples used for discriminator updates"""

    def __init__(self, size: int, rng: np.random.Generator):
        self.size = size
        self.rng = rng
        self.items: list[torch.Tensor] = []

    def __len__(self) -> int:
        return len(self.items)

    def query(self, batch: torch.Tensor) -> torch.Tensor:
        """Store each element; return it or, with probability 0.5, a stored older one"""
        if self.size == 0:
            return batch.detach()
        out = []
        for element in batch.detach():
            if len(self.items) < self.size:
                self.items.append(element.clone())
                out.append(element)
            elif self.rng.random() < 0.5:
                idx = int(self.rng.integers(self.size))
                out.append(self.items[idx].clone())
                self.items[idx] = element.clone()
            else:
                out.append(element)
        return torch.stack(out)


def _derived_seed(seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


def mask_to_internal(values: np.ndarray) -> np.ndarray:
    return values * 2.0 - 1.0


class Trainer:
    """Holds the networks, optimizers and pools of one training run"""

    def __init__(self, cfg: TrainConfig, device: str | None = None):
        self.cfg = cfg
        self.device = torch.device(device or settings.device)
        if settings.deterministic:
            torch.use_deterministic_algorithms(True, warn_only=True)
        if settings.torch_threads:
            torch.set_num_threads(settings.torch_threads)

        self.nets: dict[str, NetHandle] = {}
        for index, name in enumerate(NET_ORDER):
            if name not in cfg.net_names():
                continue
            seed = _derived_seed(cfg.seed, index)
            if name.startswith("G"):
                net = build_generator(cfg.generator, seed)
            elif name == "D_forward":
                net = build_discriminator(cfg.forward_discriminator, seed)
            else:
                net = build_discriminator(cfg.backward_discriminator, seed)
            net.module.to(self.device)
            self.nets[name] = net

        self.generators = [n for name, n in self.nets.items() if name.startswith("G")]
        self.discriminators = [n for name, n in self.nets.items() if name.startswith("D")]
        self.opt_g = torch.optim.Adam(
            [p for n in self.generators for p in n.module.parameters()], lr=cfg.lr, betas=cfg.betas
        )
        self.opt_d = (
            torch.optim.Adam(
                [p for n in self.discriminators for p in n.module.parameters()],
                lr=cfg.lr,
                betas=cfg.betas,
            )
            if self.discriminators
            else None
        )
        schedule = self._schedule_factor
        self.schedulers = [torch.optim.lr_scheduler.LambdaLR(self.opt_g, schedule)]
        if self.opt_d is not None:
            self.schedulers.append(torch.optim.lr_scheduler.LambdaLR(self.opt_d, schedule))

        self.rng = np.random.default_rng(_derived_seed(cfg.seed, 100))
        self.pool_forward = ImagePool(cfg.pool_size, np.random.default_rng(_derived_seed(cfg.seed, 101)))
        self.pool_backward = ImagePool(cfg.pool_size, np.random.default_rng(_derived_seed(cfg.seed, 102)))
        self.iteration = 0
        self.log = TrainLog()

    def _schedule_factor(self, epoch: int) -> float:
        return lr_at(min(epoch, self.cfg.epochs), self.cfg) / self.cfg.lr

    @property
    def lr(self) -> float:
        return self.opt_g.param_groups[0]["lr"]

    def _to_tensors(self, samples: list[PairedSample]) -> tuple[torch.Tensor, torch.Tensor]:
        images = np.stack([s.image.values for s in samples])[:, None]
        masks = np.stack([mask_to_internal(s.mask.values) for s in samples])[:, None]
        return (
            torch.as_tensor(images, dtype=torch.float32, device=self.device),
            torch.as_tensor(masks, dtype=torch.float32, device=self.device),
        )

    @staticmethod
    def _set_requires_grad(nets: list[NetHandle], flag: bool) -> None:
        for net in nets:
            for p in net.module.parameters():
                p.requires_grad_(flag)

    def forward_pass(self, x: torch.Tensor, y: torch.Tensor) -> dict[str, torch.Tensor]:
        """Forward translation and, for SPCGAN, both cycles"""
        out = {"fake_mask": self.nets["G_AB"](x)}
        if self.cfg.uses_cycle:
            out["rec_image"] = self.nets["G_BA"](out["fake_mask"])
            out["fake_image"] = self.nets["G_BA"](y)
            out["rec_mask"] = self.nets["G_AB"](out["fake_image"])
        return out

    def objective_parts(
        self, x: torch.Tensor, y: torch.Tensor, fakes: dict[str, torch.Tensor]
    ) -> LossParts:
        """Generator-side loss terms; the pixel-wise term is forward-only"""
        form = self.cfg.weights.gan_form
        parts = LossParts(pix=pixelwise_loss(fakes["fake_mask"], y))
        if self.cfg.uses_discriminators:
            scores = squash(self.nets["D_forward"](fakes["fake_mask"]), form)
            parts.adv_forward = generator_adversarial_loss(scores, form)
        if self.cfg.uses_cycle:
            scores = squash(self.nets["D_backward"](fakes["fake_image"]), form)
            parts.adv_backward = generator_adversarial_loss(scores, form)
            parts.cyc = cycle_loss(x, fakes["rec_image"]) + cycle_loss(y, fakes["rec_mask"])
        return parts

    def discriminator_step(
        self, x: torch.Tensor, y: torch.Tensor, fakes: dict[str, torch.Tensor]
    ) -> float:
        """Update discriminators on real versus pooled fake samples"""
        if self.opt_d is None:
            return 0.0
        form = self.cfg.weights.gan_form
        self._set_requires_grad(self.generators, False)
        self._set_requires_grad(self.discriminators, True)
        self.opt_d.zero_grad(set_to_none=True)

        d_forward = self.nets["D_forward"]
        pooled = self.pool_forward.query(fakes["fake_mask"])
        loss = discriminator_objective(
            squash(d_forward(y), form), squash(d_forward(pooled), form), form
        )
        if self.cfg.uses_cycle:
            d_backward = self.nets["D_backward"]
            pooled = self.pool_backward.query(fakes["fake_image"])
            loss = loss + discriminator_objective(
                squash(d_backward(x), form), squash(d_backward(pooled), form), form
            )
        if not torch.isfinite(loss):
            raise NumericFaultError(f"discriminator loss is not finite at iteration {self.iteration}")
        loss.backward()
        self.opt_d.step()
        self._set_requires_grad(self.generators, True)
        return float(loss.detach())

    def generator_step(
        self, x: torch.Tensor, y: torch.Tensor, fakes: dict[str, torch.Tensor]
    ) -> LossReport:
        """Update generators with discriminators frozen"""
        self._set_requires_grad(self.discriminators, False)
        self.opt_g.zero_grad(set_to_none=True)
        parts = self.objective_parts(x, y, fakes)
        try:
            total = combine(parts, self.cfg.weights, self.cfg.regime)
            report = total_objective(parts, self.cfg.weights, self.cfg.regime)
        except NumericFaultError as e:
            raise NumericFaultError(f"iteration {self.iteration}: {e}") from e
        total.backward()
        self.opt_g.step()
        self._set_requires_grad(self.discriminators, True)
        return report

    def train_step(self, samples: list[PairedSample], epoch: int) -> LossReport:
        x, y = self._to_tensors(samples)
        fakes = self.forward_pass(x, y)
        self.discriminator_step(x, y, fakes)
        report = self.generator_step(x, y, fakes)
        self.log.iterations.append(
            IterationRecord(iteration=self.iteration, epoch=epoch, lr=self.lr, **report.row())
        )
        self.iteration += 1
        return report

    @torch.no_grad()
    def validate(self, val_set: list[PairedSample], epoch: int) -> ValidationRecord:
        losses, scores = [], []
        for sample in val_set:
            x, y = self._to_tensors([sample])
            fakes = self.forward_pass(x, y)
            report = total_objective(
                self.objective_parts(x, y, fakes), self.cfg.weights, self.cfg.regime
            )
            losses.append(report.total)
            pred = (fakes["fake_mask"][0, 0] > 0).cpu().numpy()
            scores.append(dice(pred, sample.mask.values >= 0.5))
        record = ValidationRecord(
            epoch=epoch, val_loss=float(np.mean(losses)), val_dice=float(np.mean(scores))
        )
        self.log.validations.append(record)
        return record

    def _batches(self, train_set: list[PairedSample], epoch: int) -> Iterator[list[PairedSample]]:
        """Augmented batches in a seeded order; prefetching never reorders"""
        order = np.random.default_rng(_derived_seed(self.cfg.seed, 200, epoch)).permutation(
            len(train_set)
        )
        jobs = [(train_set[i], _derived_seed(self.cfg.seed, 300, epoch, int(i))) for i in order]

        def work(job: tuple[PairedSample, int]) -> PairedSample:
            return augment(job[0], self.cfg.aug, job[1])

        if self.cfg.prefetch_workers > 0:
            with ThreadPoolExecutor(max_workers=self.cfg.prefetch_workers) as pool:
                augmented = list(pool.map(work, jobs))
        else:
            augmented = [work(job) for job in jobs]
        for start in range(0, len(augmented), self.cfg.batch_size):
            yield augmented[start : start + self.cfg.batch_size]

    def snapshot(self) -> dict[str, dict[str, torch.Tensor]]:
        return {name: net.state_dict() for name, net in self.nets.items()}

    def fit(
        self, train_set: list[PairedSample], val_set: list[PairedSample]
    ) -> tuple[Checkpoint, TrainLog]:
        if not train_set:
            raise ValueError("training set is empty")
        multiple = self.cfg.generator.size_multiple
        for sample in [*train_set, *val_set]:
            h, w = sample.image.shape
            if h % multiple or w % multiple:
                raise ShapeError(f"sample {sample.id} ({h}x{w}) is not divisible by {multiple}")
        input_shape = train_set[0].image.shape

        best: tuple[dict, int, ValidationRecord] | None = None
        for epoch in range(self.cfg.epochs):
            reports = [self.train_step(batch, epoch) for batch in self._batches(train_set, epoch)]
            lr = self.lr
            for scheduler in self.schedulers:
                scheduler.step()

            done = epoch + 1
            record = None
            if val_set and (done % self.cfg.val_every == 0 or done == self.cfg.epochs):
                record = self.validate(val_set, done)
                if best is None or self._better(record, best[2]):
                    best = (self.snapshot(), done, record)

            if done % self.cfg.log_every == 0 or done == self.cfg.epochs:
                mean = {k: float(np.mean([getattr(r, k) for r in reports])) for k in reports[0].row()}
                line = (
                    f"  epoch {done}/{self.cfg.epochs}  lr={lr:.2e}  "
                    + "  ".join(f"{k}={v:.4f}" for k, v in mean.items())
                )
                if record is not None:
                    line += f"  val_loss={record.val_loss:.4f}  val_dice={record.val_dice:.4f}"
                print(line)

        if best is None:
            if self.cfg.epochs > 0:
                warnings.warn(
                    "validation set is empty; selecting the final epoch", stacklevel=2
                )
            checkpoint = Checkpoint(
                config=self.cfg,
                nets=self.snapshot(),
                epoch=self.cfg.epochs,
                val_loss=None,
                input_shape=input_shape,
            )
        else:
            nets, epoch, record = best
            checkpoint = Checkpoint(
                config=self.cfg,
                nets=nets,
                epoch=epoch,
                val_loss=record.val_loss,
                input_shape=input_shape,
                extra={"val_dice": record.val_dice},
            )
        return checkpoint, self.log

    def _better(self, record: ValidationRecord, incumbent: ValidationRecord) -> bool:
        if self.cfg.val_metric == ValMetric.DICE:
            return record.val_dice > incumbent.val_dice
        return record.val_loss < incumbent.val_loss


def train(
    train_set: list[PairedSample], val_set: list[PairedSample], cfg: TrainConfig
) -> tuple[Checkpoint, TrainLog]:
    """Train the regime's networks and return the selected checkpoint with its log"""
    return Trainer(cfg).fit(train_set, val_set)


def generator_from_checkpoint(ckpt: Checkpoint) -> NetHandle:
    net = build_generator(ckpt.config.generator, _derived_seed(ckpt.config.seed, 0))
    net.load_state_dict(ckpt.nets["G_AB"])
    net.module.to(torch.device(settings.device))
    return net


def _segment_with(net: NetHandle, img: GrayImage, threshold: float) -> SegMask:
    multiple = net.size_multiple
    if img.height % multiple or img.width % multiple:
        raise ShapeError(
            f"image {img.height}x{img.width} does not fit the checkpoint backbone "
            f"(sides must be divisible by {multiple})"
        )
    with torch.no_grad():
        out = net(img)[0, 0].cpu().numpy()
    return SegMask.from_bool(out > threshold)


def segment(img: GrayImage, ckpt: Checkpoint, threshold: float = 0.0) -> SegMask:
    """Apply the forward generator and binarize (0.0 internal = 0.5 in mask units)"""
    return _segment_with(generator_from_checkpoint(ckpt), img, threshold)


def segment_batch(
    images: list[GrayImage], ckpt: Checkpoint, threshold: float = 0.0
) -> list[SegMask]:
    net = generator_from_checkpoint(ckpt)
    return [_segment_with(net, img, threshold) for img in images]
