"""VGG16-based descriptors for grid regions and the whole scene.

Region vectors: each grid cell is cropped, resized, and pushed through
the convolutional stack plus the first two fully-connected layers,
giving a 4096-d activation (post-ReLU, eval mode).

Coarse vector: the full frame's final convolutional activations (512
channels) are max-pooled over each grid cell and over the full frame;
the per-region 512-d maxima are L2-normalized, summed, and normalized
again. All outputs are L2-normalized so angular distance is the natural
comparison.

Weights: ``random`` seeds torch's RNG and takes the library's default
initialization (fully deterministic, for pipelines and tests); anything
else is a path to a ``state_dict`` checkpoint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torchvision import models
from torchvision.models import VGG16_Weights

from .features import COARSE_DIM, GRID_CELLS, REGION_DIM

_IMAGENET_MEAN = (0.485, 0.456, 0.406)
_IMAGENET_STD = (0.229, 0.224, 0.225)
_EPS = 1e-12


@dataclass(frozen=True)
class ExtractionConfig:
    """Knobs for one extraction run; grids and output dims are fixed."""

    weights: str = "random"
    seed: int = 0
    resize: int = 224
    batch_size: int = 16
    device: str = "cpu"

    def __post_init__(self):
        if self.resize < 32:
            raise ValueError(f"resize {self.resize} too small for the conv stack")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")


class DescriptorModel:
    def __init__(self, config: ExtractionConfig):
        self.config = config
        if config.weights == "random":
            torch.manual_seed(config.seed)
            net = models.vgg16(weights=None)
        elif config.weights == "pretrained":
            net = models.vgg16(weights=VGG16_Weights.IMAGENET1K_V1)
        else:
            net = models.vgg16(weights=None)
            net.load_state_dict(torch.load(config.weights, map_location="cpu"))
        net.eval()
        self.device = torch.device(config.device)
        self.conv = net.features.to(self.device)
        self.pool = net.avgpool.to(self.device)
        # through the second 4096-wide linear layer and its ReLU; dropout
        # layers are identity in eval mode
        self.fc = net.classifier[:5].to(self.device)
        mean = torch.tensor(_IMAGENET_MEAN).view(3, 1, 1)
        std = torch.tensor(_IMAGENET_STD).view(3, 1, 1)
        self._mean = mean.to(self.device)
        self._std = std.to(self.device)

    def _to_batch(self, images) -> torch.Tensor:
        """uint8 HxWx3 arrays -> normalized float batch on the device."""
        out = torch.empty(
            (len(images), 3, self.config.resize, self.config.resize),
            device=self.device,
        )
        for i, arr in enumerate(images):
            t = torch.tensor(np.ascontiguousarray(arr), device=self.device)
            t = t.permute(2, 0, 1).float() / 255.0
            t = torch.nn.functional.interpolate(
                t.unsqueeze(0),
                size=(self.config.resize, self.config.resize),
                mode="bilinear",
                align_corners=False,
                antialias=True,
            ).squeeze(0)
            out[i] = (t - self._mean) / self._std
        return out

    @torch.no_grad()
    def embed_crops(self, crops) -> np.ndarray:
        """(len(crops), 4096) L2-normalized fully-connected descriptors."""
        vecs = []
        for lo in range(0, len(crops), self.config.batch_size):
            batch = self._to_batch(crops[lo : lo + self.config.batch_size])
            x = self.pool(self.conv(batch))
            x = self.fc(torch.flatten(x, 1))
            vecs.append(x.cpu().numpy().astype(np.float32))
        flat = np.concatenate(vecs, axis=0)
        norms = np.maximum(np.linalg.norm(flat, axis=1, keepdims=True), _EPS)
        return flat / norms

    @torch.no_grad()
    def embed_scene(self, images) -> np.ndarray:
        """(len(images), 512) regional-max aggregated scene descriptors."""
        out = []
        for lo in range(0, len(images), self.config.batch_size):
            batch = self._to_batch(images[lo : lo + self.config.batch_size])
            fmap = self.conv(batch)  # (b, 512, h, w)
            b, c, h, w = fmap.shape
            acc = torch.zeros((b, c), device=self.device)
            regions = ((0.0, 0.0, 1.0, 1.0),) + GRID_CELLS
            for x0, y0, x1, y1 in regions:
                r0, r1 = int(y0 * h), max(int(y0 * h) + 1, round(y1 * h))
                c0, c1 = int(x0 * w), max(int(x0 * w) + 1, round(x1 * w))
                region_max = fmap[:, :, r0:r1, c0:c1].amax(dim=(2, 3))
                region_max = region_max / region_max.norm(dim=1, keepdim=True).clamp(
                    min=_EPS
                )
                acc += region_max
            out.append(acc.cpu().numpy().astype(np.float32))
        coarse = np.concatenate(out, axis=0)
        norms = np.maximum(np.linalg.norm(coarse, axis=1, keepdims=True), _EPS)
        return coarse / norms


def region_crops(pixels: np.ndarray):
    """The 20 grid-cell crops of one uint8 HxWx3 image, in code order."""
    h, w = pixels.shape[:2]
    crops = []
    for x0, y0, x1, y1 in GRID_CELLS:
        r0, r1 = int(y0 * h), max(int(y0 * h) + 1, round(y1 * h))
        c0, c1 = int(x0 * w), max(int(x0 * w) + 1, round(x1 * w))
        crops.append(pixels[r0:r1, c0:c1])
    return crops


def describe_images(model: DescriptorModel, pixel_list) -> tuple:
    """(region, coarse) arrays for decoded images.

    region: (m, 20, 4096); coarse: (m, 512); both float32, L2-normalized.
    """
    m = len(pixel_list)
    region = np.empty((m, len(GRID_CELLS), REGION_DIM), dtype=np.float32)
    for i, pixels in enumerate(pixel_list):
        region[i] = model.embed_crops(region_crops(pixels))
    coarse = np.empty((m, COARSE_DIM), dtype=np.float32)
    if m:
        coarse[:] = model.embed_scene(pixel_list)
    return region, coarse
