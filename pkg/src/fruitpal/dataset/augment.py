"""Seeded image augmentation recipes.

Two recipes ship, a third study pass reuses the first verbatim:

* set1: grayscale on 3% of images, saturation within ±5%, brightness
  within ±10%, exposure within ±10%, Gaussian blur with sigma up to
  0.5 px, salt-and-pepper noise on up to 1% of pixels, mosaic enabled.
* set2: horizontal and vertical flips, saturation within ±25%, noise on
  up to 5% of pixels.
* set3: alias of set1.

Determinism contract: per-image randomness comes from a 64-bit seed
derived by hashing the plan seed with the image id, so augmenting in any
order, or in parallel, gives identical outputs. For each variant the
draws are consumed in a fixed order: grayscale gate, saturation,
brightness, exposure, blur sigma, noise fraction, then noise placement.
Disabled operations consume no draws. Flip variants (set2) draw in input
order: horizontal first, vertical second.

Pixel model: uint8 arrays of shape (height, width, 3). Photometric ops
compute in float and floor back to uint8 after clamping to [0, 255].
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from PIL import Image
from scipy import ndimage

from ..core import BoundingBox, ConfigError, GroundTruth

#: Normalized-area floor below which a transformed box is dropped.
MIN_BOX_AREA = 1e-4

#: Luma weights shared by grayscale and saturation.
_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class AugmentationRecipe:
    """Parameter bounds for one augmentation pass."""

    name: str
    grayscale_prob: float = 0.0
    saturation_bound: float = 0.0
    brightness_bound: float = 0.0
    exposure_bound: float = 0.0
    blur_sigma_max: float = 0.0
    noise_fraction_max: float = 0.0
    hflip: bool = False
    vflip: bool = False
    mosaic: bool = False

    def __post_init__(self):
        if not 0.0 <= self.grayscale_prob <= 1.0:
            raise ConfigError(f"grayscale_prob out of range: {self.grayscale_prob}")
        for field_name in (
            "saturation_bound",
            "brightness_bound",
            "exposure_bound",
            "blur_sigma_max",
            "noise_fraction_max",
        ):
            value = getattr(self, field_name)
            if value < 0.0:
                raise ConfigError(f"{field_name} must be non-negative: {value}")
        if self.noise_fraction_max > 1.0:
            raise ConfigError(
                f"noise_fraction_max cannot exceed 1: {self.noise_fraction_max}"
            )


SET1 = AugmentationRecipe(
    name="set1",
    grayscale_prob=0.03,
    saturation_bound=0.05,
    brightness_bound=0.10,
    exposure_bound=0.10,
    blur_sigma_max=0.5,
    noise_fraction_max=0.01,
    mosaic=True,
)

SET2 = AugmentationRecipe(
    name="set2",
    saturation_bound=0.25,
    noise_fraction_max=0.05,
    hflip=True,
    vflip=True,
)

SET3 = SET1

RECIPES: dict[str, AugmentationRecipe] = {"set1": SET1, "set2": SET2, "set3": SET3}


@dataclass(frozen=True)
class AugmentationPlan:
    """A recipe plus the dataset-level seed."""

    recipe: AugmentationRecipe
    seed: int

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer: {self.seed}")


def derive_seed(plan_seed: int, image_id: str) -> int:
    """Stable 64-bit per-image seed; independent of iteration order."""
    digest = hashlib.sha256(f"{plan_seed}:{image_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class ParameterDraw:
    """The sampled parameters for one output variant.

    Signed fractions live in +-bound of their recipe entry; blur is a
    sigma in pixels and noise_fraction the fraction of pixels touched.
    """

    grayscale: bool = False
    saturation: float = 0.0
    brightness: float = 0.0
    exposure: float = 0.0
    blur_sigma: float = 0.0
    noise_fraction: float = 0.0


def sample_draw(recipe: AugmentationRecipe, rng: np.random.Generator) -> ParameterDraw:
    """Consume draws in the documented order; disabled ops take none."""
    grayscale = bool(rng.random() < recipe.grayscale_prob) if recipe.grayscale_prob else False
    saturation = (
        float(rng.uniform(-recipe.saturation_bound, recipe.saturation_bound))
        if recipe.saturation_bound
        else 0.0
    )
    brightness = (
        float(rng.uniform(-recipe.brightness_bound, recipe.brightness_bound))
        if recipe.brightness_bound
        else 0.0
    )
    exposure = (
        float(rng.uniform(-recipe.exposure_bound, recipe.exposure_bound))
        if recipe.exposure_bound
        else 0.0
    )
    blur_sigma = (
        float(rng.uniform(0.0, recipe.blur_sigma_max)) if recipe.blur_sigma_max else 0.0
    )
    noise_fraction = (
        float(rng.uniform(0.0, recipe.noise_fraction_max))
        if recipe.noise_fraction_max
        else 0.0
    )
    return ParameterDraw(
        grayscale=grayscale,
        saturation=saturation,
        brightness=brightness,
        exposure=exposure,
        blur_sigma=blur_sigma,
        noise_fraction=noise_fraction,
    )


# --- Pixel primitives -------------------------------------------------------


def _to_uint8(pixels: np.ndarray) -> np.ndarray:
    return np.floor(np.clip(pixels, 0.0, 255.0)).astype(np.uint8)


def _check_image(pixels: np.ndarray) -> None:
    if pixels.ndim != 3 or pixels.shape[2] != 3 or pixels.dtype != np.uint8:
        raise ValueError(f"expected uint8 HxWx3 image, got {pixels.dtype} {pixels.shape}")


def to_grayscale(pixels: np.ndarray) -> np.ndarray:
    """Replace all channels with floor(0.299 R + 0.587 G + 0.114 B)."""
    _check_image(pixels)
    luma = np.floor(pixels.astype(np.float64) @ _LUMA).astype(np.uint8)
    return np.repeat(luma[:, :, np.newaxis], 3, axis=2)


def adjust_saturation(pixels: np.ndarray, fraction: float) -> np.ndarray:
    """Scale chroma around per-pixel luma by (1 + fraction)."""
    _check_image(pixels)
    as_float = pixels.astype(np.float64)
    luma = (as_float @ _LUMA)[:, :, np.newaxis]
    return _to_uint8(luma + (as_float - luma) * (1.0 + fraction))


def adjust_brightness(pixels: np.ndarray, fraction: float) -> np.ndarray:
    """Scale all channels by (1 + fraction), clamped at 255."""
    _check_image(pixels)
    return _to_uint8(pixels.astype(np.float64) * (1.0 + fraction))


def exposure_scale(fraction: float, bound: float) -> float:
    """Stop-like exposure scale: full positive draw multiplies channels by
    (1 + bound), full negative divides by it, zero leaves them alone."""
    if bound <= 0.0:
        return 1.0
    return (1.0 + bound) ** (fraction / bound)


def adjust_exposure(pixels: np.ndarray, scale: float) -> np.ndarray:
    """Scale all channels by an exposure factor; see `exposure_scale`."""
    _check_image(pixels)
    return _to_uint8(pixels.astype(np.float64) * scale)


def gaussian_blur(pixels: np.ndarray, sigma: float) -> np.ndarray:
    """Per-channel Gaussian blur; sigma 0 is the identity."""
    _check_image(pixels)
    if sigma <= 0.0:
        return pixels.copy()
    blurred = ndimage.gaussian_filter(
        pixels.astype(np.float64), sigma=(sigma, sigma, 0.0)
    )
    return _to_uint8(blurred)


def salt_pepper_noise(
    pixels: np.ndarray, fraction: float, rng: np.random.Generator
) -> np.ndarray:
    """Set floor(fraction * pixel count) distinct pixels to black or white."""
    _check_image(pixels)
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"noise fraction out of range: {fraction}")
    height, width = pixels.shape[:2]
    count = int(fraction * height * width)
    out = pixels.copy()
    if count == 0:
        return out
    flat = rng.choice(height * width, size=count, replace=False)
    values = rng.integers(0, 2, size=count, dtype=np.uint8) * 255
    out[flat // width, flat % width, :] = values[:, np.newaxis]
    return out


def hflip_image(pixels: np.ndarray) -> np.ndarray:
    _check_image(pixels)
    return np.flip(pixels, axis=1).copy()


def vflip_image(pixels: np.ndarray) -> np.ndarray:
    _check_image(pixels)
    return np.flip(pixels, axis=0).copy()


def hflip_box(box: BoundingBox) -> BoundingBox:
    """Mirror across the vertical axis; corners re-sorted."""
    return BoundingBox(1.0 - box.x_max, box.y_min, 1.0 - box.x_min, box.y_max)


def vflip_box(box: BoundingBox) -> BoundingBox:
    """Mirror across the horizontal axis; corners re-sorted."""
    return BoundingBox(box.x_min, 1.0 - box.y_max, box.x_max, 1.0 - box.y_min)


# --- Single-image pipeline ---------------------------------------------------


@dataclass(frozen=True)
class AugmentedVariant:
    """One output image: pixels, remapped truths, and the draw that made it."""

    tag: str  # "photo", "hflip", or "vflip"
    pixels: np.ndarray
    truths: tuple[GroundTruth, ...]
    draw: ParameterDraw


def _apply_photometric(
    pixels: np.ndarray,
    recipe: AugmentationRecipe,
    draw: ParameterDraw,
    rng: np.random.Generator,
) -> np.ndarray:
    out = pixels
    if draw.grayscale:
        out = to_grayscale(out)
    if recipe.saturation_bound:
        out = adjust_saturation(out, draw.saturation)
    if recipe.brightness_bound:
        out = adjust_brightness(out, draw.brightness)
    if recipe.exposure_bound:
        out = adjust_exposure(out, exposure_scale(draw.exposure, recipe.exposure_bound))
    if recipe.blur_sigma_max:
        out = gaussian_blur(out, draw.blur_sigma)
    if recipe.noise_fraction_max:
        out = salt_pepper_noise(out, draw.noise_fraction, rng)
    return out


def augment_image(
    pixels: np.ndarray,
    truths: Sequence[GroundTruth],
    plan: AugmentationPlan,
    seed: int,
) -> list[AugmentedVariant]:
    """Produce this image's augmented variants under the given per-image seed.

    Flip recipes yield one variant per enabled flip axis, each flipped from
    the original and then given its own photometric draws; recipes without
    flips yield a single photometric variant. Class labels never change.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    recipe = plan.recipe
    variants: list[AugmentedVariant] = []
    if recipe.hflip or recipe.vflip:
        flips = []
        if recipe.hflip:
            flips.append(("hflip", hflip_image, hflip_box))
        if recipe.vflip:
            flips.append(("vflip", vflip_image, vflip_box))
        for tag, flip_pixels, flip_box in flips:
            draw = sample_draw(recipe, rng)
            flipped = flip_pixels(pixels)
            out = _apply_photometric(flipped, recipe, draw, rng)
            mapped = tuple(
                GroundTruth(fruit=t.fruit, box=flip_box(t.box)) for t in truths
            )
            variants.append(AugmentedVariant(tag, out, mapped, draw))
    else:
        draw = sample_draw(recipe, rng)
        out = _apply_photometric(pixels, recipe, draw, rng)
        variants.append(AugmentedVariant("photo", out, tuple(truths), draw))
    return variants


# --- Mosaic ------------------------------------------------------------------


def _fit_quadrant(pixels: np.ndarray, height: int, width: int) -> np.ndarray:
    if pixels.shape[0] == height and pixels.shape[1] == width:
        return pixels
    resized = Image.fromarray(pixels).resize((width, height), Image.BILINEAR)
    return np.asarray(resized, dtype=np.uint8)


def mosaic(
    inputs: Sequence[tuple[np.ndarray, Sequence[GroundTruth]]],
) -> tuple[np.ndarray, tuple[GroundTruth, ...]]:
    """Composite four annotated images onto a fixed 2x2 grid.

    Inputs fill top-left, top-right, bottom-left, bottom-right in order.
    Each quadrant is the max input height by max input width, so the
    composite is twice that; every input is rescaled to fit its quadrant.
    Boxes shrink to quarter area and are dropped below `MIN_BOX_AREA`.
    """
    if len(inputs) != 4:
        raise ValueError(f"mosaic requires exactly 4 inputs, got {len(inputs)}")
    for pixels, _ in inputs:
        _check_image(pixels)
    quad_h = max(p.shape[0] for p, _ in inputs)
    quad_w = max(p.shape[1] for p, _ in inputs)
    composite = np.zeros((2 * quad_h, 2 * quad_w, 3), dtype=np.uint8)
    out_truths: list[GroundTruth] = []
    offsets = ((0, 0), (0, 1), (1, 0), (1, 1))  # (row, col) per input slot
    for (row, col), (pixels, truths) in zip(offsets, inputs):
        fitted = _fit_quadrant(pixels, quad_h, quad_w)
        composite[
            row * quad_h : (row + 1) * quad_h, col * quad_w : (col + 1) * quad_w
        ] = fitted
        for truth in truths:
            box = truth.box
            mapped = BoundingBox(
                (col + box.x_min) / 2,
                (row + box.y_min) / 2,
                (col + box.x_max) / 2,
                (row + box.y_max) / 2,
            )
            if mapped.area < MIN_BOX_AREA:
                continue
            out_truths.append(GroundTruth(fruit=truth.fruit, box=mapped))
    return composite, tuple(out_truths)


def mosaic_groups(image_ids: Sequence[str], plan_seed: int) -> list[tuple[str, ...]]:
    """Deterministic grouping of ids into mosaic quadruples.

    Ids are shuffled under a seed derived from the plan seed, then taken
    four at a time; a trailing partial group is discarded.
    """
    rng = np.random.Generator(np.random.PCG64(derive_seed(plan_seed, "mosaic-groups")))
    order = list(image_ids)
    rng.shuffle(order)
    return [tuple(order[i : i + 4]) for i in range(0, len(order) - 3, 4)]
