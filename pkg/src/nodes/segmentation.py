"""Segmentation node: apply a trained forward generator to a manifest or one image"""

from pathlib import Path

from ..models.phantom import GrayImage
from ..models.trainer import Checkpoint
from ..phantom import load_samples
from ..trainer import segment_batch
from ..utils.raster_io import read_png16, uint16_to_image, write_mask_png


class SegmentationNode:
    """Write one predicted mask PNG per input image

    ``input_path`` is either a dataset ``manifest.json`` or a single 16-bit PNG
    image; masks are named after the sample id or the image's file stem.
    """

    def __init__(self, checkpoint_path: Path, input_path: Path, out_dir: Path):
        self.checkpoint_path = checkpoint_path
        self.input_path = input_path
        self.out_dir = out_dir

    def _inputs(self) -> list[tuple[str, GrayImage]]:
        if self.input_path.suffix == ".json":
            return [(s.id, s.image) for s in load_samples(self.input_path)]
        image = GrayImage(values=uint16_to_image(read_png16(self.input_path)))
        return [(self.input_path.stem, image)]

    def run(self) -> Path:
        print("\n=== Phase: Segmentation ===")
        checkpoint = Checkpoint.load(self.checkpoint_path)
        inputs = self._inputs()
        print(f"Regime: {checkpoint.config.regime}, images: {len(inputs)}")

        masks = segment_batch([image for _, image in inputs], checkpoint)
        mask_dir = self.out_dir / "masks"
        for (name, _), mask in zip(inputs, masks, strict=True):
            write_mask_png(mask_dir / f"{name}.png", mask.values)

        print("\n✅ Segmentation complete:")
        print(f"   Masks: {mask_dir}")
        return mask_dir
