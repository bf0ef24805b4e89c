"""spcgan-seg - semi-pixel-wise cycle-GAN lesion segmentation on synthetic ultrasound phantoms"""

__version__ = "0.1.0"

__all__ = ["__version__"]
