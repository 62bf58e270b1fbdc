"""Readers and writers: PFM rasters, scene directories, checkpoints."""

from .checkpoint import load_checkpoint, save_checkpoint
from .dataset import (DatasetFrame, SceneDataset, load_dataset, load_image,
                      read_dsm, save_dataset, save_image, write_dsm)
from .pfm import read_pfm, write_pfm

__all__ = [
    "DatasetFrame",
    "SceneDataset",
    "load_checkpoint",
    "load_dataset",
    "load_image",
    "read_dsm",
    "read_pfm",
    "save_checkpoint",
    "save_dataset",
    "save_image",
    "write_dsm",
    "write_pfm",
]
