"""Thumbnail codec built on color-interpolated Delaunay triangulations."""
from .bitstream import decode, encode, encoded_size
from .errors import (BudgetInfeasibleError, ContractViolation, DecodeError, TriCodecError)
from .metrics import mse, psnr, quality, ssim
from .model import ColorEntry, ColorTable, GridSpec, Raster, TriModel, VertexSet, validate
from .raster import load_image, render, save_image
from .triangulate import Triangulation, delaunay

__version__ = "0.1.0"
