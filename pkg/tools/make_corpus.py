"""Regenerate tests/data/corpus: the natural photographs bundled with
scikit-image, matplotlib and scikit-learn, cropped to the 221x221 working
size.  Run from the repository root."""
from pathlib import Path

import matplotlib.cbook
import numpy as np
from PIL import Image
from skimage import data
from sklearn.datasets import load_sample_image

from tricodec.model import Raster
from tricodec.raster import fit_to_square, save_image

OUT = Path("tests/data/corpus")

SOURCES = {
    "astronaut": data.astronaut,
    "chelsea": data.chelsea,
    "coffee": data.coffee,
    "rocket": data.rocket,
    "motorcycle": lambda: data.stereo_motorcycle()[0],
    "camera": lambda: np.repeat(data.camera()[..., None], 3, axis=2),
    "coins": lambda: np.repeat(data.coins()[..., None], 3, axis=2),
    "hopper": lambda: np.asarray(Image.open(matplotlib.cbook.get_sample_data("grace_hopper.jpg"))),
    "china": lambda: load_sample_image("china.jpg"),
    "flower": lambda: load_sample_image("flower.jpg"),
}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, load in SOURCES.items():
        img = np.asarray(load())[..., :3]
        save_image(fit_to_square(Raster(img)), OUT / f"{name}.png")
        print(name)


if __name__ == "__main__":
    main()
