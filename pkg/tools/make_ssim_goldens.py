"""Write reference SSIM values for tests/ssim_pairs.py using scikit-image.

Run from the repository root: python3 tools/make_ssim_goldens.py
"""
import json
import sys
from pathlib import Path

from skimage.metrics import structural_similarity

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from ssim_pairs import pairs  # noqa: E402

from tricodec.metrics import luma  # noqa: E402

out = {}
for name, a, b in pairs():
    out[name] = structural_similarity(luma(a), luma(b), data_range=255.0, gaussian_weights=True,
                                      sigma=1.5, use_sample_covariance=False)
path = Path(__file__).resolve().parents[1] / "tests" / "data" / "ssim_goldens.json"
path.write_text(json.dumps(out, indent=1) + "\n")
print(json.dumps(out, indent=1))
