"""Pack one CAVE scene (a directory of 31 single-band PNGs) into an HSC1 cube.

    python3 scripts/ingest_cave.py balloons_ms/ balloons.hsc

Bands are sorted by file name and scaled to [0, 1] by the bit depth of the
first image. Needs Pillow, which the package itself does not depend on.
"""

import argparse
from pathlib import Path

import numpy as np

from cpdeconv import HsiCube
from cpdeconv.formats import write_cube


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("scene_dir", type=Path)
    ap.add_argument("out")
    args = ap.parse_args()
    from PIL import Image

    files = sorted(args.scene_dir.glob("*.png"))
    if not files:
        raise SystemExit(f"no PNG bands in {args.scene_dir}")
    bands = [np.asarray(Image.open(f), dtype=np.float64) for f in files]
    bands = [b[..., 0] if b.ndim == 3 else b for b in bands]
    peak = 65535.0 if Image.open(files[0]).mode.startswith("I") else 255.0
    cube = HsiCube(np.stack(bands) / peak)
    write_cube(args.out, cube)
    print(f"{args.out}: P={cube.p} Q={cube.q} N={cube.n}, max {cube.data.max():.4f}")


if __name__ == "__main__":
    main()
