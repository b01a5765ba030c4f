"""Synthetic training data: render scenes, draw their labels, save a dataset.

Run:  python demos/02_synthetic_data.py [out_dir]

Scenes are 64x64 grayscale renders of one or two shaded cuboids among
clutter lines and non-cuboid distractor shapes. Every scene is a pure
function of (seed, index), so datasets can be regenerated on demand.
"""

import sys
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from cuboidnet.data import SceneConfig, generate, hflip, load_dataset, save_dataset
from cuboidnet.geometry import FACES

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_data")
cfg = SceneConfig(seed=0)
items = generate(cfg, 16)

# A contact sheet with the annotation drawn on top: box in grey, front face in white.
scale = 4
sheet = Image.new("RGB", (4 * 64 * scale, 4 * 64 * scale))
for i, (img, ann) in enumerate(items):
    tile = Image.fromarray((img * 255).astype(np.uint8)).resize((64 * scale, 64 * scale), Image.NEAREST)
    tile = tile.convert("RGB")
    draw = ImageDraw.Draw(tile)
    for c in ann.cuboids:
        draw.rectangle(list(c.box * scale), outline=(128, 128, 128))
        v = c.verts * scale
        front = [tuple(v[k]) for k in (FACES["front"][0], FACES["front"][2], FACES["front"][3], FACES["front"][1])]
        draw.polygon(front, outline=(255, 255, 255))
        for k, (x, y) in enumerate(v):
            r = 3 if c.vis[k] else 2
            draw.ellipse([x - r, y - r, x + r, y + r], fill=(255, 80, 80) if c.vis[k] else (80, 80, 255))
    sheet.paste(tile, ((i % 4) * 64 * scale, (i // 4) * 64 * scale))
out.mkdir(parents=True, exist_ok=True)
sheet.save(out / "contact_sheet.png")
print(f"wrote {out / 'contact_sheet.png'} (red: visible corners, blue: self-occluded)")

# Flipping swaps left and right corner labels; flipping twice gives the scene back.
img, ann = items[0]
img2, ann2 = hflip(*hflip(img, ann))
print("double flip restores the image:", np.array_equal(img, img2))

save_dataset(out / "dataset", items)
back = load_dataset(out / "dataset")
print(f"saved and reloaded {len(back)} scenes; max pixel change {max(np.abs(a - b).max() for (a, _), (b, _) in zip(items, back)):.4f}")
