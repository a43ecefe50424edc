"""Regenerates the shipped grayscale images from scikit-image's bundled samples.

All sources are public domain or CC0 (see skimage.data docstrings).
"""
import os

import numpy as np
from skimage import color, data, transform

HERE = os.path.dirname(os.path.abspath(__file__))


def gray_u8(img):
    if img.ndim == 3:
        img = color.rgb2gray(img[..., :3]) * 255.0
    return np.clip(np.round(img), 0, 255).astype(np.uint8)


def half(img):
    out = transform.resize(img.astype(np.float64), (img.shape[0] // 2, img.shape[1] // 2),
                           anti_aliasing=True, preserve_range=True)
    return np.clip(np.round(out), 0, 255).astype(np.uint8)


def write_pgm(path, img):
    h, w = img.shape
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (w, h))
        f.write(img.tobytes())


def main():
    cam = gray_u8(data.camera())
    write_pgm(os.path.join(HERE, "cameraman256.pgm"), half(cam))

    # (name, source, top, left) crops at half resolution, 64x64
    tests = [
        ("cameraman", half(cam), 40, 90),
        ("astronaut", half(gray_u8(data.astronaut())), 30, 80),
        ("coins", half(gray_u8(data.coins())), 20, 40),
        ("moon", half(gray_u8(data.moon())), 100, 100),
        ("coffee", half(gray_u8(data.coffee())), 60, 120),
        ("chelsea", half(gray_u8(data.chelsea())), 40, 60),
    ]
    for name, src, t, l in tests:
        write_pgm(os.path.join(HERE, "test", name + ".pgm"), src[t:t + 64, l:l + 64])

    trains = [
        ("brick", half(gray_u8(data.brick())), 0, 0),
        ("gravel", half(gray_u8(data.gravel())), 60, 60),
        ("cell", half(gray_u8(data.cell())), 80, 80),
        ("clock", half(gray_u8(data.clock())), 10, 40),
        ("rocket", half(gray_u8(data.rocket())), 40, 100),
        ("ihc", half(gray_u8(data.immunohistochemistry())), 60, 60),
    ]
    for name, src, t, l in trains:
        write_pgm(os.path.join(HERE, "train", name + ".pgm"), src[t:t + 96, l:l + 96])


if __name__ == "__main__":
    main()
