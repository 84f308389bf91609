"""Regenerate the bundled ASCII worlds in src/mapexplore/worlds/.

    python tools/make_worlds.py
"""
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "mapexplore" / "worlds"
H, W = 128, 256
WALL = 2


def blank(h=H, w=W):
    g = np.zeros((h, w), dtype=np.uint8)
    g[:WALL, :] = g[-WALL:, :] = 1
    g[:, :WALL] = g[:, -WALL:] = 1
    return g


def hwall(g, row, c0, c1):
    g[row:row + WALL, c0:c1] = 1


def vwall(g, col, r0, r1):
    g[r0:r1, col:col + WALL] = 1


def door_h(g, row, c0, width=12):
    g[row:row + WALL, c0:c0 + width] = 0


def door_v(g, col, r0, width=12):
    g[r0:r0 + width, col:col + WALL] = 0


def corridor():
    # two long corridors joined at both ends, offices on either side
    g = blank()
    hwall(g, 40, 0, W)
    hwall(g, 56, 20, W - 20)
    hwall(g, 72, 20, W - 20)
    hwall(g, 88, 0, W)
    # the strip between the corridors is a row of storage rooms
    for col in range(20, W - 20, 36):
        vwall(g, col, 56, 74)
        door_h(g, 56, col + 10, 12)
    vwall(g, W - 20, 56, 74)
    # offices above and below
    for col in range(36, W, 44):
        vwall(g, col, 0, 42)
        vwall(g, col, 88, H)
    for col in list(range(2, W, 44)):
        door_h(g, 40, col + 14, 14)
        door_h(g, 88, col + 20, 14)
    return g, (10.5, 4.85)


def cluttered():
    rng = np.random.default_rng(3)
    g = blank()
    # a suite in the top-right corner with one entrance
    vwall(g, 190, 0, 50)
    hwall(g, 50, 190, W)
    door_h(g, 50, 212, 14)
    vwall(g, 222, 0, 50)
    door_v(g, 222, 18, 12)
    # boxes on a jittered lattice, keeping corridors of >= 10 cells
    for r in range(14, H - 14, 26):
        for c in range(14, W - 14, 28):
            if c >= 180 and r < 62:
                continue
            if rng.random() < 0.2:
                continue
            h = int(rng.integers(4, 12))
            w = int(rng.integers(4, 14))
            dr = int(rng.integers(0, 6))
            dc = int(rng.integers(0, 6))
            g[r + dr:r + dr + h, c + dc:c + dc + w] = 1
    # a few partial partitions
    vwall(g, 96, 30, 100)
    hwall(g, 96, 120, 190)
    return g, (1.35, 12.0)


def multiroom():
    rng = np.random.default_rng(7)
    g = blank()
    rows = [0, 42, 84, H]
    cols = [0, 50, 100, 150, 200, W]
    for r in rows[1:-1]:
        hwall(g, r, 0, W)
    for c in cols[1:-1]:
        vwall(g, c, 0, H)
    # horizontal doors between vertically stacked rooms
    for ri in range(1, len(rows) - 1):
        for ci in range(len(cols) - 1):
            if rng.random() < 0.6 or ci in (0, 2):
                c0 = cols[ci] + int(rng.integers(6, cols[ci + 1] - cols[ci] - 18))
                door_h(g, rows[ri], c0, 12)
    # vertical doors between side-by-side rooms
    for ci in range(1, len(cols) - 1):
        for ri in range(len(rows) - 1):
            if rng.random() < 0.5 or ri == 1:
                r0 = rows[ri] + int(rng.integers(6, rows[ri + 1] - rows[ri] - 18))
                door_v(g, cols[ci], r0, 12)
    # a little furniture
    for _ in range(10):
        r = int(rng.integers(10, H - 16))
        c = int(rng.integers(10, W - 16))
        g[r:r + 4, c:c + 6] = 1
    return g, (12.5, 6.25)


def tworoom():
    g = blank(80, 80)
    vwall(g, 40, 0, 80)
    door_v(g, 40, 34, 12)
    return g, (1.95, 3.95)


def dump(g, start, name):
    header = f"meta resolution=0.1 origin=0,0 start={start[0]},{start[1]}"
    body = "\n".join("".join("#" if v else "." for v in row) for row in g)
    (OUT / f"{name}.txt").write_text(header + "\n" + body + "\n")


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    for fn in (corridor, cluttered, multiroom, tworoom):
        grid, start = fn()
        dump(grid, start, fn.__name__)
        print(fn.__name__, grid.shape)
