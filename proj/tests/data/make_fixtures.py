"""Regenerates the CSV fixtures in this directory (deterministic)."""
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent
SIDE = 8


def alef_raw(side):
    # Stored layout: the glyph's vertical stroke appears as a horizontal bar
    # when the row is decoded row-major.
    px = [[0] * side for _ in range(side)]
    mid = side // 2 - 1
    width = max(1, side // 16)
    for c in range(side // 8, side - side // 8):
        for k in range(width):
            px[mid + k][c] = 255
    return px


def random_glyph(rng):
    px = [[0] * SIDE for _ in range(SIDE)]
    for _ in range(rng.randint(6, 14)):
        px[rng.randrange(SIDE)][rng.randrange(SIDE)] = rng.choice([128, 200, 255])
    return px


def flat(px):
    return [v for row in px for v in row]


def write_rows(path, rows):
    path.write_text("".join(",".join(str(v) for v in r) + "\n" for r in rows))


def main():
    rng = random.Random(20221018)
    letters = [alef_raw(SIDE)] + [random_glyph(rng) for _ in range(7)]
    letter_labels = [0, 1, 2, 3, 4, 5, 6, 27]
    digits = [random_glyph(rng) for _ in range(8)]
    digit_labels = [0, 1, 2, 3, 4, 5, 8, 9]

    write_rows(HERE / "letters_images.csv", [flat(p) for p in letters])
    write_rows(HERE / "letters_labels.csv", [[l] for l in letter_labels])
    write_rows(HERE / "digits_images.csv", [flat(p) for p in digits])
    write_rows(HERE / "digits_labels.csv", [[l] for l in digit_labels])
    write_rows(HERE / "digits_labels_1indexed.csv", [[l + 1] for l in digit_labels])
    write_rows(HERE / "alef_32.csv", [flat(alef_raw(32))])

    # Expected decoded values: the stored pixel (r, c) lands at (c, r) of the
    # upright tensor, divided by 255. Every nonzero pixel plus a few zeros.
    lines = ["# fixture sample row col value   (upright tensor coordinates, value = pixel / 255)"]
    for name, imgs in (("letters", letters), ("digits", digits)):
        for s, px in enumerate(imgs):
            for r in range(SIDE):
                for c in range(SIDE):
                    if px[r][c] or (r + c + s) % 13 == 0:
                        lines.append(f"{name} {s} {c} {r} {px[r][c] / 255:.9g}")
    (HERE / "expected_values.txt").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
