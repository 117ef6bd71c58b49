#!/usr/bin/env python3
"""Mock screening model honouring the entrypoint contract.

    mock_model.py IMAGE_DIR METADATA_PATH OUTPUT_PATH DEVICE MODE SEED NOISE

Reads labels straight from the metadata document, which a real model would
never do; that is what makes the oracle modes possible. Standard library
only, so it runs anywhere the harness runs.
"""

import json
import os
import random
import subprocess
import sys
import time

SIDES = (("left_malignant", ("L-CC", "L-MLO")), ("right_malignant", ("R-CC", "R-MLO")))
VIEWS = ("L-CC", "R-CC", "L-MLO", "R-MLO")


def breast_rows(exams, mode, seed, noise):
    rng = random.Random(seed)
    rows = []
    for exam in exams:
        row = []
        for key, _ in SIDES:
            y = exam["cancer_label"][key]
            if mode == "oracle":
                score = float(y)
            elif mode == "anti-oracle":
                score = 1.0 - y
            elif mode == "noisy":
                score = float(1 - y if rng.random() < noise else y)
            else:
                raise SystemExit(f"unknown breast mode {mode}")
            row.append(score)
        rows.append(row)
    return rows


def image_rows(exams, mode, seed, noise):
    rng = random.Random(seed)
    rows = []
    for exam in exams:
        for view in VIEWS:
            key = "left_malignant" if view.startswith("L") else "right_malignant"
            y = exam["cancer_label"][key]
            for path in exam[view]:
                if mode == "image-oracle":
                    score = 0.6 + 0.3 * rng.random() if y else 0.4 * rng.random()
                else:
                    score = min(1.0, max(0.0, 0.5 * y + 0.25 + rng.gauss(0.0, noise)))
                rows.append((path, score, y))
    return rows


def main(argv):
    image_dir, metadata, output, device, mode, seed, noise = argv
    seed, noise = int(seed), float(noise)
    print(f"mock model: mode={mode} device={device} images={image_dir}", file=sys.stderr)
    with open(metadata, encoding="utf-8") as f:
        exams = json.load(f)

    if mode == "fail":
        for i in range(60):
            print(f"traceback line {i}", file=sys.stderr)
        return 3
    if mode == "no-output":
        return 0
    if mode == "sleep":
        child = subprocess.Popen([sys.executable, "-c", "import time; time.sleep(120)"])
        with open(os.path.join(os.path.dirname(output), "child.pid"), "w") as f:
            f.write(str(child.pid))
        time.sleep(120)
        return 0
    if mode == "headers-only":
        with open(output, "w") as f:
            f.write("index,left_malignant,right_malignant\n")
        return 0
    if mode in ("image-oracle", "image-noisy"):
        with open(output, "w") as f:
            f.write("image_index,malignant_pred,malignant_label\n")
            for path, score, y in image_rows(exams, mode, seed, noise):
                f.write(f"{path},{score:.4f},{y}\n")
        return 0
    with open(output, "w") as f:
        f.write("index,left_malignant,right_malignant\n")
        for k, (left, right) in enumerate(breast_rows(exams, mode, seed, noise)):
            f.write(f"{k},{left:.4f},{right:.4f}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
