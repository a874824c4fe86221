"""Regenerate the frozen extended-precision Mittag-Leffler reference table.

Run from the repository root:  python3 tests/make_reference.py
Values whose magnitude exceeds double range are stored as "inf".
"""

import json
import math
import os
import sys

import numpy as np

sys.path.insert(0, os.path.dirname(__file__))
from oracles import ml_reference  # noqa: E402

ALPHAS = [round(0.1 + 0.2 * i, 1) for i in range(10)]
RHOS = (0.5, 1.0, 1.5)
ZS = np.linspace(-30.0, 5.0, 200)


def main():
    rows = []
    for a in ALPHAS:
        for r in RHOS:
            for z in ZS:
                z = float(z)
                if z > 0 and z ** (1.0 / a) > 700.0:
                    rows.append([a, r, z, "inf"])
                    continue
                v = ml_reference(a, r, z)
                f = float(v)
                rows.append([a, r, z, repr(f) if math.isfinite(f) else "inf"])
    out = os.path.join(os.path.dirname(__file__), "data", "ml_reference.json")
    with open(out, "w") as fh:
        json.dump({"alphas": ALPHAS, "rhos": list(RHOS), "rows": rows}, fh, indent=0)
    print(f"wrote {len(rows)} rows to {out}")


if __name__ == "__main__":
    main()
