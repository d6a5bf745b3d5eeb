"""CSV and JSON emitters."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

HARMONICS_COLUMNS = ("ell", "x", "re_q", "im_q", "re_p", "im_p")
CURRENT_COLUMNS = ("n", "J_n", "nJ_n", "J_limit", "I_n")
PROFILE_COLUMNS = ("x", "u", "p2", "T_of_u", "energy", "F_functional", "bond_current")
SIM_COLUMNS = ("x", "p2_mean", "p2_stderr", "current_mean", "current_stderr")
VARIANCE_COLUMNS = ("n", "m", "x", "re_V", "im_V")
VARIANCE_TOTAL_COLUMNS = ("n", "total_variance", "scaled")


def write_csv(path, columns, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow(["" if v is None else _fmt(v) for v in row])
    return path


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def write_json(path, data) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=_default)
        fh.write("\n")
    return path


def harmonics_rows(field):
    for i, ell in enumerate(field.ells):
        for x in range(field.n + 1):
            q, p = field.q[i, x], field.p[i, x]
            yield (int(ell), x, q.real, q.imag, p.real, p.imag)
