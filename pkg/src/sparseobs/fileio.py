"""Text serialization: matrices, vectors, instance bundles, traces, models.

Matrix format: first line ``<rows> <cols>``, then one line per row of
space-separated decimals printed with 17 significant digits (lossless for
float64).  A vector is a matrix with cols=1.
"""

import csv
import os

import numpy as np

from .exceptions import DimensionMismatch
from .validation import as_matrix, as_vector


def format_real(x):
    """17-significant-digit decimal, round-trips float64 exactly."""
    return format(float(x), ".17g")


def write_matrix(path, m):
    m = as_matrix(m)
    rows, cols = m.shape
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{rows} {cols}\n")
        for r in range(rows):
            fh.write(" ".join(format_real(x) for x in m[r]) + "\n")


def read_matrix(path):
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: malformed matrix header")
        rows, cols = int(header[0]), int(header[1])
        data = np.empty((rows, cols))
        for r in range(rows):
            parts = fh.readline().split()
            if len(parts) != cols:
                raise ValueError(f"{path}: row {r} has {len(parts)} entries, expected {cols}")
            data[r] = [float(p) for p in parts]
    return data


def write_vector(path, v):
    v = as_vector(v)
    write_matrix(path, v.reshape(-1, 1))


def read_vector(path):
    m = read_matrix(path)
    if m.shape[1] != 1:
        raise DimensionMismatch(f"{path}: expected a single column, got {m.shape[1]}")
    return m[:, 0]


def write_keyvalues(path, mapping):
    with open(path, "w", encoding="ascii") as fh:
        for key, value in mapping.items():
            fh.write(f"{key}={value}\n")


def read_keyvalues(path):
    """Parse ``key=value`` lines; ``#`` starts a comment, blank lines ignored."""
    out = {}
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}: malformed line {line!r}")
            out[key.strip()] = value.strip()
    return out


def write_instance(dirpath, X, y, theta_star, meta):
    """Write an instance bundle: X.mat, y.vec, theta_star.vec, meta."""
    os.makedirs(dirpath, exist_ok=True)
    write_matrix(os.path.join(dirpath, "X.mat"), X)
    write_vector(os.path.join(dirpath, "y.vec"), y)
    write_vector(os.path.join(dirpath, "theta_star.vec"), theta_star)
    write_keyvalues(os.path.join(dirpath, "meta"), meta)


def read_instance(dirpath):
    X = read_matrix(os.path.join(dirpath, "X.mat"))
    y = read_vector(os.path.join(dirpath, "y.vec"))
    theta_star = read_vector(os.path.join(dirpath, "theta_star.vec"))
    meta = read_keyvalues(os.path.join(dirpath, "meta"))
    return X, y, theta_star, meta


TRACE_HEADER = ["t", "loss", "dist_to_opt", "support_recall", "step_norm"]


def write_trace_csv(path, records):
    """One row per iteration; optional fields are blank when theta* is unknown."""
    with open(path, "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for rec in records:
            writer.writerow(
                [
                    rec.t,
                    format_real(rec.loss),
                    "" if rec.dist_to_opt is None else format_real(rec.dist_to_opt),
                    "" if rec.support_recall is None else format_real(rec.support_recall),
                    format_real(rec.step_norm),
                ]
            )


def read_trace_csv(path):
    from .solvers import TraceRecord

    records = []
    with open(path, "r", encoding="ascii", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != TRACE_HEADER:
            raise ValueError(f"{path}: unexpected trace header {header}")
        for row in reader:
            records.append(
                TraceRecord(
                    t=int(row[0]),
                    loss=float(row[1]),
                    dist_to_opt=None if row[2] == "" else float(row[2]),
                    support_recall=None if row[3] == "" else float(row[3]),
                    step_norm=float(row[4]),
                )
            )
    return records


def write_model(path, mlp):
    """Model file: ``layers=<L>`` then per layer an activation line and a matrix block."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"layers={len(mlp.layers)}\n")
        for weight, activation in mlp.layers:
            fh.write(f"activation={activation}\n")
            rows, cols = weight.shape
            fh.write(f"{rows} {cols}\n")
            for r in range(rows):
                fh.write(" ".join(format_real(x) for x in weight[r]) + "\n")


def read_model(path):
    from .pruner import TinyMlp

    with open(path, "r", encoding="ascii") as fh:
        head = fh.readline().strip()
        if not head.startswith("layers="):
            raise ValueError(f"{path}: expected 'layers=<L>' header")
        n_layers = int(head.split("=", 1)[1])
        layers = []
        for _ in range(n_layers):
            act_line = fh.readline().strip()
            if not act_line.startswith("activation="):
                raise ValueError(f"{path}: expected activation line")
            activation = act_line.split("=", 1)[1]
            rows, cols = (int(tok) for tok in fh.readline().split())
            weight = np.empty((rows, cols))
            for r in range(rows):
                weight[r] = [float(tok) for tok in fh.readline().split()]
            layers.append((weight, activation))
    return TinyMlp(layers)
