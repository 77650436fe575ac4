"""Experiment harness: instance generation, multi-trial benchmarks, image recovery.

Gaussian instances follow the synthetic sparse-regression recipe: a
standard-normal signal with a uniformly chosen sparse support, sensing rows
i.i.d. N(0, 1/n), and exact linear measurements.  Image instances use a raw
8-bit grayscale PGM as the signal (n = 2d sensing vectors, budget k = twice
the pixel support).
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import fileio, solvers
from .exceptions import EmptySignal, ImageLoadError, SparseObsError
from .objectives import LeastSquaresObjective
from .rng import derive_stream, stream_rng
from .solvers import SolverConfig, TraceRecord
from .validation import as_vector

DEFAULT_METHODS = ("iht", "topk-iobs")


@dataclass
class ExperimentSpec:
    """Everything needed to reproduce a benchmark run."""

    prior: str = "gaussian"
    d: int = 128
    n: int = 256
    k_star: int = 16
    k: int = 64
    iters: int = 750
    runs: int = 20
    seed: int = 0
    methods: tuple = DEFAULT_METHODS
    image_path: str = ""
    eta: object = "auto"
    damp: float = 0.0
    stoch_lambda: float = 1.0
    batch_size: int = 32
    noise: float = 0.0

    def __post_init__(self):
        if self.prior not in ("gaussian", "image"):
            raise ValueError(f"unknown prior {self.prior!r}")
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if self.prior == "gaussian" and not (0 < self.k_star <= self.k <= self.d):
            raise ValueError(
                f"need 0 < k_star <= k <= d, got k_star={self.k_star} k={self.k} d={self.d}"
            )
        for m in self.methods:
            if m not in solvers.METHOD_NAMES:
                raise ValueError(f"unknown method {m!r}")

    @classmethod
    def from_mapping(cls, mapping):
        """Build from string key=value pairs (e.g. a parsed spec file)."""
        kwargs = {}
        casts = {
            "prior": str, "d": int, "n": int, "k_star": int, "kstar": int, "k": int,
            "iters": int, "runs": int, "seed": int, "image_path": str,
            "damp": float, "stoch_lambda": float, "lambda": float,
            "batch_size": int, "batch": int, "noise": float,
        }
        aliases = {"kstar": "k_star", "lambda": "stoch_lambda", "batch": "batch_size"}
        for key, raw in mapping.items():
            if key == "methods":
                kwargs["methods"] = tuple(tok.strip() for tok in raw.split(",") if tok.strip())
            elif key == "eta":
                kwargs["eta"] = raw if raw == "auto" else float(raw)
            elif key in casts:
                kwargs[aliases.get(key, key)] = casts[key](raw)
            else:
                raise ValueError(f"unknown spec key {key!r}")
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path):
        return cls.from_mapping(fileio.read_keyvalues(path))


def gen_instance(spec, rng):
    """Sample (X, y, theta_star, meta) for the Gaussian prior.

    theta_star keeps a uniformly random k_star-subset of standard-normal
    entries; X entries are N(0, 1/n); y = X theta_star plus optional noise.
    """
    d, n, k_star = spec.d, spec.n, spec.k_star
    theta_star = rng.standard_normal(d)
    keep = rng.choice(d, size=k_star, replace=False)
    sparse = np.zeros(d)
    sparse[keep] = theta_star[keep]
    X = rng.normal(0.0, 1.0 / math.sqrt(n), size=(n, d))
    y = X @ sparse
    if spec.noise > 0.0:
        y = y + rng.normal(0.0, spec.noise, size=n)
    meta = {"d": d, "n": n, "kstar": k_star, "seed": spec.seed, "prior": "gaussian"}
    return X, y, sparse, meta


def read_pgm(path):
    """Read a binary 8-bit grayscale PGM (P5). Returns (height, width, float array)."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ImageLoadError(str(exc)) from exc
    tokens = []
    pos = 0
    while len(tokens) < 4:
        if pos >= len(data):
            raise ImageLoadError(f"{path}: truncated PGM header")
        chunk = data[pos:pos + 1]
        if chunk == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
        elif chunk.isspace():
            pos += 1
        else:
            start = pos
            while pos < len(data) and not data[pos:pos + 1].isspace():
                pos += 1
            tokens.append(data[start:pos])
    if tokens[0] != b"P5":
        raise ImageLoadError(f"{path}: not a binary PGM (P5) file")
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise ImageLoadError(f"{path}: malformed PGM header") from exc
    if maxval <= 0 or maxval > 255:
        raise ImageLoadError(f"{path}: need 8-bit data, maxval={maxval}")
    pos += 1  # single whitespace after maxval
    pixels = data[pos:pos + width * height]
    if len(pixels) != width * height:
        raise ImageLoadError(f"{path}: expected {width * height} pixel bytes, got {len(pixels)}")
    img = np.frombuffer(pixels, dtype=np.uint8).astype(np.float64)
    return height, width, img


def gen_image_instance(image_path, spec, rng):
    """Instance whose signal is a flattened grayscale image on the 0-255 scale.

    The support size comes from the image (nonzero pixel count), the budget is
    twice that, and n = 2d sensing vectors are drawn as in the Gaussian prior.
    """
    height, width, theta_star = read_pgm(image_path)
    d = height * width
    k_star = int(np.count_nonzero(theta_star))
    if k_star == 0:
        raise EmptySignal(f"{image_path}: image has no nonzero pixels")
    n = 2 * d
    X = rng.normal(0.0, 1.0 / math.sqrt(n), size=(n, d))
    y = X @ theta_star
    if spec.noise > 0.0:
        y = y + rng.normal(0.0, spec.noise, size=n)
    meta = {
        "d": d, "n": n, "kstar": k_star, "seed": spec.seed, "prior": "image",
        "height": height, "width": width,
    }
    # budget is twice the pixel support, capped at the dimension for dense images
    derived = replace(spec, prior="image", d=d, n=n, k_star=k_star, k=min(2 * k_star, d))
    return X, y, theta_star, meta, derived


def solver_config(spec, seed):
    return SolverConfig(
        k=spec.k, max_iters=spec.iters, eta=spec.eta, damp=spec.damp,
        stoch_lambda=spec.stoch_lambda, batch_size=spec.batch_size, seed=seed,
    )


@dataclass
class RunOutcome:
    run: int
    seed: int
    traces: dict = field(default_factory=dict)  # method -> list[TraceRecord]
    error: str = ""

    @property
    def failed(self):
        return bool(self.error)


@dataclass
class BenchResult:
    spec: ExperimentSpec
    outcomes: list
    mean_traces: dict  # method -> list[TraceRecord]
    std_traces: dict

    @property
    def n_success(self):
        return sum(1 for o in self.outcomes if not o.failed)


def _solve_one_run(spec, run_index):
    run_seed = derive_stream(spec.seed, run_index)
    rng = stream_rng(spec.seed, run_index)
    X, y, theta_star, _meta = gen_instance(spec, rng)
    obj = LeastSquaresObjective(X, y)
    outcome = RunOutcome(run=run_index, seed=run_seed)
    theta0 = np.zeros(spec.d)
    try:
        for m_idx, method in enumerate(spec.methods):
            cfg = solver_config(spec, derive_stream(run_seed, m_idx))
            state = solvers.run(obj, method, theta0, cfg, theta_star=theta_star)
            outcome.traces[method] = state.trace
    except SparseObsError as exc:
        outcome.error = f"{type(exc).__name__}: {exc}"
        outcome.traces = {}
    return outcome


def _aggregate(traces_per_run):
    """Per-iteration mean and sample stddev across runs (as TraceRecords)."""
    length = min(len(tr) for tr in traces_per_run)
    mean_rows, std_rows = [], []
    for t in range(length):
        rows = [tr[t] for tr in traces_per_run]
        cols = {}
        for name in ("loss", "dist_to_opt", "support_recall", "step_norm"):
            vals = [getattr(r, name) for r in rows]
            if any(v is None for v in vals):
                cols[name] = (None, None)
            else:
                arr = np.asarray(vals)
                cols[name] = (float(arr.mean()), float(arr.std(ddof=0)))
        mean_rows.append(TraceRecord(t, cols["loss"][0], cols["dist_to_opt"][0],
                                     cols["support_recall"][0], cols["step_norm"][0]))
        std_rows.append(TraceRecord(t, cols["loss"][1], cols["dist_to_opt"][1],
                                    cols["support_recall"][1], cols["step_norm"][1]))
    return mean_rows, std_rows


def run_bench(spec, outdir=None, jobs=1):
    """Run every method on ``spec.runs`` fresh instances and aggregate.

    Each run gets its own derived RNG stream, so traces are reproducible and
    independent of ``runs``.  Failed runs are recorded; aggregation needs at
    least half of the runs to succeed.
    """
    indices = list(range(spec.runs))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(lambda r: _solve_one_run(spec, r), indices))
    else:
        outcomes = [_solve_one_run(spec, r) for r in indices]

    good = [o for o in outcomes if not o.failed]
    if len(good) < spec.runs / 2:
        failures = "; ".join(o.error for o in outcomes if o.failed)
        raise SparseObsError(f"too many failed runs ({len(good)}/{spec.runs} ok): {failures}")

    mean_traces, std_traces = {}, {}
    for method in spec.methods:
        per_run = [o.traces[method] for o in good]
        mean_traces[method], std_traces[method] = _aggregate(per_run)

    result = BenchResult(spec=spec, outcomes=outcomes,
                         mean_traces=mean_traces, std_traces=std_traces)
    if outdir is not None:
        write_bench_outputs(result, outdir)
    return result


def write_bench_outputs(result, outdir):
    """Per-run trace CSVs, per-method mean/std CSVs, and a summary CSV."""
    os.makedirs(outdir, exist_ok=True)
    for outcome in result.outcomes:
        for method, trace in outcome.traces.items():
            path = os.path.join(outdir, f"{method}_run{outcome.run:02d}.csv")
            fileio.write_trace_csv(path, trace)
    for method in result.spec.methods:
        fileio.write_trace_csv(os.path.join(outdir, f"{method}_mean.csv"),
                               result.mean_traces[method])
        fileio.write_trace_csv(os.path.join(outdir, f"{method}_std.csv"),
                               result.std_traces[method])
    summary = os.path.join(outdir, "summary.csv")
    with open(summary, "w", encoding="ascii", newline="") as fh:
        fh.write("run,seed,method,status,final_loss,final_dist,final_recall\n")
        for o in result.outcomes:
            if o.failed:
                fh.write(f"{o.run},{o.seed},,failed,,,\n")
                continue
            for method in result.spec.methods:
                last = o.traces[method][-1]
                fh.write(
                    f"{o.run},{o.seed},{method},ok,"
                    f"{fileio.format_real(last.loss)},"
                    f"{fileio.format_real(last.dist_to_opt)},"
                    f"{fileio.format_real(last.support_recall)}\n"
                )


def psnr(recovered, truth, peak=255.0):
    """Peak signal-to-noise ratio in dB.

    Returns infinity when the RMSE is at float64 resolution relative to the
    peak (recovery is exact up to roundoff), so exactness is a stable flag.
    """
    recovered = as_vector(recovered)
    truth = as_vector(truth, dim=recovered.shape[0])
    mse = float(np.mean((recovered - truth) ** 2))
    if mse <= (1e-10 * peak) ** 2:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def recover_image(X, y, theta_star, method, spec, seed=0):
    """Solve the image instance, clamp to the plottable [0, 255] range.

    Returns ``(clamped_signal, psnr_db, state)``.
    """
    obj = LeastSquaresObjective(X, y)
    cfg = solver_config(spec, seed)
    state = solvers.run(obj, method, np.zeros(obj.d), cfg, theta_star=theta_star)
    clamped = np.clip(state.theta, 0.0, 255.0)
    return clamped, psnr(clamped, theta_star), state
