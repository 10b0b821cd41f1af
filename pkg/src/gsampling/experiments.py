"""Monte Carlo harness: MSE-versus-budget sweeps over random signal
realizations, with CSV/JSON output and per-(method, budget) summaries."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .estimator import reconstruct
from .graph import generate_erdos_renyi, load_matrix_market
from .samplers import METHODS, run_method
from .signal import SignalModel, derive_seed, draw_signal, observe, random_psd_covariance
from .spectral import BandlimitedBasis, BasisSource, graph_basis

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "trial", "method", "budget", "mse_analytic", "mse_empirical",
    "elapsed_seconds", "gain_evaluations", "seed",
)

# Second seed key separating sampler streams from model streams.
_METHOD_STREAM, _MODEL_STREAM = 0, 1
_COVARIANCE, _SIGNAL, _NOISE = 0, 1, 2
_GRAPH_KEY = 2**32 - 1

_METHOD_PARAMS = {
    "randomized_greedy": {"epsilon"},
    "relaxation_rounded": {"max_iters", "tol"},
}


class ConfigError(ValueError):
    def __init__(self, field_name, message):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


@dataclass(frozen=True)
class MethodSpec:
    name: str
    params: dict = field(default_factory=dict)

    @property
    def label(self) -> str:
        if not self.params:
            return self.name
        inner = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.name}({inner})"


@dataclass
class ExperimentConfig:
    graph: dict
    k_signal: int
    sigma2: float
    budgets: list
    methods: list
    trials: int = 1
    master_seed: int = 0
    basis_source: str = "adjacency"
    output: str | None = None
    workers: int = 1
    timing: bool = True

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        if not isinstance(d, dict):
            raise ConfigError("config", "must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown field")
        for name in ("graph", "k_signal", "sigma2", "budgets", "methods"):
            if name not in d:
                raise ConfigError(name, "missing required field")
        methods = []
        for i, m in enumerate(d["methods"]):
            if isinstance(m, str):
                m = {"name": m}
            if not isinstance(m, dict) or "name" not in m:
                raise ConfigError(f"methods[{i}]", "expected a name or an object with 'name'")
            params = {k: v for k, v in m.items() if k != "name"}
            methods.append(MethodSpec(m["name"], params))
        cfg = cls(**{**d, "methods": methods})
        cfg.validate()
        return cfg

    def validate(self):
        g = self.graph
        if not isinstance(g, dict) or len(g) != 1 or next(iter(g)) not in ("er", "file"):
            raise ConfigError("graph", "expected {'er': {'n', 'p'}} or {'file': path}")
        if "er" in g:
            er = g["er"]
            if not isinstance(er, dict) or not isinstance(er.get("n"), int) or er["n"] < 1:
                raise ConfigError("graph.er.n", "must be a positive integer")
            p = er.get("p")
            if not isinstance(p, (int, float)) or not 0 <= p <= 1:
                raise ConfigError("graph.er.p", "must be a probability")
        elif not isinstance(g["file"], str):
            raise ConfigError("graph.file", "must be a path")
        try:
            BasisSource(self.basis_source)
        except ValueError:
            raise ConfigError("basis_source", "must be 'adjacency' or 'laplacian'") from None
        if not isinstance(self.k_signal, int) or self.k_signal < 1:
            raise ConfigError("k_signal", "must be a positive integer")
        if "er" in g and self.k_signal > g["er"]["n"]:
            raise ConfigError("k_signal", "exceeds the number of nodes")
        if not isinstance(self.sigma2, (int, float)) or not self.sigma2 > 0:
            raise ConfigError("sigma2", "must be positive")
        if not self.budgets or not isinstance(self.budgets, list):
            raise ConfigError("budgets", "must be a nonempty list")
        for b in self.budgets:
            if not isinstance(b, int) or not 1 <= b <= self.k_signal:
                raise ConfigError("budgets", f"budget {b!r} must be an integer in [1, k_signal]")
        if not self.methods:
            raise ConfigError("methods", "must be a nonempty list")
        for i, m in enumerate(self.methods):
            if m.name not in METHODS:
                raise ConfigError(f"methods[{i}].name", f"unknown method {m.name!r}")
            extra = set(m.params) - _METHOD_PARAMS.get(m.name, set())
            if extra:
                raise ConfigError(f"methods[{i}].{sorted(extra)[0]}", "unsupported parameter")
            if m.name == "randomized_greedy":
                eps = m.params.get("epsilon")
                if not isinstance(eps, (int, float)) or not 0 < eps < 1:
                    raise ConfigError(f"methods[{i}].epsilon", "must lie in (0, 1)")
                if eps < math.exp(-min(self.budgets)) * (1 - 1e-12):
                    raise ConfigError(f"methods[{i}].epsilon", "must be at least exp(-budget)")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError("trials", "must be a positive integer")
        if not isinstance(self.master_seed, int) or not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed", "must be a 64-bit unsigned integer")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError("workers", "must be a positive integer")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["methods"] = [{"name": m.name, **m.params} for m in self.methods]
        return d


@dataclass
class ExperimentRecord:
    trial: int
    method: str
    budget: int
    mse_analytic: float
    mse_empirical: float
    elapsed_seconds: float
    gain_evaluations: int
    seed: int

    def csv_row(self) -> list:
        return [self.trial, self.method, self.budget, repr(self.mse_analytic),
                repr(self.mse_empirical), repr(self.elapsed_seconds),
                self.gain_evaluations, self.seed]


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from None
    return ExperimentConfig.from_dict(data)


def build_graph(graph_cfg: dict, master_seed: int):
    if "er" in graph_cfg:
        er = graph_cfg["er"]
        return generate_erdos_renyi(er["n"], er["p"], derive_seed(master_seed, _GRAPH_KEY))
    return load_matrix_market(graph_cfg["file"])


def build_basis(config: ExperimentConfig) -> BandlimitedBasis:
    g = build_graph(config.graph, config.master_seed)
    if config.k_signal > g.n:
        raise ConfigError("k_signal", f"exceeds the number of nodes ({g.n})")
    return graph_basis(g, config.k_signal, config.basis_source)


def trial_model(basis, sigma2, master_seed, trial) -> SignalModel:
    p = random_psd_covariance(basis.k, derive_seed(master_seed, trial, _MODEL_STREAM, _COVARIANCE))
    return SignalModel(basis, p, sigma2)


def run_trial(config: ExperimentConfig, basis: BandlimitedBasis, trial: int) -> list:
    """All (method, budget) records for one signal realization."""
    seed = config.master_seed
    model = trial_model(basis, config.sigma2, seed, trial)
    x, _ = draw_signal(model, derive_seed(seed, trial, _MODEL_STREAM, _SIGNAL))
    y = observe(model, x, derive_seed(seed, trial, _MODEL_STREAM, _NOISE))
    records = []
    for mi, spec in enumerate(config.methods):
        mseed = derive_seed(seed, trial, _METHOD_STREAM, mi)
        for b in config.budgets:
            res = run_method(spec.name, model, b, seed=mseed, **spec.params)
            xhat, _ = reconstruct(y, res.s, model)
            records.append(ExperimentRecord(
                trial=trial, method=spec.label, budget=b, mse_analytic=res.mse,
                mse_empirical=float(np.sum((x - xhat) ** 2)),
                elapsed_seconds=res.elapsed if config.timing else 0.0,
                gain_evaluations=res.gain_evaluations, seed=mseed,
            ))
    return records


def _safe_trial(args):
    config, basis, trial = args
    try:
        return trial, run_trial(config, basis, trial), None
    except Exception as exc:  # noqa: BLE001 - one bad trial must not sink the run
        return trial, [], f"{type(exc).__name__}: {exc}"


class RecordWriter:
    """Serialises records to CSV or a JSON document as they arrive."""

    def __init__(self, path, fmt="csv", config=None):
        self.path = Path(path)
        self.fmt = fmt
        self.config = config
        self._records = []
        self._fh = self.path.open("w", newline="")
        if fmt == "csv":
            self._csv = csv.writer(self._fh, lineterminator="\n")
            self._csv.writerow(CSV_COLUMNS)

    def write(self, records):
        if self.fmt == "csv":
            for r in records:
                self._csv.writerow(r.csv_row())
            self._fh.flush()
        else:
            self._records.extend(records)

    def close(self):
        meta = {"version": __version__, "config": self.config.to_dict() if self.config else None}
        if self.fmt == "json":
            json.dump({**meta, "records": [asdict(r) for r in self._records]}, self._fh, indent=1)
            self._fh.write("\n")
        self._fh.close()
        if self.fmt == "csv":
            sidecar = self.path.with_suffix(".meta.json")
            sidecar.write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")


def run_experiment(config: ExperimentConfig, output=None, fmt="csv", workers=None) -> list:
    """Run every method at every budget on ``config.trials`` realizations.

    Each trial draws its own covariance, signal and noise; the graph and
    its basis are shared. Records go to ``output`` (or ``config.output``)
    in trial order as trials finish. A trial that raises is logged and
    skipped.
    """
    basis = build_basis(config)
    output = output or config.output
    workers = workers or config.workers
    writer = RecordWriter(output, fmt, config) if output else None
    jobs = [(config, basis, t) for t in range(config.trials)]
    records = []
    try:
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = pool.map(_safe_trial, jobs)
                records = _collect(results, writer)
        else:
            records = _collect(map(_safe_trial, jobs), writer)
    finally:
        if writer:
            writer.close()
    return records


def _collect(results, writer):
    out = []
    for trial, recs, err in results:
        if err:
            log.warning("trial %d failed and was skipped: %s", trial, err)
            continue
        if writer:
            writer.write(recs)
        out.extend(recs)
    return out


def summarize(records) -> list:
    """Mean and standard error per (method, budget), in first-seen order."""
    records = list(records)
    if not records:
        raise ValueError("no records to summarize")
    groups = {}
    for r in records:
        groups.setdefault((r.method, r.budget), []).append(r)
    rows = []
    for (method, budget), rs in groups.items():
        a = np.array([r.mse_analytic for r in rs])
        e = np.array([r.mse_empirical for r in rs])
        rows.append({
            "method": method,
            "budget": budget,
            "count": len(rs),
            "mse_analytic_mean": float(a.mean()),
            "mse_analytic_se": _se(a),
            "mse_empirical_mean": float(e.mean()),
            "mse_empirical_se": _se(e),
            "elapsed_mean": float(np.mean([r.elapsed_seconds for r in rs])),
            "gain_evaluations_mean": float(np.mean([r.gain_evaluations for r in rs])),
        })
    return rows


def _se(values):
    if values.size < 2:
        return 0.0
    return float(values.std(ddof=1) / math.sqrt(values.size))


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow(r.csv_row())
    return buf.getvalue()


def read_records(path) -> list:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [ExperimentRecord(
        trial=int(r["trial"]), method=r["method"], budget=int(r["budget"]),
        mse_analytic=float(r["mse_analytic"]), mse_empirical=float(r["mse_empirical"]),
        elapsed_seconds=float(r["elapsed_seconds"]),
        gain_evaluations=int(r["gain_evaluations"]), seed=int(r["seed"]),
    ) for r in rows]
