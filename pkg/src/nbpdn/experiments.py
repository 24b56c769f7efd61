"""Config-driven Monte Carlo experiments with deterministic, hashable outputs.

A run resolves one JSON config (or a shipped preset) into per-trial
(instance, network, algorithm) combinations, reduces the traces to metric
series, and writes traces.csv / metrics.csv / metadata.json. Instance and
network seeds depend only on (seed, trial), never on the sweep value, so
sweep points are paired comparisons on identical draws.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .algorithms import AlgorithmConfig, DlassoParams, run_algorithm
from .instance import generate_observations, generate_signal
from .metrics import build_metric_series, support_match_matrix
from .network import build_network_matrix, generate_topology
from .solver import SolverConfig

TRACE_COLUMNS = ("trial", "algorithm", "k", "l", "err_l2", "msenr_partial",
                 "comm_count", "inner_iters")
METRIC_COLUMNS = ("algorithm", "k", "msenr_db", "ci_lo", "ci_hi", "supp_rate",
                  "comm_cum", "snr_db", "lambda", "max_iters", "trials")
SWEEP_PARAMS = ("snr_db", "lambda")


class ConfigError(ValueError):
    pass


@dataclass
class InstanceSpec:
    M: int
    N: int
    s: int
    L: int
    d: int
    snr_db: float | None  # None = noiseless
    trials: int
    seed: int
    signal_mode: str = "exact"
    epsilon_policy: str = "realized"

    def __post_init__(self):
        for name in ("M", "N", "s", "L", "d", "trials"):
            if getattr(self, name) < 1:
                raise ConfigError(f"instance.{name} must be positive")
        if self.seed is None:
            raise ConfigError("instance.seed is mandatory (no implicit entropy)")


@dataclass
class NetworkSpec:
    scheme: str = "uniform-with-self"
    self_loops: bool = True
    fresh_per_trial: bool = True


@dataclass
class ExperimentConfig:
    name: str
    instance: InstanceSpec
    algorithms: list[AlgorithmConfig]
    network: NetworkSpec = field(default_factory=NetworkSpec)
    solver: SolverConfig = field(default_factory=SolverConfig)
    sweep: dict | None = None  # {"param": "snr_db"|"lambda", "values": [...]}
    trace_stride: int = 1
    bootstrap: int = 1000

    def __post_init__(self):
        if not self.algorithms:
            raise ConfigError("at least one algorithm required")
        names = [a.kind for a in self.algorithms]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate algorithm kinds; label them via distinct configs")
        if self.sweep is not None:
            if self.sweep.get("param") not in SWEEP_PARAMS:
                raise ConfigError(f"sweep.param must be one of {SWEEP_PARAMS}")
            if not self.sweep.get("values"):
                raise ConfigError("sweep.values must be a nonempty list")
        if self.trace_stride < 1:
            raise ConfigError("trace_stride must be >= 1")

    def to_dict(self) -> dict:
        doc = dataclasses.asdict(self)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        inst = InstanceSpec(**doc.pop("instance"))
        net = NetworkSpec(**doc.pop("network", {}))
        algos = []
        for a in doc.pop("algorithms"):
            a = dict(a)
            if "lambda" in a:  # JSON configs may use the paper-facing name
                a["lam"] = a.pop("lambda")
            dl = a.pop("dlasso", None)
            algos.append(AlgorithmConfig(
                **a, dlasso=DlassoParams(**dl) if dl else DlassoParams()))
        solver = SolverConfig(**doc.pop("solver", {}))
        return cls(name=doc.pop("name"), instance=inst, network=net,
                   algorithms=algos, solver=solver, **doc)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return ExperimentConfig.from_dict(json.load(fh))


def load_preset(name: str) -> ExperimentConfig:
    ref = resources.files("nbpdn").joinpath(f"presets/{name}.json")
    if not ref.is_file():
        have = sorted(p.name[:-5] for p in resources.files("nbpdn").joinpath("presets").iterdir()
                      if p.name.endswith(".json"))
        raise ConfigError(f"unknown preset {name!r}; shipped presets: {have}")
    return ExperimentConfig.from_dict(json.loads(ref.read_text()))


# --- trial execution ---------------------------------------------------------


def _trial_seeds(seed: int, trial: int):
    ss = np.random.SeedSequence(entropy=[int(seed), int(trial)])
    return ss.spawn(4)  # signal, observations, topology, weights


def _apply_sweep(cfg: ExperimentConfig, value):
    """Return (instance_overrides, algorithm list) for one sweep point."""
    if cfg.sweep is None or value is None:
        return cfg.instance.snr_db, cfg.algorithms
    if cfg.sweep["param"] == "snr_db":
        return value, cfg.algorithms
    algos = []
    for a in cfg.algorithms:
        if a.kind in ("BPDN", "DLASSO"):
            algos.append(a)
        else:
            algos.append(dataclasses.replace(a, lam=float(value)))
    return cfg.instance.snr_db, algos


def run_trial(cfg: ExperimentConfig, sweep_value, trial: int) -> dict:
    """All algorithms on one instance/network draw; compact result arrays."""
    inst_spec = cfg.instance
    snr_db, algos = _apply_sweep(cfg, sweep_value)
    sig_ss, obs_ss, topo_ss, w_ss = _trial_seeds(inst_spec.seed, trial)
    signal = generate_signal(inst_spec.N, inst_spec.s, sig_ss,
                             mode=inst_spec.signal_mode)
    snr = math.inf if snr_db is None else float(snr_db)
    instance = generate_observations(signal, inst_spec.L, inst_spec.M, snr,
                                     obs_ss, epsilon_policy=inst_spec.epsilon_policy)
    if not cfg.network.fresh_per_trial:
        topo_ss, w_ss = _trial_seeds(inst_spec.seed, 0)[2:]
    topo = generate_topology(inst_spec.L, inst_spec.d, topo_ss,
                             self_loops=cfg.network.self_loops)
    H = build_network_matrix(topo, cfg.network.scheme, seed=w_ss)

    out = {"trial": trial, "signal_energy": signal.energy(), "algorithms": {}}
    for algo in algos:
        trace = run_algorithm(instance, H, algo, cfg.solver)
        entry = {
            "err": trace.errors,
            "comm": trace.comm_per_iter,
            "inner": trace.inner_iters,
            "lam": algo.lam if algo.kind not in ("BPDN", "DLASSO") else math.nan,
            "max_iters": algo.max_outer_iters,
        }
        if algo.kind.startswith("p"):
            entry["supp_match"] = support_match_matrix(trace, signal.values,
                                                       algo.s or inst_spec.s)
        out["algorithms"][algo.kind] = entry
    return out


def _worker(payload):
    cfg_doc, sweep_value, trial = payload
    return sweep_value, run_trial(ExperimentConfig.from_dict(cfg_doc), sweep_value, trial)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    config_hash: str
    metric_rows: list
    out_dir: Path | None

    def series(self, algorithm: str, sweep_value=None):
        """Rows for one algorithm (and sweep point, matched on snr/lambda)."""
        rows = [r for r in self.metric_rows if r["algorithm"] == algorithm]
        if sweep_value is not None and self.config.sweep is not None:
            key = "snr_db" if self.config.sweep["param"] == "snr_db" else "lambda"
            rows = [r for r in rows if _close(r[key], sweep_value)]
        return rows

    def msenr_at(self, algorithm: str, k: int, sweep_value=None) -> float:
        for r in self.series(algorithm, sweep_value):
            if r["k"] == k:
                return r["msenr_db"]
        raise KeyError(f"no metrics row for {algorithm} at k={k}")


def _close(a, b) -> bool:
    if a is None or (isinstance(a, float) and math.isnan(a)):
        return b is None
    return math.isclose(float(a), float(b), rel_tol=1e-12, abs_tol=1e-12)


def run_experiment(cfg: ExperimentConfig, out_dir=None, jobs: int = 1,
                   progress=None) -> ExperimentResult:
    """Run every (sweep point x trial x algorithm) combination.

    Output rows are sorted by (sweep point, trial, algorithm, k, l) so reruns
    with the same config and seed are byte-identical; only metadata.json
    carries a timestamp.
    """
    t0 = time.time()
    chash = cfg.config_hash()
    sweep_values = cfg.sweep["values"] if cfg.sweep else [None]
    trials = cfg.instance.trials

    jobs = max(1, int(jobs))
    results = {}
    payloads = [(cfg.to_dict(), sv, t) for sv in sweep_values for t in range(trials)]
    if jobs == 1:
        for doc, sv, t in payloads:
            results[(_sweep_key(sv), t)] = run_trial(cfg, sv, t)
            if progress:
                progress(sv, t)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for (doc, sv, t), (sv_out, res) in zip(
                    payloads, pool.map(_worker, payloads, chunksize=1)):
                results[(_sweep_key(sv), t)] = res
                if progress:
                    progress(sv, t)

    metric_rows = []
    trace_rows = []
    for si, sv in enumerate(sweep_values):
        snr_db, algos = _apply_sweep(cfg, sv)
        per_trial = [results[(_sweep_key(sv), t)] for t in range(trials)]
        energy = np.array([r["signal_energy"] for r in per_trial])
        for algo in algos:
            entries = [r["algorithms"][algo.kind] for r in per_trial]
            err = np.stack([e["err"] for e in entries])          # (T, K+1, L)
            comm = entries[0]["comm"]
            sm = (np.stack([e["supp_match"] for e in entries])
                  if "supp_match" in entries[0] else None)
            series = build_metric_series(
                algo.kind, energy, err ** 2, comm, sm,
                bootstrap=cfg.bootstrap, seed=cfg.instance.seed)
            lam_val = entries[0]["lam"]
            for k in range(err.shape[1]):
                metric_rows.append({
                    "algorithm": algo.kind,
                    "k": k,
                    "msenr_db": float(series.msenr_db[k]),
                    "ci_lo": float(series.ci_lo[k]),
                    "ci_hi": float(series.ci_hi[k]),
                    "supp_rate": (float(series.supp_rate[k])
                                  if series.supp_rate is not None else None),
                    "comm_cum": int(series.comm_cum[k]),
                    "snr_db": snr_db,
                    "lambda": None if math.isnan(lam_val) else lam_val,
                    "max_iters": entries[0]["max_iters"],
                    "trials": trials,
                })
            for t, entry in enumerate(entries):
                K1, L = entry["err"].shape
                e2 = energy[t]
                for k in range(0, K1, cfg.trace_stride):
                    for l in range(L):
                        err_l = float(entry["err"][k, l])
                        part = (10 * math.log10(e2 / err_l ** 2)
                                if err_l > 0 else math.inf)
                        trace_rows.append(
                            ((si, t, algo.kind, k, l),
                             (sv, t, algo.kind, k, l, err_l, part,
                              int(entry["comm"][k]), int(entry["inner"][k, l]))))

    trace_rows.sort(key=lambda r: r[0])
    result = ExperimentResult(cfg, chash, metric_rows,
                              Path(out_dir) if out_dir else None)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_metrics_csv(out / "metrics.csv", chash, metric_rows)
        _write_traces_csv(out / "traces.csv", chash, trace_rows,
                          sweep_param=cfg.sweep["param"] if cfg.sweep else None)
        meta = {
            "config": cfg.to_dict(),
            "config_hash": chash,
            "package_version": __version__,
            "numpy_version": np.__version__,
            "runtime_seconds": round(time.time() - t0, 3),
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        }
        (out / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    return result


def _sweep_key(sv):
    return "none" if sv is None else repr(float(sv))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def _write_metrics_csv(path: Path, chash: str, rows):
    lines = [f"# config_hash={chash}", ",".join(METRIC_COLUMNS)]
    for r in rows:
        lines.append(",".join(_fmt(r[c]) for c in METRIC_COLUMNS))
    path.write_text("\n".join(lines) + "\n")


def _write_traces_csv(path: Path, chash: str, rows, sweep_param=None):
    cols = TRACE_COLUMNS if sweep_param is None else (sweep_param,) + TRACE_COLUMNS
    lines = [f"# config_hash={chash}", ",".join(cols)]
    for _, row in rows:
        vals = row if sweep_param is not None else row[1:]
        lines.append(",".join(_fmt(v) for v in vals))
    path.write_text("\n".join(lines) + "\n")


def read_csv(path) -> list[dict]:
    """Read a CSV written by this module (hash comment + typed columns)."""
    import csv as _csv

    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    out = []
    for row in _csv.DictReader(lines):
        parsed = {}
        for key, val in row.items():
            if val == "" or val is None:
                parsed[key] = None
            else:
                try:
                    parsed[key] = int(val)
                except ValueError:
                    try:
                        parsed[key] = float(val)
                    except ValueError:
                        parsed[key] = val
        out.append(parsed)
    return out
