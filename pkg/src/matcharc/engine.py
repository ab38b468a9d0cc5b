"""Monitored brickwall circuit engine.

One step = a unitary layer (two-qubit gates on sites ``t&1, t&1 + 2, ...``,
open boundaries) followed by a measurement layer (each site measured in Z
with probability p).  Each gate slot is doped -- drawn from the full
two-qubit Clifford group instead of the matchgate subgroup -- with
probability q = min(eta / n**beta, 1).

Randomness discipline: every trajectory owns six independent Philox streams
seeded via ``SeedSequence(master_seed, spawn_key=(traj_index, stream_id))``
and all random inputs (doping coins, gate ids, measurement mask, outcome
coins, initial state) are pre-drawn before the dynamics run.  Both backends
consume the same pre-drawn arrays, so at q = 0 a tableau run and an arc run
of the same (master_seed, traj_index) see the identical circuit, and results
never depend on how trajectories are distributed over worker processes.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict, replace

import multiprocessing
import numpy as np

from . import _kernels as K
from .arcs import ArcConfiguration
from .gates import N_CLIFFORD2, N_MATCHGATE2, gate_tables
from .stats import EnsembleSeries
from .tableau import StabilizerTableau

# per-trajectory stream ids
STREAM_DOPE = 0       # uniform floats deciding doped vs matchgate per slot
STREAM_GATE_C2 = 1    # full-Clifford gate ids
STREAM_GATE_CG = 2    # matchgate ids
STREAM_MEAS = 3       # measurement site mask
STREAM_COIN = 4       # outcome coins for indeterminate measurements
STREAM_INIT = 5       # initial-state draw


def doping_probability(eta: float, beta: float, n: int) -> float:
    """Per-gate probability of drawing from the full Clifford group."""
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    return min(eta / n ** beta, 1.0)


def layer_sites(t: int, n: int) -> range:
    """Gate sites of brickwall layer t (open boundaries)."""
    return range(t & 1, n - 1, 2)


@dataclass(frozen=True)
class CircuitConfig:
    """Static description of a monitored-circuit ensemble."""

    n: int
    depth: int
    p: float
    eta: float = 0.0
    beta: float = 1.0
    backend: str = "tableau"            # "tableau" | "arc"
    initial_state: str = "vacuum"       # "vacuum" | "random-gaussian"
    cuts: object = "half"               # "half" | "all" | sequence of ints
    record: object = "auto"             # "auto" | "all" | "sqrt" | int | seq

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need at least 2 qubits")
        if self.depth < 1:
            raise ValueError("depth must be positive")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if self.backend not in ("tableau", "arc"):
            raise ValueError("unknown backend %r" % (self.backend,))
        if self.initial_state not in ("vacuum", "random-gaussian"):
            raise ValueError("unknown initial state %r" % (self.initial_state,))
        if self.backend == "arc" and self.q > 0:
            raise ValueError("arc backend requires zero doping")

    @property
    def q(self) -> float:
        return doping_probability(self.eta, self.beta, self.n)

    @property
    def gates_per_layer(self) -> np.ndarray:
        return np.array([len(layer_sites(t, self.n)) for t in range(self.depth)],
                        dtype=np.int64)

    @property
    def total_gates(self) -> int:
        return int(self.gates_per_layer.sum())

    def resolved_cuts(self) -> np.ndarray:
        if isinstance(self.cuts, str):
            if self.cuts == "half":
                arr = [self.n // 2]
            elif self.cuts == "all":
                arr = list(range(1, self.n))
            else:
                raise ValueError("unknown cuts spec %r" % (self.cuts,))
        else:
            arr = list(self.cuts)
        arr = np.asarray(arr, dtype=np.int64)
        if len(arr) == 0 or np.any(arr < 1) or np.any(arr > self.n - 1):
            raise ValueError("cuts must lie in [1, n-1]")
        return arr

    def resolved_record(self) -> np.ndarray:
        """Recorded layer indices (0-based) in increasing order."""
        spec = self.record
        if spec == "auto":
            spec = "all" if self.depth <= 1024 else "sqrt"
        if isinstance(spec, str):
            if spec == "all":
                arr = np.arange(self.depth)
            elif spec == "sqrt":
                # ~256 layers spaced quadratically: dense early, sparse late
                g = np.linspace(0, np.sqrt(self.depth), 257)[1:]
                arr = np.unique(np.round(g * g).astype(np.int64)) - 1
                arr = arr[(arr >= 0) & (arr < self.depth)]
            else:
                raise ValueError("unknown record spec %r" % (spec,))
        elif isinstance(spec, (int, np.integer)):
            arr = np.arange(int(spec) - 1, self.depth, int(spec))
        else:
            arr = np.asarray(sorted(set(int(t) for t in spec)), dtype=np.int64)
            if len(arr) == 0 or arr[0] < 0 or arr[-1] >= self.depth:
                raise ValueError("record layers must lie in [0, depth)")
        return arr.astype(np.int64)

    def fingerprint(self) -> str:
        d = asdict(self)
        d["cuts"] = self.resolved_cuts().tolist()
        d["record"] = self.resolved_record().tolist()
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class TrajectoryRecord:
    """Per-trajectory observables at the recorded steps."""

    fingerprint: str
    master_seed: int
    traj_index: int
    times: np.ndarray        # 1-based step index, int32
    cuts: np.ndarray
    entropies: np.ndarray    # int32, (T, C)
    n_ng: np.ndarray         # int64, cumulative doped-gate count at each time
    digest: str              # sha256 of the outcome record (tableau) or
                             # final pairing (arc)


def _stream(master_seed: int, traj_index: int, stream_id: int):
    ss = np.random.SeedSequence(master_seed,
                                spawn_key=(traj_index, stream_id))
    return np.random.Generator(np.random.Philox(ss))


def draw_trajectory_inputs(cfg: CircuitConfig, master_seed: int,
                           traj_index: int) -> dict:
    """Pre-draw every random input of one trajectory."""
    t = gate_tables()
    G = cfg.total_gates
    doped = (_stream(master_seed, traj_index, STREAM_DOPE)
             .random(G) < cfg.q)
    c2 = _stream(master_seed, traj_index, STREAM_GATE_C2).integers(
        N_CLIFFORD2, size=G)
    cg = t.cg_ids[_stream(master_seed, traj_index, STREAM_GATE_CG).integers(
        N_MATCHGATE2, size=G)]
    gate_ids = np.where(doped, c2, cg).astype(np.int64)
    meas = (_stream(master_seed, traj_index, STREAM_MEAS)
            .random((cfg.depth, cfg.n)) < cfg.p)
    coins = _stream(master_seed, traj_index, STREAM_COIN).integers(
        2, size=(cfg.depth, cfg.n), dtype=np.uint8)
    init = None
    if cfg.initial_state == "random-gaussian":
        rng = _stream(master_seed, traj_index, STREAM_INIT)
        pairing = ArcConfiguration.random_pairing(cfg.n, rng)
        signs = 1 - 2 * rng.integers(2, size=cfg.n, dtype=np.int64)
        init = (pairing, signs)
    return {"doped": doped, "gate_ids": gate_ids, "meas": meas,
            "coins": coins, "init": init}


def _cumulative_nng(cfg, doped, rec_layers):
    per_layer = np.add.reduceat(
        doped.astype(np.int64),
        np.concatenate(([0], np.cumsum(cfg.gates_per_layer)[:-1])))
    per_layer[cfg.gates_per_layer == 0] = 0
    return np.cumsum(per_layer)[rec_layers]


def run_trajectory(cfg: CircuitConfig, master_seed: int,
                   traj_index: int) -> TrajectoryRecord:
    """Simulate one trajectory and return its recorded observables."""
    inputs = draw_trajectory_inputs(cfg, master_seed, traj_index)
    t = gate_tables()
    cuts = cfg.resolved_cuts()
    rec_layers = cfg.resolved_record()
    record = np.zeros(cfg.depth, dtype=np.bool_)
    record[rec_layers] = True
    ent = np.zeros((len(rec_layers), len(cuts)), dtype=np.int64)

    if cfg.backend == "tableau":
        if inputs["init"] is None:
            tab = StabilizerTableau(cfg.n)
        else:
            pairing, signs = inputs["init"]
            tab = StabilizerTableau.from_majorana_pairs(
                cfg.n, pairing.pairs(), signs.tolist())
        outcomes = np.full((cfg.depth, cfg.n), -1, dtype=np.int8)
        used = K.run_tableau(tab.X, tab.Z, tab.delta, cfg.n, cfg.depth,
                             inputs["gate_ids"], t.lut, inputs["meas"],
                             inputs["coins"], record, cuts, ent, outcomes)
        digest = hashlib.sha256(outcomes.tobytes()).hexdigest()
    else:
        if inputs["init"] is None:
            arc = ArcConfiguration(cfg.n)
        else:
            arc = inputs["init"][0].copy()
        perms = np.array(t.perms_s4, dtype=np.int64)
        used = K.run_arc(arc.partner, cfg.n, cfg.depth, inputs["gate_ids"],
                         t.arc_perm_id, perms, inputs["meas"], record,
                         cuts, ent)
        if np.any(ent < 0):
            raise AssertionError("odd arc crossing count during run")
        digest = hashlib.sha256(arc.partner.tobytes()).hexdigest()
    if used != cfg.total_gates:
        raise AssertionError("gate stream length mismatch")

    return TrajectoryRecord(
        fingerprint=cfg.fingerprint(),
        master_seed=master_seed,
        traj_index=traj_index,
        times=(rec_layers + 1).astype(np.int32),
        cuts=cuts.astype(np.int32),
        entropies=ent.astype(np.int32),
        n_ng=_cumulative_nng(cfg, inputs["doped"], rec_layers),
        digest=digest)


def run_coupled(cfg: CircuitConfig, master_seed: int, traj_index: int):
    """Run the same undoped trajectory on both backends.

    Returns (tableau_record, arc_record); their entropy arrays must agree
    exactly since both backends consume identical pre-drawn inputs.
    """
    if cfg.q > 0:
        raise ValueError("coupled runs require zero doping")
    rec_t = run_trajectory(replace(cfg, backend="tableau"),
                           master_seed, traj_index)
    rec_a = run_trajectory(replace(cfg, backend="arc"),
                           master_seed, traj_index)
    return rec_t, rec_a


# ---------------------------------------------------------------------------
# Ensemble runner.  Trajectories are grouped in fixed-size chunks whose
# boundaries do not depend on the worker count; chunk results are merged in
# chunk order with integer sums, so the aggregate is bit-identical for any
# number of workers.

_CHUNK = 25


def _empty_series(cfg: CircuitConfig) -> EnsembleSeries:
    rec_layers = cfg.resolved_record()
    return EnsembleSeries(cfg.fingerprint(),
                          (rec_layers + 1).astype(np.int32),
                          cfg.resolved_cuts().astype(np.int32))


def _run_chunk(args) -> EnsembleSeries:
    cfg, master_seed, start, count = args
    out = _empty_series(cfg)
    for idx in range(start, start + count):
        out.add_record(run_trajectory(cfg, master_seed, idx))
    return out


def default_workers() -> int:
    return int(os.environ.get("MATCHARC_WORKERS", "1"))


def run_ensemble(cfg: CircuitConfig, master_seed: int, shots: int,
                 workers: int | None = None,
                 chunk_size: int = _CHUNK) -> EnsembleSeries:
    """Aggregate ``shots`` trajectories indexed 0..shots-1."""
    if workers is None:
        workers = default_workers()
    chunks = [(cfg, master_seed, s, min(chunk_size, shots - s))
              for s in range(0, shots, chunk_size)]
    total = _empty_series(cfg)
    if workers <= 1:
        for job in chunks:
            total = total.merge(_run_chunk(job))
        return total
    ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        for part in pool.map(_run_chunk, chunks):
            total = total.merge(part)
    return total
