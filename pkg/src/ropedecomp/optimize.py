"""Knot-type-preserving simulated annealing of polygons at fixed vertex count.

Randomness: every chain draws from its own ``numpy.random.Philox`` stream
(a counter-based generator), spawned from ``SeedSequence(seed)``. Within an
epoch of ``n`` proposals the draws are taken in three blocks: vertex indices,
Gaussian displacements, uniforms for the Metropolis test.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels as K
from .curve import EMBED_TOL, PI_TURN_TOL, PolygonalCurve, is_embedded
from .invariants import InvariantReport, report
from .size import Kind, QuadratureConfig, SizeFunctionalSpec, _scramble, evaluate

log = logging.getLogger(__name__)

TRACE_DTYPE = np.dtype([("step", np.int64), ("value", np.float64),
                        ("temperature", np.float64), ("accepted", np.bool_)])


class Objective(enum.Enum):
    ROP = "rop"
    RHO = "rho"
    CRAD = "crad"


@dataclass(frozen=True)
class AnnealConfig:
    objective: Objective = Objective.ROP
    steps: int = 10_000
    initial_temperature: float | None = None  # None: 0.1 * objective(P0)
    cooling_rate: float = 0.995
    step_sigma: float = 0.02
    seed: int = 0
    renormalize_every: int = 0
    chains: int = 1
    snapshots: int = 200

    def __post_init__(self):
        if isinstance(self.objective, str):
            object.__setattr__(self, "objective", Objective(self.objective))
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if not 0.0 < self.cooling_rate < 1.0:
            raise ValueError("cooling_rate must lie in (0, 1)")
        if not self.step_sigma > 0:
            raise ValueError("step_sigma must be positive")
        if self.chains < 1:
            raise ValueError("chains must be at least 1")
        if self.initial_temperature is not None and not self.initial_temperature > 0:
            raise ValueError("initial_temperature must be positive")
        if self.renormalize_every < 0:
            raise ValueError("renormalize_every must be nonnegative")


def isotopy_safe_move(curve: PolygonalCurve, i: int, newpos) -> bool:
    """True if moving vertex ``i`` to ``newpos`` is a safe single-vertex isotopy.

    The moved polygon must stay embedded (no pi-turns), and neither swept
    triangle ``(v[i-1], v[i], newpos)`` nor ``(v[i], newpos, v[i+1])`` may meet
    an edge not incident to ``i``.
    """
    v = np.array(curve.vertices, dtype=float)
    newpos = np.asarray(newpos, dtype=float)
    if newpos.shape != (3,):
        raise ValueError("newpos must be a 3-vector")
    i = int(i) % curve.n
    return bool(K.move_is_safe(v, i, newpos, EMBED_TOL * K.vertex_diameter(v), PI_TURN_TOL))


class _Evaluator:
    """Length, size and thickness of raw vertex arrays, with early-exit variants."""

    def __init__(self, functional: SizeFunctionalSpec, cfg: QuadratureConfig | None):
        self.functional = functional
        self.cfg = cfg or QuadratureConfig()

    def size(self, v, thi=None):
        kind = self.functional.kind
        if kind is Kind.DIAM:
            return K.vertex_diameter(v)
        if kind is Kind.RMIN:
            return K.min_ball(np.ascontiguousarray(v[_scramble(len(v))]), 1e-12)[1]
        if kind is Kind.ARTIFICIAL_STAR:
            if thi is None:
                thi = K.thickness_value(v)
            return thi * (1.0 + math.exp(-K.curve_length(v) / thi))
        return evaluate(self.functional, PolygonalCurve(v), self.cfg)

    def triple(self, v):
        l = K.curve_length(v)
        thi = K.thickness_value(v)
        return l, self.size(v, thi), thi

    def objective(self, objective: Objective, v) -> float:
        l, d, thi = self.triple(v) if objective is not Objective.RHO else (
            K.curve_length(v), self.size(v), None)
        if objective is Objective.ROP:
            return l / thi
        if objective is Objective.RHO:
            return l / d
        return d / thi

    def bounded(self, objective: Objective, v, threshold: float):
        """``(value, len, size, thickness)``, or None once the value provably exceeds ``threshold``.

        Thickness never exceeds MinRad, so ``Len / MinRad`` (resp.
        ``D / MinRad``) lower-bounds the objective; the dcsd scan also stops
        as soon as it finds a pair that pushes the value over the threshold.
        Entries that were not needed come back as None.
        """
        l = K.curve_length(v)
        if objective is Objective.RHO:
            d = self.size(v)
            val = l / d
            return (val, l, d, None) if val <= threshold else None
        star = self.functional.kind is Kind.ARTIFICIAL_STAR
        mr = K.min_rad(v)[0]
        if objective is Objective.ROP:
            num = l
        elif star:
            num = None
        else:
            num = self.size(v)
        if num is not None:
            if num / mr > threshold:
                return None
            stop = 2.0 * num / threshold if math.isfinite(threshold) else -1.0
        else:
            stop = -1.0
        dc, *_rest, stopped = K.dcsd(v, stop)
        if stopped:
            return None
        thi = min(mr, 0.5 * dc)
        d = None
        if objective is Objective.ROP:
            val = l / thi
        elif star:
            d = thi * (1.0 + math.exp(-l / thi))
            val = d / thi
        else:
            d = num
            val = num / thi
        return (val, l, d, thi) if val <= threshold else None


@dataclass
class ChainResult:
    """Everything one annealing chain produced.

    ``moves`` holds every accepted single-vertex move as
    ``(step, vertex, new position)`` so the run can be replayed;
    ``snapshots`` holds the current state at regularly spaced steps.
    """

    seed_entropy: tuple
    initial_value: float
    best_vertices: np.ndarray
    best_value: float
    best_step: int
    trace: np.ndarray
    accepted: int
    moves_rejected_isotopy: int
    moves_rejected_prefilter: int
    frozen_epochs: int
    move_steps: np.ndarray
    move_vertices: np.ndarray
    move_positions: np.ndarray
    renormalize_steps: np.ndarray
    snapshot_steps: np.ndarray
    snapshots: np.ndarray
    min_rop: float
    min_rho: float
    min_crad: float
    max_rop: float
    final_vertices: np.ndarray


def _run_chain(v0: np.ndarray, functional: SizeFunctionalSpec, cfg: AnnealConfig,
               qcfg: QuadratureConfig | None, seed_seq: np.random.SeedSequence,
               track: bool = True) -> ChainResult:
    rng = np.random.Generator(np.random.Philox(seed_seq))
    ev = _Evaluator(functional, qcfg)
    obj = cfg.objective
    v = np.array(v0, dtype=float)
    n = len(v)

    cur = ev.objective(obj, v)
    temp = cfg.initial_temperature or 0.1 * cur
    diam = K.vertex_diameter(v)
    best, best_v, best_step = cur, v.copy(), 0
    init_value = cur

    mins = [math.inf, math.inf, math.inf, -math.inf]

    def note(vv, l, d, thi):
        if thi is None:
            thi = K.thickness_value(vv)
        if d is None:
            d = ev.size(vv, thi)
        rop, rho, crad = l / thi, l / d, d / thi
        mins[0] = min(mins[0], rop)
        mins[1] = min(mins[1], rho)
        mins[2] = min(mins[2], crad)
        mins[3] = max(mins[3], rop)

    if track:
        note(v, *ev.triple(v))

    tr_value = np.empty(cfg.steps)
    tr_temp = np.empty(cfg.steps)
    tr_acc = np.zeros(cfg.steps, dtype=np.bool_)
    move_steps, move_vertices, move_positions, renorm_steps = [], [], [], []
    snap_every = max(1, cfg.steps // max(cfg.snapshots, 1))
    snap_steps, snaps = [0], [v.copy()]
    rejected_iso = rejected_pre = accepted = frozen = 0
    warned = False

    step = 0
    while step < cfg.steps:
        idx = rng.integers(0, n, size=n)
        kicks = rng.standard_normal((n, 3))
        uni = 1.0 - rng.random(n)
        acc_epoch = 0
        for k in range(n):
            if step >= cfg.steps:
                break
            step += 1
            i = int(idx[k])
            newpos = v[i] + cfg.step_sigma * diam * kicks[k]
            ok = K.move_is_safe(v, i, newpos, EMBED_TOL * diam, PI_TURN_TOL)
            took = False
            if not ok:
                rejected_iso += 1
            else:
                threshold = cur - temp * math.log(uni[k])
                old = v[i].copy()
                v[i] = newpos
                res = ev.bounded(obj, v, threshold)
                if res is None:
                    v[i] = old
                    rejected_pre += 1
                else:
                    took = True
                    cur = res[0]
                    accepted += 1
                    acc_epoch += 1
                    diam = K.vertex_diameter(v)
                    move_steps.append(step)
                    move_vertices.append(i)
                    move_positions.append(newpos.copy())
                    if track:
                        note(v, *res[1:])
                    if cur < best:
                        best, best_v, best_step = cur, v.copy(), step
            if cfg.renormalize_every and step % cfg.renormalize_every == 0:
                v = (v - v.mean(axis=0)) / K.thickness_value(v)
                diam = K.vertex_diameter(v)
                cur = ev.objective(obj, v)
                renorm_steps.append(step)
            tr_value[step - 1] = cur
            tr_temp[step - 1] = temp
            tr_acc[step - 1] = took
            if step % snap_every == 0:
                snap_steps.append(step)
                snaps.append(v.copy())
        if acc_epoch == 0 and step % n == 0:
            frozen += 1
            if not warned:
                log.warning("frozen: no accepted move in the epoch ending at step %d", step)
                warned = True
        temp *= cfg.cooling_rate

    trace = np.zeros(cfg.steps, dtype=TRACE_DTYPE)
    trace["step"] = np.arange(1, cfg.steps + 1)
    trace["value"] = tr_value
    trace["temperature"] = tr_temp
    trace["accepted"] = tr_acc
    return ChainResult(
        seed_entropy=(seed_seq.entropy, tuple(seed_seq.spawn_key)),
        initial_value=init_value, best_vertices=best_v, best_value=best,
        best_step=best_step, trace=trace, accepted=accepted,
        moves_rejected_isotopy=rejected_iso, moves_rejected_prefilter=rejected_pre,
        frozen_epochs=frozen,
        move_steps=np.array(move_steps, dtype=np.int64),
        move_vertices=np.array(move_vertices, dtype=np.int64),
        move_positions=np.array(move_positions, dtype=float).reshape(-1, 3),
        renormalize_steps=np.array(renorm_steps, dtype=np.int64),
        snapshot_steps=np.array(snap_steps, dtype=np.int64),
        snapshots=np.array(snaps),
        min_rop=mins[0], min_rho=mins[1], min_crad=mins[2], max_rop=mins[3],
        final_vertices=v,
    )


@dataclass
class AnnealResult:
    """Best state over all chains plus the per-chain records.

    ``trace`` belongs to the chain that found ``best_curve``.
    """

    best_curve: PolygonalCurve
    best_value: float
    trace: np.ndarray
    moves_rejected_isotopy: int
    final_report: InvariantReport
    best_chain: int
    chains: list[ChainResult] = field(repr=False)
    config: AnnealConfig | None = None

    @property
    def best_trace(self) -> np.ndarray:
        """Running minimum of the objective along ``trace``."""
        return np.minimum.accumulate(self.trace["value"])


def _check_start(p0: PolygonalCurve):
    ok, witness = is_embedded(p0)
    if not ok:
        raise ValueError(f"starting polygon is not embedded (edges {witness})")


def _anneal(p0, functional, cfg, qcfg, root: np.random.SeedSequence, workers: int,
            track: bool) -> AnnealResult:
    seqs = root.spawn(cfg.chains)
    v0 = np.array(p0.vertices)
    if workers > 1 and cfg.chains > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(min(workers, cfg.chains)) as pool:
            futures = [pool.submit(_run_chain, v0, functional, cfg, qcfg, s, track)
                       for s in seqs]
            chains = [f.result() for f in futures]
    else:
        chains = [_run_chain(v0, functional, cfg, qcfg, s, track) for s in seqs]
    # ties go to the lowest chain index
    k = min(range(len(chains)), key=lambda j: (chains[j].best_value, j))
    best = chains[k]
    curve = PolygonalCurve(best.best_vertices, p0.name, p0.knot_type)
    return AnnealResult(
        best_curve=curve,
        best_value=best.best_value,
        trace=best.trace,
        moves_rejected_isotopy=best.moves_rejected_isotopy,
        final_report=report(curve, functional, qcfg),
        best_chain=k,
        chains=chains,
        config=cfg,
    )


def anneal(p0: PolygonalCurve, functional: SizeFunctionalSpec, cfg: AnnealConfig,
           qcfg: QuadratureConfig | None = None, workers: int = 1,
           track: bool = True) -> AnnealResult:
    """Minimize ``cfg.objective`` over embedded n-gons isotopic to ``p0``.

    Single-vertex Gaussian moves (scaled by the current diameter) pass the
    swept-triangle test before the Metropolis test; the temperature is
    multiplied by ``cooling_rate`` after every epoch of ``n`` proposals.
    With ``track`` the chain also records running minima of Rop, rho and
    CRad over all accepted states.
    """
    _check_start(p0)
    return _anneal(p0, functional, cfg, qcfg, np.random.SeedSequence(cfg.seed), workers, track)


def replay(p0: PolygonalCurve, chain: ChainResult):
    """Yield ``(step, vertices)`` after each accepted move of ``chain``.

    Runs with renormalization are replayed up to the first rescaling.
    """
    v = np.array(p0.vertices, dtype=float)
    stop = chain.renormalize_steps[0] if len(chain.renormalize_steps) else np.iinfo(np.int64).max
    for step, i, pos in zip(chain.move_steps, chain.move_vertices, chain.move_positions):
        if step > stop:
            return
        v[i] = pos
        yield int(step), v.copy()


@dataclass(frozen=True)
class KnotLevelEstimate:
    """Empirical minima (upper bounds for the fixed-n knot-type infima)."""

    rho_n_hat: float
    crad_n_hat: float
    rop_n_hat: float
    slack: float
    campaigns: dict


def estimate_knot_level(p0: PolygonalCurve, functional: SizeFunctionalSpec, cfg: AnnealConfig,
                        qcfg: QuadratureConfig | None = None,
                        workers: int = 1) -> KnotLevelEstimate:
    """Three campaigns (Rop, rho, CRad) from ``p0`` with independent seed streams.

    Minima are taken over every accepted state of every campaign, so the
    empirical optimized inequality ``rop_hat >= rho_hat * crad_hat`` holds.
    """
    _check_start(p0)
    roots = np.random.SeedSequence(cfg.seed).spawn(3)
    campaigns = {}
    for obj, root in zip(Objective, roots):
        campaigns[obj.value] = _anneal(p0, functional, replace(cfg, objective=obj), qcfg,
                                       root, workers, True)
    chains = [c for res in campaigns.values() for c in res.chains]
    rop = min(c.min_rop for c in chains)
    rho = min(c.min_rho for c in chains)
    crad = min(c.min_crad for c in chains)
    return KnotLevelEstimate(rho, crad, rop, rop - rho * crad, campaigns)
