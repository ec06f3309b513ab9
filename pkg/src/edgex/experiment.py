"""Config-driven experiments: build an intensity, sample a schedule, run checks, emit files."""
from __future__ import annotations

import copy
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import analytics as an
from . import graphlimit as gl
from . import intensity as it
from . import sampler as sp
from .errors import SchemaError
from .rng import stream

SCHEMA_VERSION = 1
MODES = ("fixed_m", "poisson_t", "presence_t")
CHECKS = {
    "ratio_convergence": "analytics.convergence_ratio_curve",
    "powerlaw_band": "analytics.powerlaw_band_check",
    "density_class": "analytics.density_classify",
    "normality": "analytics.normality_check",
    "vertex_variance_bound": "analytics.vertex_count_variance_bound",
    "graphon_distance": "graphlimit.dcut_upper",
}
PROFILES = {
    "unit": lambda i, j: np.ones(np.shape(i)),
    "inverse_product": lambda i, j: 1.0 / (np.asarray(i, float) * j),
    "geometric": lambda i, j: 2.0 ** -np.maximum(i, j).astype(float),
}


@dataclass
class ExperimentConfig:
    intensity: dict
    mode: str
    schedule: list
    replicates: int = 1
    seed: int = 0
    checks: list = field(default_factory=list)
    output: str = "out"
    schema_version: int = SCHEMA_VERSION

    def validate(self):
        if self.schema_version != SCHEMA_VERSION:
            raise SchemaError("schema_version", f"unsupported version {self.schema_version}")
        if self.mode not in MODES:
            raise SchemaError("mode", f"must be one of {MODES}")
        sched = self.schedule
        if not isinstance(sched, list) or not sched:
            raise SchemaError("schedule", "must be a nonempty list")
        if any(not isinstance(x, (int, float)) or x < 0 for x in sched):
            raise SchemaError("schedule", "entries must be nonnegative numbers")
        if any(b <= a for a, b in zip(sched, sched[1:])):
            raise SchemaError("schedule", "must be strictly increasing")
        if self.mode == "fixed_m" and any(int(x) != x for x in sched):
            raise SchemaError("schedule", "fixed_m schedules hold integer edge counts")
        if not isinstance(self.replicates, int) or self.replicates < 1:
            raise SchemaError("replicates", "must be an integer >= 1")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise SchemaError("seed", "must be a 64-bit unsigned integer")
        for k, chk in enumerate(self.checks):
            if not isinstance(chk, dict) or chk.get("name") not in CHECKS:
                raise SchemaError(f"checks[{k}].name", f"must be one of {sorted(CHECKS)}")
        _validate_intensity(self.intensity)
        return self

    def to_dict(self):
        return {"schema_version": self.schema_version, "intensity": copy.deepcopy(self.intensity),
                "mode": self.mode, "schedule": list(self.schedule), "replicates": self.replicates,
                "seed": self.seed, "checks": copy.deepcopy(self.checks), "output": self.output}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise SchemaError("$", "config must be a JSON object")
        known = {"schema_version", "intensity", "mode", "schedule", "replicates", "seed", "checks", "output"}
        extra = set(d) - known
        if extra:
            raise SchemaError(sorted(extra)[0], "unknown field")
        for key in ("intensity", "mode", "schedule"):
            if key not in d:
                raise SchemaError(key, "required field missing")
        cfg = cls(**{k: copy.deepcopy(v) for k, v in d.items()})
        return cfg.validate()

    @classmethod
    def from_json(cls, text):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError("$", f"invalid JSON: {exc}") from exc
        return cls.from_dict(d)


def _validate_intensity(spec):
    if not isinstance(spec, dict) or "kind" not in spec:
        raise SchemaError("intensity.kind", "required field missing")
    kind = spec["kind"]
    try:
        if kind == "rank1":
            if "weights" not in spec:
                raise SchemaError("intensity.weights", "required field missing")
            it.WeightFamilySpec.from_dict(spec["weights"]).validate()
            if spec.get("tail", "drop") not in ("drop", "blips"):
                raise SchemaError("intensity.tail", "must be 'drop' or 'blips'")
        elif kind == "gem":
            for key in ("alpha", "theta", "mass_epsilon"):
                if key not in spec:
                    raise SchemaError(f"intensity.{key}", "required field missing")
        elif kind == "dirichlet":
            for key in ("N", "alpha"):
                if key not in spec:
                    raise SchemaError(f"intensity.{key}", "required field missing")
        elif kind == "factorial":
            if int(spec.get("n_max", 0)) < 2:
                raise SchemaError("intensity.n_max", "must be >= 2")
        elif kind == "band":
            if spec.get("profile", "unit") not in PROFILES:
                raise SchemaError("intensity.profile", f"must be one of {sorted(PROFILES)}")
        elif kind == "chameleon":
            if int(spec.get("k_max", 0)) < 1:
                raise SchemaError("intensity.k_max", "must be >= 1")
        elif kind == "explicit":
            if not spec.get("entries"):
                raise SchemaError("intensity.entries", "must list [i, j, value] triples")
        else:
            raise SchemaError("intensity.kind", f"unknown kind {kind!r}")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError("intensity", str(exc)) from exc


def build_intensity(spec, seed=0):
    """Intensity object (and chameleon shells, if any) described by a config block."""
    kind = spec["kind"]
    rng = stream(seed, 0)
    if kind == "rank1":
        ws = it.weights_family(it.WeightFamilySpec.from_dict(spec["weights"]))
        return it.build_rank1(ws, bool(spec.get("loops", False)), spec.get("tail", "drop"))
    if kind == "gem":
        ws = it.stick_break_gem(spec["alpha"], spec["theta"], spec["mass_epsilon"], rng)
        return it.build_rank1(ws, bool(spec.get("loops", False)))
    if kind == "dirichlet":
        ws = it.polya_dirichlet_weights(spec["N"], spec["alpha"], rng)
        return it.build_rank1(ws, bool(spec.get("loops", True)))
    if kind == "factorial":
        return it.factorial_intensity(int(spec["n_max"]))
    if kind == "band":
        n_max = spec.get("n_max")
        return it.band_intensity(int(spec.get("d", 2)), n_max, PROFILES[spec.get("profile", "unit")],
                                 float(spec.get("mass_budget", 1e-6)))
    if kind == "chameleon":
        return it.chameleon_intensity(int(spec["k_max"]))[0]
    entries = {(int(i), int(j)): float(v) for i, j, v in spec["entries"]}
    return it.IntensityMatrix.from_dict(entries)


def _sample(mu, mode, x, rng):
    if mode == "presence_t":
        return sp.sample_presence(mu, x, rng)
    if mode == "poisson_t":
        return sp.simplify(sp.sample_poisson_multigraph(mu, x, rng))
    return sp.simplify(sp.sample_iid_multigraph(mu, int(x), rng))


def sample_one(config: ExperimentConfig, x=None, replicate=0):
    mu = build_intensity(config.intensity, config.seed)
    x = config.schedule[-1] if x is None else x
    rng = stream(config.seed, 1, replicate, 0)
    if config.mode == "presence_t":
        return mu, sp.sample_presence(mu, x, rng)
    if config.mode == "poisson_t":
        return mu, sp.sample_poisson_multigraph(mu, x, rng)
    return mu, sp.sample_iid_multigraph(mu, int(x), rng)


@dataclass
class ExperimentReport:
    config: dict
    verdicts: list
    curves: dict
    tails: list
    distances: list
    version: str
    seed: int
    wall_clock: float = 0.0

    @property
    def passed(self):
        return all(v["pass"] is not False for v in self.verdicts)

    def to_dict(self, include_timing=False):
        d = {"config": self.config, "verdicts": self.verdicts, "curves": self.curves,
             "tails": self.tails, "distances": self.distances, "version": self.version, "seed": self.seed}
        if include_timing:
            d["wall_clock"] = self.wall_clock
        return d


def run_experiment(config: ExperimentConfig, threads=1) -> ExperimentReport:
    """Run the schedule, then every configured check, deterministically.

    Replicate r at grid index k always uses the stream (seed, 1, r, k), so
    results do not depend on ``threads``.
    """
    config.validate()
    start = time.perf_counter()
    mu = build_intensity(config.intensity, config.seed)
    grid = [float(x) for x in config.schedule]
    # time of each grid point, for closed forms
    t_of = [x / mu.total_mass() if config.mode == "fixed_m" else x for x in grid]

    def job(args):
        k, r = args
        return _sample(mu, config.mode, grid[k], stream(config.seed, 1, r, k))

    tasks = [(k, r) for k in range(len(grid)) for r in range(config.replicates)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            graphs = list(pool.map(job, tasks))
    else:
        graphs = [job(a) for a in tasks]
    by_point = [graphs[k * config.replicates:(k + 1) * config.replicates] for k in range(len(grid))]

    curve = _curve(mu, t_of, by_point)
    tails = []
    for k, gs in enumerate(by_point):
        if gs[0].e:
            tl = an.degree_tail(gs[0], t=t_of[k])
            tails.append({"t": t_of[k], "k": tl.k_grid.tolist(), "pi_ge_k": tl.pi_ge_k.tolist(),
                          "v_total": tl.v_total})
    verdicts, distances = [], []
    for chk in config.checks:
        v, dist = _run_check(chk, mu, t_of, by_point, curve, config)
        verdicts.append(v.to_dict())
        if dist is not None:
            distances.append(dist)
    rep = ExperimentReport(config.to_dict(), verdicts, {"growth": curve.to_dict()}, tails, distances,
                           __version__, config.seed)
    rep.wall_clock = time.perf_counter() - start
    return rep


def _curve(mu, t_of, by_point):
    cols = {k: [] for k in ("vm", "vs", "em", "es", "ve", "ee", "vr", "er")}
    for t, gs in zip(t_of, by_point):
        v = np.array([g.v for g in gs], dtype=float)
        e = np.array([g.e for g in gs], dtype=float)
        se = (lambda x: float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0)
        ve, ee = an.expected_vertices(mu, t), an.expected_edges(mu, t)
        cols["vm"].append(float(v.mean()))
        cols["vs"].append(se(v))
        cols["em"].append(float(e.mean()))
        cols["es"].append(se(e))
        cols["ve"].append(ve)
        cols["ee"].append(ee)
        cols["vr"].append(float(np.mean(v / ve)) if ve else math.nan)
        cols["er"].append(float(np.mean(e / ee)) if ee else math.nan)
    a = {k: np.asarray(v) for k, v in cols.items()}
    return an.GrowthCurve(np.asarray(t_of), a["ve"], a["ee"], a["vm"], a["vs"], a["em"], a["es"],
                          np.full(len(t_of), len(by_point[0])), a["vr"], a["er"])


def _run_check(chk, mu, t_of, by_point, curve, config):
    name = chk["name"]
    thr = chk.get("threshold")
    rng = stream(config.seed, 2, sorted(CHECKS).index(name))
    if name == "ratio_convergence":
        thr = 0.1 if thr is None else thr
        dev = max(abs(curve.v_ratio_mean[-1] - 1), abs(curve.e_ratio_mean[-1] - 1))
        return an.Verdict(name, {"t": t_of[-1]}, float(dev), thr, bool(dev <= thr)), None
    if name == "powerlaw_band":
        tails = [an.degree_tail(gs[0], t=t) for t, gs in zip(t_of, by_point) if gs[0].e]
        return an.powerlaw_band_check(tails, chk.get("c_frac", 0.05), 50.0 if thr is None else thr), None
    if name == "density_class":
        got = an.density_classify(curve, drift_tol=chk.get("drift_tol", 0.1))
        want = chk.get("expect")
        ok = None if want is None else got == want
        return an.Verdict(name, {"expect": want}, None, None, ok, details={"class": got}), None
    if name == "normality":
        reps = int(chk.get("replicates", 500))
        return an.normality_check(mu, t_of[-1], reps, rng, 0.08 if thr is None else thr), None
    if name == "vertex_variance_bound":
        v = np.array([g.v for g in by_point[-1]], dtype=float)
        var = float(v.var(ddof=1)) if v.size > 1 else 0.0
        bound = an.vertex_count_variance_bound(mu, t_of[-1])
        return an.Verdict(name, {"t": t_of[-1]}, var, bound, bool(var <= bound)), None
    # graphon_distance
    ref = chk.get("graphon", "half_graphon")
    w2 = gl.AnalyticGraphon.half() if ref == "half_graphon" else gl.AnalyticGraphon("constant", c=1.0)
    g = by_point[-1][0]
    res = gl.dcut_upper(gl.empirical_graphon(g), w2, rng=rng)
    thr = 0.25 if thr is None else thr
    dist = {"pair": ["G", ref], "alignment": res["alignment"], "l1_bound": res["l1_bound"],
            "cutnorm_lb": res["cutnorm_lb"], "dcut_upper": res["dcut_upper"]}
    return an.Verdict(name, {"graphon": ref}, res["dcut_upper"], thr, bool(res["dcut_upper"] <= thr)), dist


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def emit_report(report: ExperimentReport, fmt, out_dir):
    """Write ``report.json`` or a CSV bundle; returns the list of written paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if fmt == "json":
        path = os.path.join(out_dir, "report.json")
        _write(path, json.dumps(report.to_dict(), indent=2, sort_keys=True, default=an._json_default) + "\n")
        written.append(path)
    elif fmt == "csv-bundle":
        g = report.curves["growth"]
        curve = an.GrowthCurve(*(np.asarray(g[k]) for k in (
            "grid", "v_expected", "e_expected", "v_observed_mean", "v_observed_se",
            "e_observed_mean", "e_observed_se", "replicate_count")))
        path = os.path.join(out_dir, "growth.csv")
        _write(path, curve.to_csv())
        written.append(path)
        for k, tl in enumerate(report.tails):
            path = os.path.join(out_dir, f"tail_{k}.csv")
            dt = an.DegreeTail(np.asarray(tl["k"]), np.asarray(tl["pi_ge_k"]), tl["v_total"], tl["t"])
            _write(path, dt.to_csv())
            written.append(path)
        path = os.path.join(out_dir, "verdicts.json")
        _write(path, json.dumps(report.verdicts, indent=2, sort_keys=True, default=an._json_default) + "\n")
        written.append(path)
        if report.distances:
            path = os.path.join(out_dir, "distances.json")
            _write(path, json.dumps(report.distances, indent=2, sort_keys=True) + "\n")
            written.append(path)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    # timing varies run to run, so it lives beside the deterministic files
    path = os.path.join(out_dir, "timing.json")
    _write(path, json.dumps({"wall_clock": report.wall_clock}) + "\n")
    written.append(path)
    return written
