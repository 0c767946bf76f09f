"""Monte Carlo orchestration: scenario presets, per-trial rows, CSV/JSON output.

A scenario is a list of *points* (fixed dimensions) crossed with an SNR
sweep and a trial range. For every (point, snr, trial) the channel is drawn
from the trial's own stream, so all schemes and all SNR values see the same
realization and the same standardized noise draws.
"""

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .arnoldi import eigenvalue_gaps
from .channel import PURPOSES, HybridConfig, TrialStreams, sample_channel
from .decomp import bcd_sd, columnwise_decompose, omp_decompose, ula_dictionary
from .errors import ConfigError, HybridSimError
from .hybridlink import noiseless_gap_bound, decompose_precoders, estimate_subspaces, mtqr
from .matlin import qr_orthonormal, svd_thin
from .metrics import optimal_rate, subspace_angles, user_rate

__all__ = [
    "ScenarioConfig",
    "TrialRow",
    "ScenarioResult",
    "PRESETS",
    "SCHEMES",
    "COLUMNS",
    "preset",
    "parse_snr_range",
    "run_scenario",
    "summarize",
]

COLUMNS = [
    "scheme", "snr_db", "trial", "rate_bits", "opt_rate_bits", "subspace_angle_rad",
    "decomp_dist", "overhead_uses", "bound_slack", "status", "channel_hash",
    "M", "N", "d", "L", "m", "rate_wf_bits", "angle_mean_rad",
]
SUMMARY_FIELDS = ["rate_bits", "opt_rate_bits", "subspace_angle_rad", "decomp_dist",
                  "rate_wf_bits", "angle_mean_rad"]
GROUP_KEYS = ["scheme", "M", "N", "d", "L", "m", "snr_db"]

# SED-family schemes share one subspace estimate and differ in the decomposition
SED_METHODS = {"SED": "bcd", "OMP-baseline": "omp", "columnwise": "columnwise",
               "optimal-decomp": "ideal"}
SCHEMES = ("SED", "MTQR", "OPT", "OMP-baseline", "columnwise", "optimal-decomp")
# decomposition-only schemes (no link, no SNR)
DECOMP_SCHEMES = ("BCD-SD", "columnwise", "OMP")


@dataclass
class ScenarioConfig:
    """Dimensions, sweep, and output options for one Monte Carlo scenario.

    ``points`` lists per-point overrides of the scalar dimensions (for
    example ``[{"L": 2}, {"L": 4}]``); an empty list means a single point.
    ``r`` defaults to ``M // 8`` and ``I`` (MTQR iterations) to ``2m/d``,
    which gives MTQR the same channel-use budget as SED.
    """

    M: int = 64
    N: int = 32
    d: int = 2
    L: int = 3
    m: int | None = None
    r: int | None = None
    I: int | None = None
    snr_db: list = field(default_factory=lambda: [0.0])
    trials: int = 100
    seed: int = 0
    schemes: tuple = ("SED", "MTQR", "OPT")
    points: list = field(default_factory=list)
    mode: str = "link"  # "link" or "decomp"
    r_atoms: int = 10
    name: str = "custom"
    emit_transcripts: bool = False
    transcript_dir: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.mode not in ("link", "decomp"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        valid = DECOMP_SCHEMES if self.mode == "decomp" else SCHEMES
        unknown = [s for s in self.schemes if s not in valid]
        if unknown:
            raise ConfigError(f"unknown schemes {unknown}; valid: {list(valid)}")
        self.snr_db = [float(s) for s in self.snr_db]
        for pt in self.expand():
            if self.mode == "link":
                self.link_config(pt, self.snr_db[0] if self.snr_db else 0.0)

    def expand(self):
        """Fully resolved dimension dicts, one per point."""
        base = {"M": self.M, "N": self.N, "d": self.d, "L": self.L,
                "m": self.m, "r": self.r, "I": self.I}
        out = []
        for override in self.points or [{}]:
            pt = {**base, **override}
            if pt["m"] is None:
                pt["m"] = 3 * pt["d"]
            if pt["r"] is None:
                pt["r"] = max(1, pt["M"] // 8)
            if pt["I"] is None:
                pt["I"] = max(1, (2 * pt["m"]) // pt["d"])
            if pt["L"] < 1:
                raise ConfigError("L must be >= 1")
            out.append(pt)
        return out

    def link_config(self, pt, snr_db):
        return HybridConfig.from_db(snr_db, M=pt["M"], N=pt["N"], r=pt["r"], d=pt["d"],
                                    m=pt["m"], seed=self.seed, trials=self.trials)


@dataclass
class TrialRow:
    scheme: str
    snr_db: float
    trial: int
    rate_bits: float = math.nan
    opt_rate_bits: float = math.nan
    subspace_angle_rad: float = math.nan
    decomp_dist: float = math.nan
    overhead_uses: int = 0
    bound_slack: float = math.nan
    status: str = "ok"
    channel_hash: str = ""
    M: int = 0
    N: int = 0
    d: int = 0
    L: int = 0
    m: int = 0
    rate_wf_bits: float = math.nan
    angle_mean_rad: float = math.nan


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    rows: list
    summary: list

    def to_csv(self):
        return _csv_text(self.rows, COLUMNS)

    def summary_csv(self):
        cols = GROUP_KEYS + ["n"] + [f"{f}_{s}" for f in SUMMARY_FIELDS for s in ("mean", "se")]
        return _csv_text(self.summary, cols)

    def to_json(self):
        cfg = asdict(self.config)
        obj = {"config": cfg, "rows": [asdict(r) for r in self.rows], "summary": self.summary,
               "metadata": {"subspace_angle": "largest principal angle, radians",
                            "rate": "uniform power allocation"}}
        return json.dumps(_nan_to_none(obj), indent=1, sort_keys=True)

    def write(self, path, fmt="csv"):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        if fmt == "json":
            path.write_text(self.to_json())
        elif fmt == "csv":
            path.write_text(self.to_csv())
            path.with_name(path.stem + "_summary.csv").write_text(self.summary_csv())
        else:
            raise ConfigError(f"unknown format {fmt!r}")
        return path


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv_text(records, columns):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for rec in records:
        get = rec.get if isinstance(rec, dict) else lambda k, rec=rec: getattr(rec, k)
        w.writerow([_fmt(get(c)) for c in columns])
    return buf.getvalue()


def _nan_to_none(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _nan_to_none(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_nan_to_none(v) for v in obj]
    return obj


# ---------------------------------------------------------------- presets

PRESETS = {
    "fig3": dict(mode="decomp", M=64, N=64, d=1, L=1, points=[{"d": d} for d in (1, 2, 3, 4)],
                 schemes=DECOMP_SCHEMES, snr_db=[], r_atoms=10),
    "fig4": dict(M=128, N=64, L=3, points=[{"d": 1}, {"d": 2}],
                 snr_db=[-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
                 schemes=("SED", "MTQR", "OPT", "optimal-decomp")),
    "fig4-desk": dict(M=128, N=64, d=2, L=3, m=6, trials=50,
                      snr_db=[-20.0, -10.0, 0.0, 10.0, 20.0],
                      schemes=("SED", "MTQR", "OPT", "optimal-decomp")),
    "fig5": dict(M=64, N=32, d=2, m=6, points=[{"L": L} for L in range(2, 9)],
                 snr_db=[-5.0], schemes=("SED", "MTQR", "OPT")),
    "fig6": dict(M=64, N=32, d=3, L=4, m=6, snr_db=[-10.0, 0.0, 10.0, 20.0, 30.0],
                 schemes=("SED", "MTQR")),
    "fig7": dict(M=16, N=8, d=2, L=4, m=6,
                 points=[{"M": M, "N": M // 2} for M in (16, 32, 64, 128, 256)],
                 snr_db=[-20.0, -10.0, 0.0, 10.0, 20.0], schemes=("SED", "OPT")),
}


def preset(name, **overrides):
    """Build the :class:`ScenarioConfig` for a named preset.

    ``overrides`` replace preset fields; scalar dimension overrides are also
    pushed into every sweep point so they are not shadowed.
    """
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; valid presets: {', '.join(PRESETS)}")
    kw = dict(PRESETS[name])
    kw.update({k: v for k, v in overrides.items() if v is not None})
    dims = {k: overrides[k] for k in ("M", "N", "d", "L", "m", "r", "I")
            if overrides.get(k) is not None}
    if dims and kw.get("points"):
        kw["points"] = [{**p, **dims} for p in kw["points"]]
    kw["name"] = name
    return ScenarioConfig(**kw)


def parse_snr_range(text):
    """``"a:b:step"`` (inclusive) or a comma list or a single value, in dB."""
    text = text.strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] == 0:
            raise ConfigError(f"SNR range must be a:b:step with step != 0, got {text!r}")
        a, b, step = parts
        n = int(math.floor((b - a) / step + 1e-9)) + 1
        if n < 1:
            raise ConfigError(f"empty SNR range {text!r}")
        return [float(np.round(a + k * step, 10)) for k in range(n)]
    return [float(p) for p in text.split(",") if p.strip()]


# ---------------------------------------------------------------- trial work

def _true_subspace(H, d):
    svd = svd_thin(H, d)
    return svd.right, svd.left


def _waterfilled_rate(H, pre, d, snr):
    G = pre.G @ np.diag(np.sqrt(pre.power_alloc))
    power = np.linalg.norm(pre.F @ G) ** 2
    if power <= 0:
        return math.nan
    G = G * np.sqrt(d / power)
    return user_rate(H, pre.F, G, pre.W, pre.U, snr)


def _link_row(scheme, pre, channel, cfg, gamma_true, opt, base):
    row = TrialRow(scheme=scheme, opt_rate_bits=opt, **base)
    row.rate_bits = user_rate(channel.H, pre.F, pre.G, pre.W, pre.U, cfg.snr)
    row.rate_wf_bits = _waterfilled_rate(channel.H, pre, cfg.d, cfg.snr)
    row.subspace_angle_rad, row.angle_mean_rad = subspace_angles(gamma_true, pre.gamma_hat)
    row.decomp_dist = float(pre.decomp_dist)
    row.overhead_uses = int(pre.uses)
    if pre.flags:
        row.status = "+".join(pre.flags)
    return row


def _error_row(scheme, exc, base, opt=math.nan):
    return TrialRow(scheme=scheme, status=f"error:{type(exc).__name__}", opt_rate_bits=opt,
                    **base)


def _bound_slack(est, H, d):
    """Eigenvalue-gap bound ``m ||H||_F^2 (3 + 1/(d ||H||_F))`` minus the
    worst matched gap between ``T_m`` and ``Q^H A Q``, BS side."""
    state = est.gamma.state
    gaps = eigenvalue_gaps(state, est.bs_oracle.operator)
    return noiseless_gap_bound(H, state.m, d) - float(np.nanmax(gaps))


def _write_transcript(cfg_s, pt, snr_db, trial, channel, est):
    out = Path(cfg_s.transcript_dir or "transcripts")
    out.mkdir(parents=True, exist_ok=True)
    obj = {
        "point": pt, "snr_db": snr_db, "trial": trial, "seed": cfg_s.seed,
        "channel": channel.to_dict(),
        "bs_state": est.gamma.state.to_dict(),
        "ms_state": est.phi.state.to_dict(),
        "bs_echoes": [r.to_dict() for r in est.bs_oracle.records],
        "ms_echoes": [r.to_dict() for r in est.ms_oracle.records],
    }
    tag = "_".join(f"{k}{pt[k]}" for k in ("M", "N", "d", "L", "m"))
    path = out / f"{cfg_s.name}_{tag}_snr{snr_db:g}_trial{trial}.json"
    path.write_text(json.dumps(_nan_to_none(obj)))


def _link_trial(cfg_s, pt, snr_db, trial):
    streams = TrialStreams(cfg_s.seed, trial)
    channel = sample_channel(pt["M"], pt["N"], pt["L"], streams("channel"))
    cfg = cfg_s.link_config(pt, snr_db)
    base = dict(snr_db=float(snr_db), trial=trial, channel_hash=channel.digest(),
                M=pt["M"], N=pt["N"], d=pt["d"], L=pt["L"], m=pt["m"])
    opt = optimal_rate(channel.H, cfg.d, cfg.snr)
    gamma_true, _ = _true_subspace(channel.H, cfg.d)
    rows = {}

    sed_family = [s for s in cfg_s.schemes if s in SED_METHODS]
    if sed_family:
        try:
            est = estimate_subspaces(channel, cfg, streams)
            slack = _bound_slack(est, channel.H, cfg.d)
            if cfg_s.emit_transcripts:
                _write_transcript(cfg_s, pt, snr_db, trial, channel, est)
        except HybridSimError as exc:
            est = exc
        for scheme in sed_family:
            if isinstance(est, Exception):
                rows[scheme] = _error_row(scheme, est, base, opt)
                continue
            try:
                pre = decompose_precoders(est.gamma.basis, est.phi.basis,
                                          est.gamma.ritz_values, cfg, SED_METHODS[scheme])
                pre.uses = est.uses
                row = _link_row(scheme, pre, channel, cfg, gamma_true, opt, base)
                row.bound_slack = slack
                rows[scheme] = row
            except (HybridSimError, np.linalg.LinAlgError) as exc:
                rows[scheme] = _error_row(scheme, exc, base, opt)

    if "MTQR" in cfg_s.schemes:
        try:
            pre = mtqr(channel, cfg, pt["I"], streams)
            rows["MTQR"] = _link_row("MTQR", pre, channel, cfg, gamma_true, opt, base)
        except (HybridSimError, np.linalg.LinAlgError) as exc:
            rows["MTQR"] = _error_row("MTQR", exc, base, opt)

    if "OPT" in cfg_s.schemes:
        rows["OPT"] = TrialRow(scheme="OPT", rate_bits=opt, opt_rate_bits=opt,
                               rate_wf_bits=opt, subspace_angle_rad=0.0, angle_mean_rad=0.0,
                               decomp_dist=0.0, **base)
    return [rows[s] for s in cfg_s.schemes]


def _decomp_trial(cfg_s, pt, trial):
    M, d = pt["M"], pt["d"]
    ss = np.random.SeedSequence(cfg_s.seed, spawn_key=(trial, PURPOSES["decomp_target"], d))
    rng = np.random.default_rng(ss)
    target = qr_orthonormal(rng.standard_normal((M, d)) + 1j * rng.standard_normal((M, d)))
    base = dict(snr_db=math.nan, trial=trial, channel_hash="", M=M, N=pt["N"], d=d,
                L=pt["L"], m=pt["m"])
    solvers = {
        "BCD-SD": lambda: bcd_sd(target),
        "columnwise": lambda: columnwise_decompose(target),
        "OMP": lambda: omp_decompose(target, ula_dictionary(M), cfg_s.r_atoms),
    }
    rows = []
    for scheme in cfg_s.schemes:
        try:
            res = solvers[scheme]()
            row = TrialRow(scheme=scheme, decomp_dist=res.objective, **base)
            if res.singular:
                row.status = "singular_update"
        except (HybridSimError, np.linalg.LinAlgError) as exc:
            row = _error_row(scheme, exc, base)
        rows.append(row)
    return rows


def _task(args):
    cfg_s, pt, snr_db, trial = args
    if cfg_s.mode == "decomp":
        return _decomp_trial(cfg_s, pt, trial)
    return _link_trial(cfg_s, pt, snr_db, trial)


def _tasks(cfg_s):
    snrs = cfg_s.snr_db if cfg_s.mode == "link" else [math.nan]
    for pt in cfg_s.expand():
        for snr in snrs:
            for trial in range(cfg_s.trials):
                yield (cfg_s, pt, snr, trial)


def summarize(rows):
    """Mean and standard error per (scheme, point, snr) over finite values."""
    groups = {}
    for row in rows:
        key = tuple(getattr(row, k) for k in GROUP_KEYS)
        # NaN never equals itself, so decomposition-only rows need a stable key
        hashable = tuple("nan" if isinstance(v, float) and math.isnan(v) else v for v in key)
        groups.setdefault(hashable, (key, []))[1].append(row)
    out = []
    for key, members in groups.values():
        rec = dict(zip(GROUP_KEYS, key))
        rec["n"] = len(members)
        for f in SUMMARY_FIELDS:
            vals = np.array([getattr(r, f) for r in members], dtype=float)
            vals = vals[np.isfinite(vals)]
            rec[f"{f}_mean"] = float(np.mean(vals)) if vals.size else math.nan
            rec[f"{f}_se"] = (float(np.std(vals, ddof=1) / np.sqrt(vals.size))
                              if vals.size > 1 else math.nan)
        out.append(rec)
    return out


def run_scenario(config):
    """Run every (point, snr, trial) task and return rows plus the summary.

    Rows come out in (point, snr, trial, scheme) order whatever the worker
    count, so output files are reproducible byte for byte.
    """
    tasks = list(_tasks(config))
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            # map preserves submission order
            chunksize = max(1, len(tasks) // (4 * config.workers))
            chunks = list(pool.map(_task, tasks, chunksize=chunksize))
    else:
        chunks = [_task(t) for t in tasks]
    rows = [row for chunk in chunks for row in chunk]
    return ScenarioResult(config=config, rows=rows, summary=summarize(rows))


def default_seed(seed=None):
    """``seed`` if given, else ``$HYBRIDSIM_SEED``, else 0."""
    if seed is not None:
        return int(seed)
    env = os.environ.get("HYBRIDSIM_SEED")
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise ConfigError(f"HYBRIDSIM_SEED must be an integer, got {env!r}") from exc


def with_overrides(config, **kw):
    return replace(config, **{k: v for k, v in kw.items() if v is not None})
