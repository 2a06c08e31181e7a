"""``kslab <subcommand> --config cfg.json --out DIR [--seed N]``

Exit codes: 0 success, 1 invalid input, 2 numerical failure (or a failed check
in ``verify``).  Outputs are written to a scratch directory next to ``--out``
and moved into place only on success.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import math
import os
import shutil
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import diophantine as dio
from . import distributions as dist
from . import io
from . import localization as loc
from . import potentials as pot
from . import verify as ver
from .errors import ConfigError, NumericalError, ValidationError
from .rng import check_seed
from .spectra import TridiagonalOperator, eigen

OUT_ENV = "KSLAB_OUT"  # the only environment override


# --- configs -----------------------------------------------------------------


@dataclass
class PotentialConfig:
    kind: str = "iid"  # iid | ks | limit_periodic | qp
    density: str = "uniform"  # or path to a two-column table
    scale: float = 1.0
    scale_exponent: float = 0.0  # a_n = scale (1 + |n|)^-scale_exponent
    background: float = 0.0
    functionals: dict = field(default_factory=dict)  # {"n": {"site": coefficient}}
    eps: float = 1.0
    gamma: float = 200.0
    levels: int = 4
    alpha: str = dio.GOLDEN
    omega: str = "0"
    alpha_exp: float = 0.3

    def check(self, path):
        kinds = ("iid", "ks", "limit_periodic", "qp")
        if self.kind not in kinds:
            raise ConfigError(f"kind must be one of {kinds}", f"{path}.kind")
        if self.kind == "iid" and self.functionals:
            raise ConfigError("iid potentials take no functionals", f"{path}.functionals")
        if not self.scale > 0:
            raise ConfigError("scale must be positive", f"{path}.scale")
        for n, coeffs in self.functionals.items():
            if not isinstance(coeffs, dict):
                raise ConfigError("expected an object of site -> coefficient", f"{path}.functionals.{n}")
            try:
                int(n)
                [(int(s), float(b)) for s, b in coeffs.items()]
            except (TypeError, ValueError):
                raise ConfigError("sites must be integers, coefficients numbers", f"{path}.functionals.{n}") from None


def _density(name):
    return dist.uniform() if name == "uniform" else dist.load_table(name)


class PowerScale:
    """Picklable ``n -> C (1 + |n|)^-p``."""

    def __init__(self, C, p):
        self.C, self.p = C, p

    def __call__(self, n):
        return self.C * (1.0 + np.abs(n)) ** (-self.p)

    def __repr__(self):
        return f"PowerScale({self.C!r}, {self.p!r})"


def ks_spec(cfg: PotentialConfig) -> pot.KSSpec:
    scale = cfg.scale if cfg.scale_exponent == 0 else PowerScale(cfg.scale, cfg.scale_exponent)
    fns = {int(n): pot.LinearFunctional({int(s): float(b) for s, b in c.items()}) for n, c in cfg.functionals.items()}
    return pot.KSSpec(_density(cfg.density), scale, cfg.background or None, fns)


class ConfiguredSampler:
    """Draws a window of the configured potential; picklable, so it can go to workers."""

    def __init__(self, cfg: PotentialConfig):
        self.cfg = cfg
        self._spec = None

    def _build(self):
        c = self.cfg
        if c.kind in ("iid", "ks"):
            return ks_spec(c)
        if c.kind == "limit_periodic":
            seq = pot.gen_sequences(c.eps, c.gamma, c.levels)
            return pot.lp_hier_spec(seq, _density(c.density), c.background or None)
        return None

    def __call__(self, L, seed):
        c = self.cfg
        if c.kind == "qp":
            return pot.qp_bump_potential(c.alpha, c.omega, c.eps, c.alpha_exp, L, seed, c.background or None).window
        if self._spec is None:
            self._spec = self._build()
        if isinstance(self._spec, pot.KSSpec):
            return pot.sample_ks_potential(self._spec, L, seed)
        return pot.sample_hier_potential(self._spec, L, seed)

    def __getstate__(self):
        return {"cfg": self.cfg}

    def __setstate__(self, state):
        self.cfg, self._spec = state["cfg"], None

    def __repr__(self):
        return f"ConfiguredSampler({self.cfg!r})"


def construct(cfg: PotentialConfig, L: int, seed: int) -> pot.PotentialWindow:
    if cfg.kind == "limit_periodic":
        return pot.limit_periodic_potential(cfg.eps, cfg.gamma, L, cfg.levels, seed, cfg.background or None, density=_density(cfg.density)).window
    return ConfiguredSampler(cfg)(L, seed)


@dataclass
class SequencesConfig:
    schema_version: int
    eps: float
    gamma: float
    K: int


@dataclass
class ConstructConfig:
    schema_version: int
    potential: PotentialConfig
    L: int
    seed: int


@dataclass
class BoundConfig:
    c: float
    K0: float
    lam: float
    leb: float | None = None  # defaults to 4 + 2 * bound on |V|


@dataclass
class DecayConfig:
    schema_version: int
    potential: PotentialConfig
    L: int
    trials: int
    seed: int
    m: int = 0
    workers: int = 1
    fit_range: list[int] | None = None
    bound: BoundConfig | None = None


@dataclass
class DiophantineConfig:
    schema_version: int
    alpha: str
    k_max: int
    gap_k: int = 0
    convergents_file: str | None = None


@dataclass
class VerifyConfig:
    schema_version: int
    seed: int
    checks: list[str] = field(default_factory=lambda: list(ver.CHECKS))
    options: dict = field(default_factory=dict)
    fault_injection: str | None = None

    def check(self, path):
        for i, name in enumerate(self.checks):
            if name not in ver.CHECKS:
                raise ConfigError(f"unknown check '{name}'", f"{path}.checks[{i}]" if path else f"checks[{i}]")
        for name in self.options:
            if name not in ver.CHECKS:
                raise ConfigError(f"options for unknown check '{name}'", f"options.{name}")
        if self.fault_injection not in (None, "sign"):
            raise ConfigError("only 'sign' is supported", "fault_injection")


CONFIGS = {
    "sequences": SequencesConfig,
    "construct": ConstructConfig,
    "spectrum": ConstructConfig,
    "decay": DecayConfig,
    "diophantine": DiophantineConfig,
    "verify": VerifyConfig,
}


def load_config(sub, data, seed_override=None):
    if isinstance(data, dict) and seed_override is not None and "seed" in {f for f in CONFIGS[sub].__dataclass_fields__}:
        data = {**data, "seed": seed_override}
    cfg = io.parse(CONFIGS[sub], data)
    if cfg.schema_version != io.SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {io.SCHEMA_VERSION}", "schema_version")
    if hasattr(cfg, "seed"):
        try:
            check_seed(cfg.seed)
        except ValidationError as e:
            raise ConfigError(str(e), "seed") from None
    return cfg


# --- subcommands -------------------------------------------------------------
# each returns (manifest extras, failure count, ok flag) and writes into `out`


def run_sequences(cfg: SequencesConfig, out: Path):
    seq = pot.gen_sequences(cfg.eps, cfg.gamma, cfg.K)
    io.write_csv(out / "sequences.csv", ["k", "eps_k", "n_k"], [(k, e, n) for k, (e, n) in enumerate(zip(seq.eps, seq.ns))])
    checks = {
        "eps_sum_below_eps": math.fsum(seq.eps) < cfg.eps,
        "periods_nested": all((2 * b + 1) % (2 * a + 1) == 0 for a, b in zip(seq.ns, seq.ns[1:])),
        "decay_condition": all(pot._condition(seq.eps[k], seq.ns[k - 1], cfg.gamma, k) for k in range(1, len(seq.ns))),
        "n_increasing": all(b > a for a, b in zip(seq.ns, seq.ns[1:])),
    }
    return {"checks": checks}, 0, all(checks.values())


def run_construct(cfg: ConstructConfig, out: Path):
    w = construct(cfg.potential, cfg.L, cfg.seed)
    io.write_csv(out / "potential.csv", ["n", "V"], io.window_rows(w))
    return {"construction": w.construction, "params": w.params, "bound": w.bound}, 0, True


def run_spectrum(cfg: ConstructConfig, out: Path):
    w = construct(cfg.potential, cfg.L, cfg.seed)
    e = eigen(TridiagonalOperator(np.asarray(w.values), w.lo))
    io.write_csv(out / "potential.csv", ["n", "V"], io.window_rows(w))
    io.write_csv(out / "spectrum.csv", ["k", "E"], [(k, v) for k, v in enumerate(e.eigenvalues, start=1)])
    return {"residual": e.residual, "orthogonality": e.orthogonality, "simple": e.simple, "construction": w.construction}, 0, True


def run_decay(cfg: DecayConfig, out: Path):
    sampler = ConfiguredSampler(cfg.potential)
    p = loc.rho_estimate(sampler, cfg.L, cfg.m, cfg.trials, cfg.seed, workers=cfg.workers)
    header = ["n", "mean", "stderr", "trials"]
    cols = [p.sites, p.mean, p.stderr, np.full(len(p.sites), p.trials)]
    extra = {"spec_digest": p.digest, "failures": p.failures}
    if cfg.bound is not None:
        if cfg.potential.kind not in ("iid", "ks") or cfg.m != 0:
            raise ValidationError("the theoretical bound column needs a KS potential and m = 0")
        spec = ks_spec(cfg.potential)
        B = float(np.max(np.abs(construct(cfg.potential, cfg.L, cfg.seed).values)))
        leb = cfg.bound.leb if cfg.bound.leb is not None else 4.0 + 2.0 * B
        params = loc.BoundParams(leb, spec.density.sup_bound, cfg.bound.c, cfg.bound.K0, cfg.bound.lam, spec.scale)
        header.append("theoretical_bound")
        cols.append(np.asarray(loc.theoretical_bound(params, p.sites)))
    io.write_csv(out / "decay.csv", header, zip(*cols))
    if cfg.fit_range is not None:
        if len(cfg.fit_range) != 2:
            raise ConfigError("fit_range needs two integers", "fit_range")
        f = loc.fit_rate(p, tuple(cfg.fit_range))
        extra["fit"] = asdict(f)
    return extra, p.failures, True


def run_diophantine(cfg: DiophantineConfig, out: Path):
    if cfg.convergents_file:
        c = dio.from_rows(io.read_convergents(cfg.convergents_file))
    else:
        c = dio.continued_fraction(cfg.alpha, cfg.k_max)
    io.write_csv(out / "convergents.csv", ["k", "a_k", "p_k", "q_k"], io.convergent_rows(c))
    extra = {"K": c.K, "terminated": c.terminated}
    ok = True
    if cfg.gap_k:
        reps = dio.gap_profile(c, cfg.gap_k)
        io.write_csv(
            out / "gaps.csv",
            ["k", "n_max", "min_gap", "bound", "holds"],
            [(r.k, r.n_max, float(r.min_gap), float(r.bound), r.holds) for r in reps],
        )
        ok = all(r.holds for r in reps)
    return extra, 0, ok


def run_verify(cfg: VerifyConfig, out: Path):
    if not cfg.checks:
        raise ValidationError("empty check list: nothing would be verified")
    rows = ver.run_checks(cfg.checks, cfg.options, cfg.seed, cfg.fault_injection)
    io.write_csv(
        out / "verify.csv",
        ["check", "passed", "value", "threshold", "seconds", "informational"],
        [(r.name, r.passed, r.value, r.threshold, r.seconds, r.informational) for r in rows],
    )
    failed = [r.name for r in rows if not r.passed and not r.informational]
    return {"failed": failed, "details": {r.name: r.detail for r in rows}}, len(failed), not failed


RUNNERS = {
    "sequences": run_sequences,
    "construct": run_construct,
    "spectrum": run_spectrum,
    "decay": run_decay,
    "diophantine": run_diophantine,
    "verify": run_verify,
}


def run(sub: str, config_path, out_dir, seed=None) -> int:
    t0 = _dt.datetime.now(_dt.timezone.utc)
    try:
        raw = io.load_json(config_path)
        cfg = load_config(sub, raw, seed)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    out = Path(out_dir)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}.", dir=out.parent))
    try:
        extra, failures, ok = RUNNERS[sub](cfg, tmp)
        status = 0 if ok else 2
    except (ValidationError, ConfigError) as e:
        print(f"invalid input: {e}", file=sys.stderr)
        shutil.rmtree(tmp, ignore_errors=True)
        return 1
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        shutil.rmtree(tmp, ignore_errors=True)
        return 2
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    files = sorted(p.name for p in tmp.glob("*.csv"))
    manifest = {
        "subcommand": sub,
        "config": asdict(cfg),
        "seed_override": seed,
        "version": __version__,
        "start": t0.isoformat(),
        "end": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "failures": failures,
        "status": status,
        "digests": {f: io.sha256(tmp / f) for f in files},
        **extra,
    }
    io.write_manifest(tmp / "manifest.json", manifest)
    if out.exists():
        shutil.rmtree(out)
    tmp.rename(out)
    if status:
        print(f"{sub}: checks failed, see {out / 'manifest.json'}", file=sys.stderr)
    return status


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="kslab", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=sorted(RUNNERS))
    ap.add_argument("--config", required=True)
    ap.add_argument("--out", default=None)
    ap.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    args = ap.parse_args(argv)
    out = args.out or os.environ.get(OUT_ENV) or f"kslab-{args.subcommand}"
    t = time.perf_counter()
    code = run(args.subcommand, args.config, out, args.seed)
    print(f"{args.subcommand}: exit {code} in {time.perf_counter() - t:.1f} s -> {out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
