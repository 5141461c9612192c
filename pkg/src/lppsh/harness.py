"""Command line entry point, configuration and run manifests.

Every subcommand writes into its output directory:

* ``report.json``  the test report (or parameter table),
* one or more raw CSV files,
* ``manifest.json`` with the command, config snapshot, seed, stream map,
  version, timestamps and a sha256 digest of every CSV (lines sorted first,
  so row order never changes a digest).

Exit status: 0 when every check passes, 1 on a statistical failure, 2 on a
usage or configuration error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import shutil
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import ejs_rains as E
from . import scaling as S
from . import suites
from .processes import DomainError, ParameterError
from .queues import burke_bernoulli_test, burke_poisson_test
from .rng import MODULE_CODES, RngStream, stream_id
from .stationary import MODELS, ModelSpec, height, sample_boundary, sample_environment
from .stats import ALPHA, TestReport

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- configuration

@dataclass
class ModelConfig:
    name: str
    rho: float = 1.0
    p: float = 0.3
    gamma: float = 1.0
    delta: float = 0.25

    @property
    def spec(self) -> ModelSpec:
        return ModelSpec(self.name, p=self.p, gamma=self.gamma, delta=self.delta)


@dataclass
class SuiteConfig:
    seed: int = 0
    outdir: str = "lppsh-out"
    alpha: float = ALPHA
    w_factor: float = 4.0
    replicas: int | None = None
    models: list = field(default_factory=list)
    streams: dict = field(default_factory=dict)


_TOP_KEYS = {"seed", "outdir", "alpha", "w_factor", "replicas", "models", "streams"}
_MODEL_KEYS = {"name", "rho", "p", "gamma", "delta"}


def validate_model(mc: ModelConfig) -> None:
    if mc.name not in MODELS:
        raise ConfigError(f"unknown model {mc.name!r}; choose from {', '.join(MODELS)}")
    if not mc.rho > 0:
        raise ConfigError(f"{mc.name}: rho must be positive")
    if mc.name == "sj":
        if not 0 < mc.p < 1:
            raise ConfigError("sj: p must lie in (0, 1)")
        if not mc.rho > mc.p / (1 - mc.p):
            raise ConfigError(f"sj: rho must exceed p/(1-p) = {mc.p / (1 - mc.p):.6g} "
                              "for convergence to the directed landscape")
    if mc.name == "geometric" and not mc.gamma > 0:
        raise ConfigError("geometric: gamma must be positive")
    if mc.name == "brownian" and not mc.delta > 0:
        raise ConfigError("brownian: delta must be positive")


def parse_config(data: dict) -> SuiteConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    extra = sorted(set(data) - _TOP_KEYS)
    if extra:
        raise ConfigError(f"unknown config keys: {', '.join(extra)}")
    models = []
    for i, m in enumerate(data.get("models", [])):
        if isinstance(m, str):
            m = {"name": m}
        bad = sorted(set(m) - _MODEL_KEYS) if isinstance(m, dict) else ["<not an object>"]
        if bad or "name" not in m:
            raise ConfigError(f"models[{i}]: offending keys {', '.join(bad) or 'name (missing)'}")
        mc = ModelConfig(**m)
        validate_model(mc)
        models.append(mc)
    streams = data.get("streams", {})
    if not isinstance(streams, dict):
        raise ConfigError("streams must map labels to integer ids")
    ids = list(streams.values())
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise ConfigError(f"duplicate stream ids: {dup}")
    cfg = SuiteConfig(seed=int(data.get("seed", 0)), outdir=str(data.get("outdir", "lppsh-out")),
                      alpha=float(data.get("alpha", ALPHA)), w_factor=float(data.get("w_factor", 4.0)),
                      replicas=data.get("replicas"), models=models, streams=dict(streams))
    if not 0 < cfg.alpha < 1:
        raise ConfigError("alpha must lie in (0, 1)")
    if cfg.seed < 0:
        raise ConfigError("seed must be non-negative")
    return cfg


def load_config(path) -> SuiteConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(data)


# ---------------------------------------------------------------- plot data

def _svg(xs, ys, title: str) -> str:
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    w, h, pad = 480, 320, 40
    if xs.size == 0:
        pts = ""
    else:
        xr = (xs.min(), xs.max() if xs.max() > xs.min() else xs.min() + 1)
        yr = (ys.min(), ys.max() if ys.max() > ys.min() else ys.min() + 1)
        px = pad + (xs - xr[0]) / (xr[1] - xr[0]) * (w - 2 * pad)
        py = h - pad - (ys - yr[0]) / (yr[1] - yr[0]) * (h - 2 * pad)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">'
            f'<text x="{pad}" y="20" font-size="12">{title}</text>'
            f'<rect x="{pad}" y="{pad}" width="{w - 2 * pad}" height="{h - 2 * pad}" fill="none" stroke="#888"/>'
            f'<polyline fill="none" stroke="#1f77b4" points="{pts}"/></svg>\n')


def emit_plotdata(obj, stem, svg: bool = False) -> list:
    """Tidy CSV (and optionally an SVG line plot) for a table, profile or report."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    xs, ys = [], []
    if isinstance(obj, E.TailTable):
        text = obj.to_csv()
        xs, ys = [r.M for r in obj.rows], [r.p_hat for r in obj.rows]
    elif isinstance(obj, S.RescaledProfile):
        vals = np.atleast_2d(obj.value)
        x = np.atleast_2d(obj.x)
        lines = ["replica,x,value"]
        for r in range(vals.shape[0]):
            for xv, v in zip(x[min(r, x.shape[0] - 1)], vals[r]):
                lines.append(f"{r},{float(xv)!r},{float(v)!r}")
        text = "\n".join(lines) + "\n"
        if vals.size:
            xs, ys = x[0], vals[0]
    elif isinstance(obj, TestReport) or obj is None:
        lines = ["name,statistic,p_value,passed"]
        for s in (obj.sub_tests if obj is not None else []):
            lines.append(f"{s.name},{float(s.statistic)!r},{float(s.p_value)!r},{bool(s.passed)}")
        text = "\n".join(lines) + "\n"
    else:
        raise TypeError(f"cannot emit plot data for {type(obj).__name__}")
    out = [stem.with_suffix(".csv")]
    out[0].write_text(text)
    if svg:
        out.append(stem.with_suffix(".svg"))
        out[1].write_text(_svg(xs, ys, stem.name))
    return out


# ---------------------------------------------------------------- manifest

def digest(path) -> str:
    lines = sorted(Path(path).read_text().splitlines())
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()


def write_outputs(outdir: Path, command: str, argv, cfg: SuiteConfig, streams: dict,
                  report: dict, files: list, started: float) -> None:
    (outdir / "report.json").write_text(json.dumps(report, indent=2, default=_jsonable) + "\n")
    manifest = {
        "command": command,
        "argv": list(argv),
        "config": asdict(cfg),
        "seed": cfg.seed,
        "streams": streams,
        "stream_schedule": {k: f"({v} << 32) | replica" for k, v in MODULE_CODES.items()},
        "version": __version__,
        "started": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(started)),
        "finished": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "digests": {Path(f).name: digest(f) for f in files if str(f).endswith(".csv")},
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, default=_jsonable) + "\n")


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v) if np.isfinite(v) else str(float(v))
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.bool_):
        return bool(v)
    return str(v)


# ---------------------------------------------------------------- commands

def _model(args) -> ModelConfig:
    if args.model is None:
        raise ConfigError("--model is required")
    mc = ModelConfig(args.model, rho=getattr(args, "rho", 1.0), p=args.p, gamma=args.gamma, delta=args.delta)
    validate_model(mc)
    return mc


def cmd_params(args, cfg, out):
    mc = _model(args)
    prm = S.params_for(mc.spec, mc.rho)
    rep = {"model": prm.model, "rho": prm.rho, "chi": prm.chi, "chi3": prm.chi ** 3, "alpha": prm.alpha,
           "beta": prm.beta, "tau": prm.tau, "residuals": S.residuals(prm).tolist(), "pass": True}
    path = out / "params.csv"
    path.write_text("key,value\n" + "".join(f"{k},{rep[k]!r}\n" for k in
                                            ("chi", "chi3", "alpha", "beta", "tau")))
    return rep, [path], True, {}


def cmd_sample(args, cfg, out):
    mc = _model(args)
    spec = mc.spec
    lo, hi = args.window
    st = RngStream(cfg.seed, stream_id("harness", 100))
    f = sample_boundary(spec, args.param, (lo, hi), st)
    env = sample_environment(spec, (lo, hi), args.level, st)
    ys = np.linspace(max(lo, 0.0), hi, args.points)
    if spec.step:
        ys = np.unique(np.floor(ys / spec.step) * spec.step)
    hp = height(env, f, args.level, ys)
    files = [out / "height.csv", out / "boundary.csv"]
    files[0].write_text(hp.to_csv())
    if f.points is not None:
        files[1].write_text(f.points.to_csv())
    else:
        files[1].write_text("x,value\n" + "".join(f"{x!r},{v!r}\n" for x, v in zip(f.grid, f.values)))
    rep = {"model": spec.name, "param": args.param, "window": [lo, hi], "level": args.level,
           "any_boundary_active": bool(hp.any_boundary_active), "pass": True}
    return rep, files, True, {"sample": stream_id("harness", 100)}


def _report_result(rep: TestReport, out: Path, name: str, svg=False):
    files = emit_plotdata(rep, out / name, svg)
    return rep.as_dict(), files, rep.passed


def cmd_burke(args, cfg, out):
    seeds = [cfg.seed + k for k in range(args.seeds)]
    if args.kind == "poisson":
        rep = burke_poisson_test(args.lam, args.mu, replicas=args.replicas, seeds=seeds, alpha=cfg.alpha)
    else:
        rep = burke_bernoulli_test(args.p, args.u, replicas=args.replicas, seeds=seeds, alpha=cfg.alpha)
    return (*_report_result(rep, out, "subtests"), {"queues": MODULE_CODES["queues"]})


def cmd_pitman(args, cfg, out):
    rep = suites.pitman_suite(args.samples, cfg.seed, args.lam, args.mu)
    return (*_report_result(rep, out, "subtests"), {"harness": MODULE_CODES["harness"]})


def cmd_fluid(args, cfg, out):
    rep = suites.fluid_suite(args.samples, cfg.seed, args.t)
    return (*_report_result(rep, out, "subtests"), {"harness": MODULE_CODES["harness"]})


def _size(args) -> dict:
    if args.model == "hammersley":
        return {"t": args.t, "y": args.y}
    if args.model == "lines":
        return {"n": args.n, "y": args.y}
    return {"n": args.n, "m": args.m, "p": args.p}


def cmd_mgf(args, cfg, out):
    rep = E.mgf_verify(args.model, args.a, args.b, _size(args), args.replicas, cfg.seed)
    return (*_report_result(rep, out, "subtests"), {"ejs_rains": MODULE_CODES["ejs_rains"]})


def cmd_taylor(args, cfg, out):
    rep = E.taylor_bound_check(args.model, _size(args), eps=args.eps)
    return (*_report_result(rep, out, "subtests"), {})


def cmd_exit_tails(args, cfg, out):
    mc = _model(args)
    tb = E.exit_tail_estimate(mc.spec, mc.rho, args.mu_drift, args.t, args.N, args.M, args.replicas,
                              cfg.seed, w_factor=cfg.w_factor)
    rep = tb.report()
    files = emit_plotdata(tb, out / "tails", args.svg)
    return rep.as_dict(), files, rep.passed, {"ejs_rains": MODULE_CODES["ejs_rains"]}


def cmd_invariance(args, cfg, out):
    mc = _model(args)
    mu = args.mu_drift if len(args.mu_drift) > 1 else args.mu_drift[0]
    rep = S.invariance_test(mc.spec, mc.rho, mu, args.N, args.t, args.x, args.replicas,
                            [cfg.seed + k for k in range(args.seeds)], cfg.w_factor, cfg.alpha)
    return (*_report_result(rep, out, "subtests"), {"scaling": MODULE_CODES["scaling"]})


def cmd_marginal(args, cfg, out):
    mc = _model(args)
    rep = S.marginal_test(mc.spec, mc.rho, args.mu_drift, args.N, args.x, args.replicas, cfg.seed,
                          args.rel_tol, keep=True)
    samples = rep.extra.pop("samples")
    files = []
    for k, (mu, prof) in enumerate(sorted(samples.items())):
        files += emit_plotdata(prof, out / f"samples_mu{k}", False)
    d, f2, ok = _report_result(rep, out, "subtests")
    return d, files + f2, ok, {"scaling": MODULE_CODES["scaling"]}


def cmd_oracle(args, cfg, out):
    reps = [suites.oracle_suite(args.samples, cfg.seed), suites.evolution_suite(args.samples, cfg.seed),
            suites.coupling_suite(args.samples, cfg.seed)]
    subs = [s for r in reps for s in r.sub_tests]
    rep = TestReport("oracle_suite", {"samples": args.samples}, subs, [cfg.seed])
    return (*_report_result(rep, out, "subtests"), {"harness": MODULE_CODES["harness"]})


# ---------------------------------------------------------------- parser

def _floats(s):
    return [float(v) for v in s.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="master seed (env LPPSH_SEED)")
    common.add_argument("--outdir", help="output directory (env LPPSH_OUTDIR)")
    common.add_argument("--config", help="JSON suite config")
    common.add_argument("--alpha", type=float, help="significance level")
    common.add_argument("--svg", action="store_true", help="also write SVG line plots")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--model", choices=MODELS, help="defaults to every model in --config")
    model.add_argument("--rho", type=float, default=1.0)
    model.add_argument("--p", type=float, default=0.3, help="SJ horizontal-edge probability")
    model.add_argument("--gamma", type=float, default=1.0, help="geometric weight mean")
    model.add_argument("--delta", type=float, default=0.25, help="BLPP grid pitch")

    ap = argparse.ArgumentParser(prog="lppsh", description="Stationary LPP verification harness")
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("params", parents=[common, model], help="scaling parameters").set_defaults(fn=cmd_params)

    sp = sub.add_parser("sample", parents=[common, model], help="sample a boundary and its evolved height")
    sp.add_argument("--param", type=float, required=True, help="boundary parameter a")
    sp.add_argument("--window", type=float, nargs=2, default=(-50.0, 50.0))
    sp.add_argument("--level", type=float, default=10)
    sp.add_argument("--points", type=int, default=51)
    sp.set_defaults(fn=cmd_sample)

    sp = sub.add_parser("verify-burke", parents=[common], help="Burke theorems for the two queues")
    sp.add_argument("--kind", choices=("poisson", "bernoulli"), default="poisson")
    sp.add_argument("--lambda", dest="lam", type=float, default=1.0)
    sp.add_argument("--mu", type=float, default=2.0)
    sp.add_argument("--p", type=float, default=0.3)
    sp.add_argument("--u", type=float, default=0.6)
    sp.add_argument("--replicas", type=int, default=10_000)
    sp.add_argument("--seeds", type=int, default=20)
    sp.set_defaults(fn=cmd_burke)

    sp = sub.add_parser("verify-pitman", parents=[common], help="Pitman 2M - X identity")
    sp.add_argument("--lambda", dest="lam", type=float, default=1.0)
    sp.add_argument("--mu", type=float, default=2.0)
    sp.add_argument("--samples", type=int, default=1000)
    sp.set_defaults(fn=cmd_pitman)

    sp = sub.add_parser("verify-fluid", parents=[common], help="Hammersley fluid identity h = nu + eta")
    sp.add_argument("--t", type=float, default=5.0)
    sp.add_argument("--samples", type=int, default=1000)
    sp.set_defaults(fn=cmd_fluid)

    size = argparse.ArgumentParser(add_help=False)
    size.add_argument("--model", required=True, choices=("hammersley", "lines", "sj"))
    size.add_argument("--t", type=float, default=5.0)
    size.add_argument("--y", type=float, default=5.0)
    size.add_argument("--n", type=int, default=2)
    size.add_argument("--m", type=float, default=6)
    size.add_argument("--p", type=float, default=0.3)

    sp = sub.add_parser("verify-mgf", parents=[common, size], help="EJS-Rains moment generating function")
    sp.add_argument("--a", type=float, required=True)
    sp.add_argument("--b", type=float, required=True)
    sp.add_argument("--replicas", type=int, default=100_000)
    sp.set_defaults(fn=cmd_mgf)

    sp = sub.add_parser("verify-taylor", parents=[common, size], help="Taylor remainder of R near zeta")
    sp.add_argument("--eps", type=float, default=0.05)
    sp.set_defaults(fn=cmd_taylor)

    sp = sub.add_parser("exit-tails", parents=[common, model], help="exit point tail table")
    sp.add_argument("--mu-drift", type=float, default=0.0)
    sp.add_argument("--t", type=float, default=1.0)
    sp.add_argument("--N", type=int, nargs="+", default=[2000])
    sp.add_argument("--M", type=_floats, default=[0.5, 1.0, 2.0, 3.0], help="comma separated")
    sp.add_argument("--replicas", type=int, default=250)
    sp.set_defaults(fn=cmd_exit_tails)

    sp = sub.add_parser("sh-invariance", parents=[common, model], help="finite-N joint invariance")
    sp.add_argument("--mu-drift", type=_floats, default=[0.0], help="comma separated")
    sp.add_argument("--N", type=float, default=200)
    sp.add_argument("--t", type=float, default=1.0)
    sp.add_argument("--x", type=_floats, default=[-1.0, 1.0], help="comma separated")
    sp.add_argument("--replicas", type=int, default=200)
    sp.add_argument("--seeds", type=int, default=3)
    sp.set_defaults(fn=cmd_invariance)

    sp = sub.add_parser("sh-marginal", parents=[common, model], help="Brownian marginal targets")
    sp.add_argument("--mu-drift", type=_floats, default=[0.0, 0.5], help="comma separated")
    sp.add_argument("--N", type=float, default=1e4)
    sp.add_argument("--x", type=float, default=1.0)
    sp.add_argument("--replicas", type=int, default=20_000)
    sp.add_argument("--rel-tol", type=float, default=0.10)
    sp.set_defaults(fn=cmd_marginal)

    sp = sub.add_parser("oracle-suite", parents=[common], help="brute-force, evolution and coupling checks")
    sp.add_argument("--samples", type=int, default=1000)
    sp.set_defaults(fn=cmd_oracle)
    return ap


def resolve_config(args) -> SuiteConfig:
    cfg = load_config(args.config) if args.config else SuiteConfig()
    if os.environ.get("LPPSH_SEED"):
        cfg.seed = int(os.environ["LPPSH_SEED"])
    if os.environ.get("LPPSH_OUTDIR"):
        cfg.outdir = os.environ["LPPSH_OUTDIR"]
    if args.seed is not None:
        cfg.seed = args.seed
    if args.outdir:
        cfg.outdir = args.outdir
    if args.alpha is not None:
        cfg.alpha = args.alpha
    if cfg.seed < 0:
        raise ConfigError("seed must be non-negative")
    return cfg


MODEL_COMMANDS = {"params", "sample", "exit-tails", "sh-invariance", "sh-marginal"}


def run_command(args, cfg: SuiteConfig, out: Path):
    """Run one subcommand; model commands without --model loop over the config models."""
    if args.command not in MODEL_COMMANDS or args.model is not None:
        return args.fn(args, cfg, out)
    if not cfg.models:
        raise ConfigError("no --model given and the config lists no models")
    reports, files, ok, streams = {}, [], True, {}
    for mc in cfg.models:
        a = argparse.Namespace(**vars(args))
        a.model, a.rho, a.p, a.gamma, a.delta = mc.name, mc.rho, mc.p, mc.gamma, mc.delta
        sub = out / f"{mc.name}_rho{mc.rho:g}"
        sub.mkdir(parents=True, exist_ok=True)
        r, f, o, st = args.fn(a, cfg, sub)
        reports[sub.name] = r
        files += f
        ok &= bool(o)
        streams.update(st)
    return {"models": reports, "pass": ok}, files, ok, streams


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PASS if exc.code == 0 else EXIT_USAGE
    started = time.time()
    out = None
    created = False
    try:
        cfg = resolve_config(args)
        if cfg.replicas is not None and hasattr(args, "replicas") and "--replicas" not in argv:
            args.replicas = int(cfg.replicas)
        out = Path(cfg.outdir)
        created = not out.exists()
        out.mkdir(parents=True, exist_ok=True)
        report, files, ok, streams = run_command(args, cfg, out)
    except (ConfigError, ParameterError, DomainError, ValueError) as exc:
        print(f"lppsh: error: {exc}", file=sys.stderr)
        if created and out is not None:
            shutil.rmtree(out, ignore_errors=True)
        return EXIT_USAGE
    streams = {**cfg.streams, **streams}
    write_outputs(out, args.command, argv, cfg, streams, report, files, started)
    print(json.dumps({"command": args.command, "pass": bool(ok), "outdir": str(out)}))
    return EXIT_PASS if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
