"""Command-line driver: config loading, sweeps, validation and figure recipes."""
from __future__ import annotations

import argparse
import copy
import io
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
import tomli_w

from . import analytic, montecarlo
from .channel import AntennaPattern, ScenarioConfig
from .errors import ConfigError, ParameterDomainError, RisPlsError
from .fading import FisherFParams
from .geometry import AnnulusGeometry, BlockageModel, PathLossParams
from .links import LinkKind

EXIT_OK, EXIT_BREACH, EXIT_CONFIG, EXIT_ALL_FAILED, EXIT_PARTIAL = 0, 1, 2, 3, 4
CSV_HEADER = ("swept_value", "metric", "method", "value", "stderr", "wall_ms", "flags")
METHODS = ("exact", "approx", "asymptotic", "foxh", "mc")

DEFAULTS = {
    "system": {"K": 4, "M": 2, "L": 36, "p_db": 0.0, "sigma_n_db": 0.0, "beta_max": 1.0,
               "nlos_mode": "NLoS", "blockage_mode": "ball",
               "g_main_db": 30.0, "g_side_db": -10.0, "theta_c": 30.0},
    "geometry": {"r0": 1.0, "r1": 300.0, "r2": 400.0, "d_uR": 30.0, "density_lambda": 1e-4,
                 "b1": 0.3, "alpha1": 2.0, "alpha2": 3.0, "c_l1_db": 0.0, "c_l2_db": 0.0},
    "fading": {"user": {"m": 5.0, "m_s": 5.0, "gamma_bar_db": -10.0},
               "eve": {"m": 3.0, "m_s": 3.0, "gamma_bar_db": -10.0},
               "bs_ris": {"m": 5.0, "m_s": 5.0, "gamma_bar_db": 0.0}},
    "secrecy": {"r_t": 1.0, "z_th_db": 0.0, "e_reg": 1e-6, "r_s_pnsc": 1.0},
    "mc": {"trials": 1_000_000, "seed": 20240601, "batch_size": 8192, "workers": 1},
}
ALIASES = {"p_db": "system.p_db", "p": "system.p_db", "L": "system.L", "theta_c": "system.theta_c",
           "K": "system.K", "M": "system.M", "alpha2": "geometry.alpha2", "r_t": "secrecy.r_t",
           "z_th_db": "secrecy.z_th_db", "gamma_bar_db": "fading.user.gamma_bar_db",
           "eve_gamma_bar_db": "fading.eve.gamma_bar_db"}
_INT_KEYS = {"K", "M", "L", "trials", "seed", "batch_size", "workers"}


def db(x: float) -> float:
    return 10.0 ** (x / 10.0)


@dataclass(frozen=True)
class LoadedConfig:
    scenario: ScenarioConfig
    secrecy: analytic.SecrecyParams
    mc: montecarlo.McConfig
    raw: dict = field(compare=False, repr=False, default=None)

    def with_setting(self, path: str, value) -> "LoadedConfig":
        raw = copy.deepcopy(self.raw)
        keys = ALIASES.get(path, path).split(".")
        node = raw
        for k in keys[:-1]:
            if k not in node or not isinstance(node[k], dict):
                raise ConfigError(f"unknown setting {path!r}")
            node = node[k]
        if keys[-1] not in node:
            raise ConfigError(f"unknown setting {path!r}")
        node[keys[-1]] = value
        return config_from_dict(raw)


def _merge(defaults: dict, given: dict, where: str) -> dict:
    out = {}
    for key in given:
        if key not in defaults:
            raise ConfigError(f"unknown key {where + key!r}")
    for key, dv in defaults.items():
        if isinstance(dv, dict):
            sub = given.get(key, {})
            if not isinstance(sub, dict):
                raise ConfigError(f"{where + key!r} must be a table")
            out[key] = _merge(dv, sub, f"{where}{key}.")
        else:
            v = given.get(key, dv)
            if isinstance(v, bool) or (not isinstance(v, (int, float, str))):
                raise ConfigError(f"{where + key!r} has an unsupported value {v!r}")
            if isinstance(dv, str):
                if not isinstance(v, str):
                    raise ConfigError(f"{where + key!r} must be a string")
            elif isinstance(v, str):
                raise ConfigError(f"{where + key!r} must be a number")
            elif key in _INT_KEYS:
                if float(v) != int(v):
                    raise ConfigError(f"{where + key!r} must be an integer")
                v = int(v)
            else:
                v = float(v)
            out[key] = v
    return out


def _fading(d: dict, name: str) -> FisherFParams:
    try:
        return FisherFParams(d["m"], d["m_s"], db(d["gamma_bar_db"]))
    except ParameterDomainError as exc:
        raise ConfigError(f"fading.{name}: {exc}") from None


def config_from_dict(given: dict) -> LoadedConfig:
    raw = _merge(DEFAULTS, given or {}, "")
    s, g, sec, mc = raw["system"], raw["geometry"], raw["secrecy"], raw["mc"]
    try:
        nlos = LinkKind.parse(s["nlos_mode"])
    except ValueError as exc:
        raise ConfigError(f"system.nlos_mode: {exc}") from None
    parts = {}
    for name, build in (
        ("geometry", lambda: AnnulusGeometry(g["r0"], g["r1"], g["r2"], g["d_uR"], g["density_lambda"])),
        ("geometry.b1", lambda: BlockageModel(g["b1"])),
        ("geometry.path_loss", lambda: PathLossParams(g["alpha1"], g["alpha2"], db(g["c_l1_db"]), db(g["c_l2_db"]))),
        ("system.antenna", lambda: AntennaPattern(db(s["g_main_db"]), db(s["g_side_db"]), s["theta_c"])),
        ("secrecy", lambda: analytic.SecrecyParams(sec["r_t"], db(sec["z_th_db"]), sec["e_reg"], sec["r_s_pnsc"])),
        ("mc", lambda: montecarlo.McConfig(mc["trials"], mc["seed"], mc["batch_size"], mc["workers"])),
    ):
        try:
            parts[name] = build()
        except ParameterDomainError as exc:
            raise ConfigError(f"{name}: {exc}") from None
    pattern = parts["system.antenna"]
    try:
        scen = ScenarioConfig(
            K=s["K"], M=s["M"], L=s["L"], beta_max=s["beta_max"], sigma_n_sq=db(s["sigma_n_db"]),
            p_un=db(s["p_db"]), path_loss=parts["geometry.path_loss"], geometry=parts["geometry"],
            blockage=parts["geometry.b1"], pattern_user=pattern, pattern_eve=pattern,
            fading_user=_fading(raw["fading"]["user"], "user"), fading_eve=_fading(raw["fading"]["eve"], "eve"),
            fading_bs_ris=_fading(raw["fading"]["bs_ris"], "bs_ris"), nlos_mode=nlos,
            blockage_mode=s["blockage_mode"])
    except ParameterDomainError as exc:
        raise ConfigError(f"system: {exc}") from None
    return LoadedConfig(scen, parts["secrecy"], parts["mc"], raw)


def parse_config_text(text: str) -> LoadedConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"parse error: {exc}") from None
    return config_from_dict(data)


def load_config(path) -> LoadedConfig:
    try:
        with open(path, "rb") as fh:
            text = fh.read().decode("utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config_text(text)


def emit_config(cfg: LoadedConfig) -> str:
    return tomli_w.dumps(cfg.raw)


# ------------------------------------------------------------ sweeps

@dataclass(frozen=True)
class SweepSpec:
    swept_parameter: str
    values: tuple
    metric: str
    methods: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "methods", tuple(self.methods))
        if not self.values:
            raise ConfigError("a sweep needs at least one value")
        if self.metric not in montecarlo.METRICS:
            raise ConfigError(f"unknown metric {self.metric!r}")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}")
        if "asymptotic" in self.methods and self.metric != "op":
            raise ConfigError("the asymptotic method exists for op only")
        if not self.methods:
            raise ConfigError("at least one method is required")


@dataclass
class ResultRow:
    swept_value: object
    metric: str
    method: str
    value: float | None
    stderr: float | None = None
    wall_ms: float | None = None
    flags: str = ""

    @property
    def failed(self) -> bool:
        return self.value is None


def evaluate(cfg: LoadedConfig, metric: str, method: str) -> ResultRow:
    """One metric by one method; failures become NA rows carrying the reason."""
    t0 = time.perf_counter()
    try:
        if method == "mc":
            est = montecarlo.estimate_metrics(cfg.scenario, cfg.secrecy, cfg.mc, (metric,))[metric]
            value, stderr, flags = est.mean, est.stderr, ""
        else:
            res = analytic.metric(metric, cfg.scenario, cfg.secrecy, method)
            value, stderr = res.value, None
            flags = ";".join(res.diagnostics.get("flags", []))
    except (RisPlsError, ValueError, ArithmeticError) as exc:
        value, stderr, flags = None, None, f"NA:{type(exc).__name__}:{exc}"
    return ResultRow(None, metric, method, value, stderr, 1e3 * (time.perf_counter() - t0), flags)


def run_sweep(spec: SweepSpec, base: LoadedConfig, progress=None) -> list:
    """Rows in sweep order, one per (value, method)."""
    rows = []
    for v in spec.values:
        cfg = base.with_setting(spec.swept_parameter, v)
        for method in spec.methods:
            row = evaluate(cfg, spec.metric, method)
            row.swept_value = v
            rows.append(row)
            if progress:
                progress(row)
    return rows


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return f"{x:.10g}"


def rows_to_csv(rows, timing: bool = False) -> str:
    buf = io.StringIO()
    buf.write(",".join(CSV_HEADER) + "\n")
    for r in rows:
        vals = [_fmt(r.swept_value), r.metric, r.method, "NA" if r.value is None else _fmt(r.value),
                _fmt(r.stderr), _fmt(r.wall_ms) if timing else "", '"' + r.flags.replace('"', "'") + '"' if r.flags else ""]
        buf.write(",".join(vals) + "\n")
    return buf.getvalue()


def write_atomic(path: str, text: str):
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def exit_code_for(rows) -> int:
    failed = sum(r.failed for r in rows)
    if rows and failed == len(rows):
        return EXIT_ALL_FAILED
    if failed:
        return EXIT_PARTIAL
    return EXIT_OK


def load_sweep_spec(path) -> tuple:
    """(SweepSpec, config tables found next to the [sweep] table)."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read sweep spec {path}: {exc}") from None
    sw = data.pop("sweep", None)
    if not isinstance(sw, dict):
        raise ConfigError("sweep spec needs a [sweep] table")
    extra = set(sw) - {"parameter", "values", "metric", "methods"}
    if extra:
        raise ConfigError(f"unknown key(s) in [sweep]: {sorted(extra)}")
    try:
        spec = SweepSpec(sw["parameter"], sw["values"], sw.get("metric", "op"), sw.get("methods", ["approx"]))
    except KeyError as exc:
        raise ConfigError(f"[sweep] is missing {exc}") from None
    return spec, data


# ------------------------------------------------------------ validation

def tolerance(metric: str, mc_est) -> float:
    if metric == "op":
        return max(0.005, 3.0 * mc_est.stderr)
    if metric == "asr":
        return max(0.01, 0.05 * abs(mc_est.mean), 3.0 * mc_est.stderr)
    return max(0.01, 3.0 * mc_est.stderr)


def validate(cfg: LoadedConfig, method: str = "approx", metrics=montecarlo.METRICS):
    """Rows of (metric, analytic, mc, stderr, |diff|, tolerance, ok)."""
    est = montecarlo.estimate_metrics(cfg.scenario, cfg.secrecy, cfg.mc, metrics)
    out = []
    for m in metrics:
        res = analytic.metric(m, cfg.scenario, cfg.secrecy, method)
        tol = tolerance(m, est[m])
        diff = abs(res.value - est[m].mean)
        out.append((m, res.value, est[m].mean, est[m].stderr, diff, tol, diff <= tol))
    return out


# ------------------------------------------------------------ figure recipes

def _curve(base: LoadedConfig, settings: dict, param: str, values, metric: str, methods):
    cfg = base
    for k, v in settings.items():
        cfg = cfg.with_setting(k, v)
    return run_sweep(SweepSpec(param, values, metric, methods), cfg)


def _values(rows, method):
    return [r.value for r in rows if r.method == method]


def _nonincreasing(ys, slack=1e-9):
    ys = [y for y in ys if y is not None]
    return all(b <= a + slack for a, b in zip(ys, ys[1:]))


def _recipe_fig3(base, methods):
    p = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]
    curves = {}
    for a2 in (2.5, 3.0):
        curves[f"NLoS a2={a2}"] = _curve(base, {"geometry.alpha2": a2, "system.nlos_mode": "NLoS"}, "p_db", p, "op", methods)
        for L in (16, 36):
            curves[f"RIS L={L} a2={a2}"] = _curve(base, {"geometry.alpha2": a2, "system.L": L,
                                                         "system.nlos_mode": "RisReflected"}, "p_db", p, "op", methods)
    m0 = methods[0]
    checks = {"op non-increasing in p": all(_nonincreasing(_values(r, m0)) for r in curves.values())}
    ris = _values(curves["RIS L=36 a2=3.0"], m0)
    nl = _values(curves["NLoS a2=3.0"], m0)
    checks["RIS L=36 below non-RIS at p >= 20 dB (a2=3)"] = all(
        a is not None and b is not None and a <= b for x, a, b in zip(p, ris, nl) if x >= 20)
    return "p_db", curves, checks


def _recipe_fig4(base, methods):
    Ls = [4, 9, 16, 25, 36, 49, 64]
    curves = {}
    for a2 in (2.5, 3.0):
        curves[f"RIS a2={a2}"] = _curve(base, {"geometry.alpha2": a2, "system.p_db": 25.0,
                                               "system.nlos_mode": "RisReflected"}, "L", Ls, "op", methods)
        curves[f"NLoS a2={a2}"] = _curve(base, {"geometry.alpha2": a2, "system.p_db": 25.0,
                                                "system.nlos_mode": "NLoS"}, "L", Ls, "op", methods)
    m0 = methods[0]
    checks = {"op non-increasing in L": all(_nonincreasing(_values(curves[f"RIS a2={a}"], m0)) for a in (2.5, 3.0))}
    ris, nl = _values(curves["RIS a2=2.5"], m0), _values(curves["NLoS a2=2.5"], m0)
    above = [a > b for a, b in zip(ris, nl) if a is not None and b is not None]
    checks["crossover between small-L RIS and non-RIS at a2=2.5"] = bool(above) and above[0] and not above[-1]
    return "L", curves, checks


def _recipe_theta(base, methods, metric):
    p = [0.0, 10.0, 20.0, 30.0]
    curves = {}
    for th in (30.0, 60.0, 90.0):
        for mode, L in (("NLoS", 36), ("RisReflected", 36)):
            curves[f"{mode} theta_c={th:g}"] = _curve(base, {"system.theta_c": th, "system.nlos_mode": mode,
                                                              "system.L": L, "geometry.alpha2": 3.0},
                                                       "p_db", p, metric, methods)
    m0 = methods[0]
    checks = {}
    for mode in ("NLoS", "RisReflected"):
        vals = [_values(curves[f"{mode} theta_c={th:g}"], m0) for th in (30.0, 60.0, 90.0)]
        ordered = all(a is not None and b is not None and (b >= a - 1e-9 if metric == "sop" else b <= a + 1e-9)
                      for lo, hi in zip(vals, vals[1:]) for a, b in zip(lo, hi))
        word = "non-decreasing" if metric == "sop" else "non-increasing"
        checks[f"{metric} {word} in theta_c ({mode})"] = ordered
    if metric == "sop":
        checks["sop non-increasing in p"] = all(_nonincreasing(_values(r, m0)) for r in curves.values())
    return "p_db", curves, checks


def _recipe_fig7(base, methods):
    p = [0.0, 10.0, 20.0, 30.0]
    curves = {"NLoS": _curve(base, {"system.nlos_mode": "NLoS", "geometry.alpha2": 3.0}, "p_db", p, "asr", methods)}
    for L in (16, 36):
        curves[f"RIS L={L}"] = _curve(base, {"system.nlos_mode": "RisReflected", "system.L": L,
                                             "geometry.alpha2": 3.0}, "p_db", p, "asr", methods)
    m0 = methods[0]
    checks = {"asr non-decreasing in p": all(_nonincreasing([-y for y in _values(r, m0) if y is not None])
                                             for r in curves.values()),
              "asr >= 0": all(y is None or y >= 0 for r in curves.values() for y in _values(r, m0))}
    a16, a36 = _values(curves["RIS L=16"], m0), _values(curves["RIS L=36"], m0)
    checks["larger L gives higher asr at 30 dB"] = a36[-1] is not None and a16[-1] is not None and a36[-1] >= a16[-1]
    return "p_db", curves, checks


RECIPES = {
    "fig3": _recipe_fig3,
    "fig4": _recipe_fig4,
    "fig5": lambda base, methods: _recipe_theta(base, methods, "sop"),
    "fig6": lambda base, methods: _recipe_theta(base, methods, "pnsc"),
    "fig7": _recipe_fig7,
}


def reproduce(name: str, base: LoadedConfig, methods=("approx",)):
    if name not in RECIPES:
        raise ConfigError(f"unknown recipe {name!r}; choose from {sorted(RECIPES)}")
    return RECIPES[name](base, tuple(methods))


# ------------------------------------------------------------ entry point

def _base_config(args) -> LoadedConfig:
    cfg = load_config(args.config) if args.config else config_from_dict({})
    return _apply_overrides(cfg, args)


def _apply_overrides(cfg: LoadedConfig, args) -> LoadedConfig:
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_setting("mc.seed", int(args.seed))
    if getattr(args, "trials", None) is not None:
        cfg = cfg.with_setting("mc.trials", int(args.trials))
    if getattr(args, "workers", None) is not None:
        cfg = cfg.with_setting("mc.workers", int(args.workers))
    return cfg


def _methods(text, default):
    if not text:
        return tuple(default)
    out = tuple(m.strip() for m in text.split(",") if m.strip())
    for m in out:
        if m not in METHODS:
            raise ConfigError(f"unknown method {m!r}")
    return out


def _emit(text: str, out):
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _svg_path(out, suffix=".svg"):
    base = out if out else "rispls"
    return os.path.splitext(base)[0] + suffix


def _cmd_eval(args) -> int:
    cfg = _base_config(args)
    rows = []
    for m in _methods(args.method, ("approx",)):
        row = evaluate(cfg, args.metric, m)
        row.swept_value = ""
        rows.append(row)
    _emit(rows_to_csv(rows, args.timing), args.out)
    return exit_code_for(rows)


def _cmd_sweep(args) -> int:
    spec, tables = load_sweep_spec(args.spec)
    base = load_config(args.config) if args.config else config_from_dict(tables)
    base = _apply_overrides(base, args)
    if args.method:
        spec = SweepSpec(spec.swept_parameter, spec.values, spec.metric, _methods(args.method, spec.methods))
    rows = run_sweep(spec, base)
    _emit(rows_to_csv(rows, args.timing), args.out)
    if args.svg:
        from .svgplot import line_plot
        series = {m: ([r.swept_value for r in rows if r.method == m], [r.value for r in rows if r.method == m])
                  for m in spec.methods}
        write_atomic(_svg_path(args.out), line_plot(series, spec.metric, spec.swept_parameter, spec.metric,
                                                    logy=spec.metric != "asr"))
    return exit_code_for(rows)


def _cmd_validate(args) -> int:
    cfg = _base_config(args)
    method = _methods(args.method, ("approx",))[0]
    results = validate(cfg, method)
    lines = ["metric,analytic,mc,stderr,abs_diff,tolerance,status"]
    for m, a, e, se, d, tol, ok in results:
        lines.append(f"{m},{a:.10g},{e:.10g},{se:.10g},{d:.10g},{tol:.10g},{'PASS' if ok else 'FAIL'}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if all(r[-1] for r in results) else EXIT_BREACH


def _cmd_reproduce(args) -> int:
    base = _base_config(args)
    methods = _methods(args.method, ("approx",))
    xname, curves, checks = reproduce(args.figure, base, methods)
    rows = []
    for label, crows in curves.items():
        for r in crows:
            rows.append(ResultRow(r.swept_value, r.metric, f"{r.method}[{label}]", r.value, r.stderr, r.wall_ms, r.flags))
    _emit(rows_to_csv(rows, args.timing), args.out)
    if args.svg:
        from .svgplot import line_plot
        series = {}
        for label, crows in curves.items():
            for m in methods:
                pts = [r for r in crows if r.method == m]
                series[f"{label} {m}"] = ([r.swept_value for r in pts], [r.value for r in pts])
        metric = next(iter(curves.values()))[0].metric
        write_atomic(_svg_path(args.out or args.figure), line_plot(series, args.figure, xname, metric,
                                                                   logy=metric == "op"))
    for name, ok in checks.items():
        sys.stderr.write(f"{'PASS' if ok else 'FAIL'} {args.figure}: {name}\n")
    code = exit_code_for(rows)
    if code == EXIT_OK and not all(checks.values()):
        code = EXIT_BREACH
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rispls", description="Secrecy metrics for RIS-aided links under F fading.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML configuration file")
        p.add_argument("--seed", type=int, help="Monte-Carlo master seed")
        p.add_argument("--trials", type=int, help="Monte-Carlo trials")
        p.add_argument("--workers", type=int, help="Monte-Carlo worker threads")
        p.add_argument("--method", help="comma-separated methods: " + ",".join(METHODS))
        p.add_argument("--out", help="output path (stdout when omitted)")
        p.add_argument("--svg", action="store_true", help="also write an SVG plot next to --out")
        p.add_argument("--timing", action="store_true", help="fill the wall_ms column")

    p = sub.add_parser("eval", help="one metric for one configuration")
    common(p)
    p.add_argument("--metric", default="op", choices=montecarlo.METRICS)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sweep", help="run a sweep spec file")
    p.add_argument("spec", help="TOML file with a [sweep] table")
    common(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("validate", help="analytic versus Monte-Carlo report")
    common(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("reproduce", help="figure recipes with structural checks")
    p.add_argument("figure", choices=sorted(RECIPES))
    common(p)
    p.set_defaults(func=_cmd_reproduce)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
