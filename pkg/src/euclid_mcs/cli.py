"""Command-line front end.

Every subcommand reads its parameters from built-in defaults, then an
optional ``--config`` file of ``key=value`` lines, then explicit flags,
in that order of precedence.  The resolved set is embedded in the output.

Exit codes: 0 success, 2 validation rejection, 3 tolerance failure,
4 usage error.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from typing import Any, Callable, Sequence

from .report import CSV_HEADER, emit_csv_row, emit_json, encode_json
from .states import ValidationError

__all__ = ["main", "run", "load_config", "resolve", "UsageError",
           "EXIT_OK", "EXIT_REJECTED", "EXIT_TOLERANCE", "EXIT_USAGE"]

EXIT_OK = 0
EXIT_REJECTED = 2
EXIT_TOLERANCE = 3
EXIT_USAGE = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Argument parser that raises instead of exiting on bad input."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# Value converters shared by flags and config files.


def _float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"not a finite number: {text!r}")
    return v


def _int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None


def _float_list(text: str) -> tuple[float, ...]:
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if not parts:
        raise argparse.ArgumentTypeError("empty list")
    return tuple(_float(p) for p in parts)


def _vector(text: str) -> tuple[float, float, float]:
    v = _float_list(text)
    if len(v) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated components, got {text!r}")
    return v


def _choice(*options: str) -> Callable[[str], str]:
    def conv(text: str) -> str:
        if text not in options:
            raise argparse.ArgumentTypeError(f"expected one of {', '.join(options)}, got {text!r}")
        return text
    return conv


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def _profile(text: str) -> tuple[float, ...] | str:
    return "constant" if text == "constant" else _float_list(text)


@dataclass(frozen=True)
class Key:
    name: str
    convert: Callable[[str], Any]
    default: Any
    help: str
    flag: str | None = None

    @property
    def option(self) -> str:
        return self.flag or "--" + self.name.replace("_", "-")


_KEYS = {k.name: k for k in [
    Key("P", _float, 1.0, "momentum radius P"),
    Key("hbar", _float, 1.0, "reduced Planck constant"),
    Key("lambda", _float, 1.0, "uncertainty ratio lambda > 0"),
    Key("spin", _float, 0.0, "spin weight s (integer or half-integer)"),
    Key("ell", _int, 0, "integer azimuthal label"),
    Key("alpha3", _float, 0.5, "component alpha . beta of the tilted direction"),
    Key("alpha_azimuth", _float, 0.0, "azimuth of the tilted direction"),
    Key("m", _float, 1.0, "magnetic label m (e3-jj) or profile mode (e3-pc)"),
    Key("j", _float, 1.0, "multiplet label j"),
    Key("sheet", _int, 1, "sheet of the parameter double cover, +1 or -1"),
    Key("p_expect", _float, 0.0, "target <p(alpha)>"),
    Key("c3_expect", _float, 0.0, "target <C3> in units of hbar P"),
    Key("ntheta", _int, None, "theta nodes (default: chosen per family)"),
    Key("nphi", _int, None, "phi nodes (default: chosen per family)"),
    Key("tol", _float, None, "relative tolerance of closed-form comparisons"),
    Key("format", _choice("json", "csv"), "json", "output format"),
    Key("out", str, None, "write output to this path instead of stdout"),
    Key("alpha", _float, 0.0, "in-plane direction angle alpha in [0, 2 pi)"),
    Key("alpha_vec", _vector, (1.0, 0.0, 0.0), "direction alpha as x,y,z", flag="--alpha"),
    Key("profile", _profile, "constant", "'constant' or cos(theta) polynomial coefficients c0,c1,..."),
    Key("j_values", _float_list, None, "probe truncations j_max (default |s| + 4,6,...,12)"),
    Key("radius", _float, 4.0, "radius of the trial-eigenvalue disc, units of hbar P"),
    Key("family", _choice("e2", "e3-pj", "e3-jj", "e3-pc"), "e2", "family to sweep"),
    Key("lambdas", _float_list, (0.1, 1.0, 10.0), "comma list of lambda values"),
    Key("alpha3_values", _float_list, None, "comma list of alpha3 values (e3-jj, e3-pc)"),
    Key("quick", _bool, False, "run the reduced suite"),
]}

_COMMON = ["P", "hbar", "tol", "format", "out"]
_SUBCOMMANDS: dict[str, tuple[str, list[str]]] = {
    "e2": ("E(2) most classical state report", ["lambda", "alpha", "ell", "nphi"]),
    "e3-pj": ("(p(alpha), J3) state report", ["lambda", "spin", "ell", "alpha_vec", "profile",
                                              "ntheta", "nphi"]),
    "e3-jj": ("(J(alpha), J3) state report", ["lambda", "spin", "j", "m", "alpha3", "alpha_azimuth",
                                              "sheet", "ntheta", "nphi"]),
    "e3-pc": ("(p(alpha), C3) state report", ["lambda", "spin", "alpha3", "alpha_azimuth", "p_expect",
                                              "c3_expect", "m", "ntheta", "nphi"]),
    "e3-cc-probe": ("(C(alpha), C3) finite-basis residual probe",
                    ["lambda", "spin", "alpha3", "alpha_azimuth", "j_values", "radius"]),
    "sweep": ("sweep a family over lambda or (alpha3, lambda) grids",
              ["family", "lambdas", "alpha3_values", "spin", "ell", "j", "m", "sheet", "alpha3",
               "alpha_azimuth", "p_expect", "c3_expect", "ntheta", "nphi"]),
    "verify": ("run the invariant suite and print a pass/fail table", ["quick"]),
}
# Family defaults that differ from the shared table.
_OVERRIDES = {
    "e3-pc": {"alpha3": 0.8, "m": 0.0},
    "e3-jj": {"alpha3": 0.3, "lambda": 0.5},
    "verify": {"format": "table"},
    "sweep": {"alpha3": 0.0},
}


def _keys_for(command: str) -> list[str]:
    keys = list(_SUBCOMMANDS[command][1])
    if command == "verify":
        return keys + ["format", "out"]
    return _COMMON + keys


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="euclid-mcs", description="Most classical states of E(2) and E(3) systems.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    for name, (help_text, _) in _SUBCOMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", default=None, help="key=value file; flags override it")
        for key in _keys_for(name):
            k = _KEYS[key]
            if key == "quick":
                p.add_argument("--quick", action="store_const", const=True,
                               default=argparse.SUPPRESS, help=k.help)
                continue
            conv = k.convert
            if name == "verify" and key == "format":
                conv = _choice("table", "json")
            p.add_argument(k.option, dest=key, type=conv, default=argparse.SUPPRESS, help=k.help)
    return parser


def load_config(path: str, command: str) -> dict[str, Any]:
    """Parse ``key=value`` lines; ``#`` starts a comment, ``-`` in keys means ``_``."""
    allowed = set(_keys_for(command))
    out: dict[str, Any] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from None
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        key, value = (t.strip() for t in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key == "alpha" and command == "e3-pj":
            key = "alpha_vec"
        if key not in allowed:
            raise UsageError(f"{path}:{n}: unknown key {key!r} for {command}")
        conv = _KEYS[key].convert
        if command == "verify" and key == "format":
            conv = _choice("table", "json")
        try:
            out[key] = conv(value)
        except argparse.ArgumentTypeError as exc:
            raise UsageError(f"{path}:{n}: {key}: {exc}") from None
    return out


def resolve(command: str, flags: dict[str, Any], config: dict[str, Any] | None = None) -> dict[str, Any]:
    """Defaults, then config values, then flags."""
    cfg = {k: _KEYS[k].default for k in _keys_for(command)}
    cfg.update(_OVERRIDES.get(command, {}))
    cfg.update(config or {})
    cfg.update({k: v for k, v in flags.items() if k in cfg})
    return cfg


def format_config(cfg: dict[str, Any]) -> str:
    """The resolved set as ``key=value`` lines, loadable with ``--config``."""
    def text(v: Any) -> str:
        if isinstance(v, (tuple, list)):
            return ",".join(repr(float(x)) for x in v)
        if isinstance(v, float):
            return repr(v)
        return str(v)

    lines = []
    for k in sorted(cfg):
        if cfg[k] is None or k == "out":
            continue
        lines.append(f"{'alpha' if k == 'alpha_vec' else k}={text(cfg[k])}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Family runners.  Each returns ``(text, exit_code)``.


def _emit_report(rep, cfg: dict[str, Any]) -> tuple[str, int]:
    rep.notes["resolved_config"] = format_config(cfg)
    if cfg["format"] == "csv":
        body = emit_csv_row(rep).splitlines()
        comments = ["# " + line for line in rep.notes["resolved_config"].splitlines()]
        text = "\n".join([body[0], *comments, *body[1:]]) + "\n"
    else:
        text = emit_json(rep) + "\n"
    return text, EXIT_OK if rep.passed else EXIT_TOLERANCE


def _e2_report(cfg: dict[str, Any]):
    from .e2 import E2Params, build_e2_state, e2_report, e2_required_n_phi

    pr = E2Params(cfg["P"], cfg["hbar"], cfg["lambda"], cfg["alpha"], cfg["ell"])
    n_phi = cfg["nphi"] or max(512, e2_required_n_phi(pr))
    return e2_report(build_e2_state(pr, n_phi), rel_tol=cfg["tol"])


def _pj_params(cfg: dict[str, Any], lam: float | None = None, direction=None):
    from .e3_pj import AProfile, PJParams
    from .sphere import Direction

    prof = cfg.get("profile", "constant")
    profile = AProfile.constant() if prof == "constant" else AProfile.polynomial(prof)
    vec = direction if direction is not None else cfg["alpha_vec"]
    if math.sqrt(sum(c * c for c in vec)) == 0.0:
        raise ValidationError("alpha must be a nonzero vector", "ZERO_DIRECTION")
    return PJParams(cfg["P"], cfg["hbar"], cfg["lambda"] if lam is None else lam, cfg["spin"],
                    Direction.normalized(vec), cfg["ell"], profile)


def _pj_report(cfg: dict[str, Any], params=None):
    from .e3_pj import build_pj_state, pj_grid_for, pj_report

    pr = params or _pj_params(cfg)
    grid = pj_grid_for(pr, cfg["ntheta"], cfg["nphi"])
    return pj_report(build_pj_state(pr, grid), rel_tol=cfg["tol"])


def _jj_report(cfg: dict[str, Any], lam: float | None = None, alpha3: float | None = None):
    from .e3_jj import JJParams, build_jj_state, jj_report
    from .sphere import build_grid

    pr = JJParams(cfg["P"], cfg["hbar"], cfg["lambda"] if lam is None else lam, cfg["spin"],
                  cfg["j"], cfg["m"], cfg["alpha3"] if alpha3 is None else alpha3,
                  cfg["alpha_azimuth"], cfg["sheet"])
    grid = None
    if cfg["ntheta"] or cfg["nphi"]:
        grid = build_grid(pr.P, cfg["ntheta"] or 48, cfg["nphi"] or 96)
    return jj_report(build_jj_state(pr, grid=grid), rel_tol=cfg["tol"])


def _pc_report(cfg: dict[str, Any], lam: float | None = None, alpha3: float | None = None):
    from .e3_pc import InadmissiblePC, PCParams, build_pc_state, pc_grid_for, pc_report, validate_pc

    if not float(cfg["m"]).is_integer():
        raise ValidationError("the e3-pc profile mode m must be an integer", "BAD_MODE")
    pr = PCParams(cfg["P"], cfg["hbar"], cfg["lambda"] if lam is None else lam, cfg["spin"],
                  cfg["alpha3"] if alpha3 is None else alpha3, cfg["alpha_azimuth"],
                  cfg["p_expect"], cfg["c3_expect"], int(cfg["m"]))
    verdict = validate_pc(pr)
    if not verdict.admissible:
        raise InadmissiblePC(verdict.message, verdict.code)
    grid = pc_grid_for(pr, cfg["ntheta"] or 64, cfg["nphi"])
    rep = pc_report(build_pc_state(pr, grid), rel_tol=cfg["tol"])
    rep.notes["verdict"] = f"{verdict.code}: {verdict.message}"
    return rep


def _run_family(cfg: dict[str, Any], builder) -> tuple[str, int]:
    return _emit_report(builder(cfg), cfg)


def _cc_probe(cfg: dict[str, Any]) -> tuple[str, int]:
    from .e3_cc import CCParams, cc_control_probe, cc_residual_probe, decay_trend

    pr = CCParams(P=cfg["P"], hbar=cfg["hbar"], lam=cfg["lambda"], s=cfg["spin"],
                  alpha3=cfg["alpha3"], alpha_azimuth=cfg["alpha_azimuth"])
    s = abs(pr.s)
    js = cfg["j_values"] or tuple(s + k for k in (4, 6, 8, 10, 12))
    rows = cc_residual_probe(pr, js, radius=cfg["radius"])
    trend = decay_trend(rows)
    control = cc_control_probe(pr.P, pr.hbar, pr.lam, pr.s, s + 1, s + 1, pr.alpha3)
    code = EXIT_OK if control < 1e-8 else EXIT_TOLERANCE
    if cfg["format"] == "csv":
        lines = [CSV_HEADER]
        lines += ["# " + line for line in format_config(cfg).splitlines()]
        lines.append("j_max,best_C_re,best_C_im,sigma_min")
        lines += [r.csv() for r in rows]
        lines.append(f"# control_sigma={control!r}")
        lines.append(f"# sigma_at_zero={','.join(repr(r.sigma_at_zero) for r in rows)}")
        lines.append(f"# decay_trend={trend.decays} floor={trend.floor!r} log_slope={trend.log_slope!r}")
        return "\n".join(lines) + "\n", code
    obj = {
        "system": "e3-cc-probe",
        "resolved_config": format_config(cfg),
        "rows": [{"j_max": r.j_max, "best_C": r.best_C, "sigma_min": r.sigma_min,
                  "sigma_at_zero": r.sigma_at_zero, "n_basis": r.n_basis} for r in rows],
        "control_sigma": control,
        "trend": trend.to_dict(),
    }
    return encode_json(obj) + "\n", code


_SWEEP_PRODUCT = {"e2": "product", "e3-pj": "product", "e3-jj": "product", "e3-pc": "product_closed_form"}


def _sweep(cfg: dict[str, Any]) -> tuple[str, int]:
    fam = cfg["family"]
    a3s = cfg["alpha3_values"] or (cfg["alpha3"],)
    if fam in ("e2", "e3-pj") and cfg["alpha3_values"]:
        raise UsageError(f"--alpha3-values does not apply to {fam}")
    rows, fail = [], False
    for a3 in a3s:
        for lam in cfg["lambdas"]:
            row = {"lambda": float(lam), "alpha3": float(a3)}
            try:
                if fam == "e2":
                    sub = dict(cfg, **{"lambda": lam, "alpha": cfg["alpha_azimuth"] % (2 * math.pi),
                                       "nphi": cfg["nphi"]})
                    rep = _e2_report(sub)
                elif fam == "e3-pj":
                    from .sphere import Direction

                    d = Direction.from_tilt(a3, cfg["alpha_azimuth"]).components
                    rep = _pj_report(cfg, _pj_params(dict(cfg, profile="constant"), lam, d))
                elif fam == "e3-jj":
                    rep = _jj_report(cfg, lam, a3)
                else:
                    rep = _pc_report(cfg, lam, a3)
            except ValidationError as exc:
                row.update(product=math.nan, closed_form=math.nan, residual=math.nan,
                           status=f"REJECTED:{exc.code}")
                rows.append(row)
                continue
            res = rep.residuals.get("eigen", rep.residuals.get("saturation", math.nan))
            cmp = rep.comparisons.get(_SWEEP_PRODUCT[fam])
            row.update(product=rep.quadrature["product"],
                       closed_form=cmp.closed_form if cmp else math.nan,
                       residual=res, status="PASS" if rep.passed else "FAIL")
            fail |= not rep.passed
            rows.append(row)
    code = EXIT_TOLERANCE if fail else EXIT_OK
    if cfg["format"] == "csv":
        lines = [CSV_HEADER] + ["# " + line for line in format_config(cfg).splitlines()]
        lines.append("lambda,alpha3,product,closed_form,residual,status")
        for r in rows:
            lines.append(",".join([repr(r["lambda"]), repr(r["alpha3"]), repr(r["product"]),
                                   repr(r["closed_form"]), repr(r["residual"]), r["status"]]))
        return "\n".join(lines) + "\n", code
    return encode_json({"system": "sweep", "family": fam, "resolved_config": format_config(cfg),
                        "rows": rows}) + "\n", code


def _verify(cfg: dict[str, Any]) -> tuple[str, int]:
    from .verify import format_table, run_suite

    results = run_suite(quick=cfg["quick"])
    code = EXIT_OK if all(r.passed for r in results) else EXIT_TOLERANCE
    if cfg["format"] == "json":
        return encode_json([r.to_dict() for r in results]) + "\n", code
    return format_table(results) + "\n", code


_RUNNERS = {
    "e2": lambda c: _run_family(c, _e2_report),
    "e3-pj": lambda c: _run_family(c, _pj_report),
    "e3-jj": lambda c: _run_family(c, _jj_report),
    "e3-pc": lambda c: _run_family(c, _pc_report),
    "e3-cc-probe": _cc_probe,
    "sweep": _sweep,
    "verify": _verify,
}


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        ns = build_parser().parse_args(list(sys.argv[1:] if argv is None else argv))
    except UsageError as exc:
        print(exc, file=stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    flags = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
    try:
        file_cfg = load_config(ns.config, ns.command) if ns.config else {}
        cfg = resolve(ns.command, flags, file_cfg)
        text, code = _RUNNERS[ns.command](cfg)
    except UsageError as exc:
        print(f"euclid-mcs: {exc}", file=stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"euclid-mcs: rejected [{exc.code}]: {exc}", file=stderr)
        return EXIT_REJECTED
    except ValueError as exc:
        # Out-of-range physical parameters (e.g. lambda <= 0).
        print(f"euclid-mcs: rejected [INVALID]: {exc}", file=stderr)
        return EXIT_REJECTED
    if cfg.get("out"):
        with open(cfg["out"], "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
