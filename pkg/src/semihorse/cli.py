"""Command-line entry point.

Every command reads an optional JSON config (``--config``), lets flags
override it, validates the merged config against a JSON schema and writes a
JSON report (to ``--out`` atomically, or to stdout). Commands with tabular
output also write a CSV sidecar next to the report.

Exit codes: 0 success, 1 usage or config error, 2 structured failure or
resource ceiling (a partial report is still written).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
import time
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from . import __version__
from .errors import DomainError, ResourceError, SemihorseError, StructuredFailure
from .reporting import atomic_write_text, json_text

# ---------------------------------------------------------------------------
# schema

_SYSTEM = {
    "type": "object",
    "additionalProperties": False,
    "required": ["type"],
    "properties": {
        "type": {"enum": ["sft", "sofic", "full", "beta", "sgap", "counterexample-x",
                          "counterexample-e", "golden-mean", "automaton"]},
        "alphabet": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "k": {"type": "integer", "minimum": 1},
        "forbidden": {"type": "array", "items": {"type": "string"}},
        "graph": {
            "type": "object", "additionalProperties": False,
            "properties": {"states": {"type": "integer", "minimum": 1},
                           "edges": {"type": "array",
                                     "items": {"type": "array", "minItems": 3, "maxItems": 3}}},
        },
        "beta": {"type": "number"},
        "depth": {"type": "integer", "minimum": 1},
        "gaps": {"oneOf": [
            {"type": "array", "items": {"type": "integer", "minimum": 0}},
            {"type": "object", "additionalProperties": False,
             "properties": {"start": {"type": "integer", "minimum": 0},
                            "step": {"type": "integer", "minimum": 1}}}]},
        "automaton": {"type": "object"},
    },
}


def _section(props: dict) -> dict:
    return {"type": "object", "additionalProperties": False, "properties": props}


_INT = {"type": "integer"}
_POS = {"type": "integer", "minimum": 1}
_NUM = {"type": "number"}
_STR = {"type": "string"}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "system": _SYSTEM,
        "seed": {"type": "integer", "minimum": 0},
        "max_states": _POS,
        "max_depth": _POS,
        "out": _STR,
        "entropy": _section({"method": {"enum": ["spectral", "growth"]},
                             "n_min": _POS, "n_max": _POS}),
        "horseshoe": _section({"M": _INT, "cylinder": _STR, "n_blocks": {"enum": [2, 4]},
                               "eta": _NUM, "l_min": _POS, "l_max": _POS, "sep_k": _INT}),
        "prune": _section({"instance": _STR}),
        "bohr": _section({"weight": _STR, "m": _POS, "horizon": _POS, "instance": _STR}),
        "shadow": _section({"m": _INT, "length": _POS, "count": _POS, "m_max": _POS,
                            "n_max": _POS, "targets": {"type": "array", "items": _STR},
                            "n": _POS, "eps_k": _INT,
                            "g": {"type": "array", "minItems": 2, "maxItems": 2}}),
    },
}


class ConfigError(Exception):
    """Config failed the schema or a domain check; carries diagnostics."""

    def __init__(self, diagnostics: list[str]):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = diagnostics


def _line_of(text: str, key: str) -> int | None:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _diagnose(err: jsonschema.ValidationError, text: str) -> str:
    path = "/".join(str(p) for p in err.absolute_path) or "<root>"
    key = None
    if err.validator == "additionalProperties":
        m = re.search(r"'([^']+)' was unexpected", err.message)
        key = m.group(1) if m else None
        msg = f"unknown key {key!r} at {path}"
    else:
        key = next((str(p) for p in reversed(list(err.absolute_path)) if isinstance(p, str)), None)
        msg = f"{path}: {err.message}"
    line = _line_of(text, key) if key and text else None
    return f"line {line}: {msg}" if line else msg


def _domain_checks(cfg: dict) -> list[str]:
    out = []
    if "system" in cfg:
        from .subshift import from_description

        try:
            from_description(cfg["system"])
        except SemihorseError as e:
            out.append(f"system: {e}")
        except (KeyError, TypeError, ValueError) as e:
            out.append(f"system: malformed description ({e})")
    if "bohr" in cfg and "weight" in cfg["bohr"]:
        from .bohr import Weight

        try:
            Weight.parse(cfg["bohr"]["weight"])
        except SemihorseError as e:
            out.append(f"bohr.weight: {e}")
    return out


def validate_config(cfg: Any, text: str = "") -> list[str]:
    """All diagnostics for a config (empty when valid). No computation beyond parsing."""
    v = jsonschema.Draft202012Validator(SCHEMA)
    errs = sorted(v.iter_errors(cfg), key=lambda e: list(map(str, e.absolute_path)))
    diags = [_diagnose(e, text) for e in errs]
    if not diags and isinstance(cfg, dict):
        diags = _domain_checks(cfg)
    return diags


def load_config(path: str | None) -> tuple[dict, str]:
    if path is None:
        return {}, ""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError([f"cannot read {path}: {e}"]) from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError([f"line {e.lineno}: {e.msg}"]) from None
    return cfg, text


# ---------------------------------------------------------------------------
# commands


def _system(cfg: dict, default: str = "golden-mean"):
    from .subshift import family, from_description

    desc = cfg.get("system")
    if desc is None:
        return family(default)
    return from_description(desc)


def _system_arg(value: str) -> dict:
    """``--system`` accepts a family name or a path to a JSON description."""
    p = Path(value)
    if p.suffix == ".json" and p.exists():
        return json.loads(p.read_text(encoding="utf-8"))
    if value == "golden-mean":
        return {"type": "golden-mean"}
    m = re.fullmatch(r"full(?:-(\d+))?", value)
    if m:
        return {"type": "full", "k": int(m.group(1) or 2)}
    if value in ("counterexample-x", "counterexample-e"):
        return {"type": value}
    m = re.fullmatch(r"beta-(.+)", value)
    if m:
        return {"type": "beta", "beta": float(m.group(1))}
    raise DomainError(f"unknown system {value!r}")


def cmd_entropy(cfg: dict, res: dict) -> None:
    from .entropy import entropy_details

    x = _system(cfg)
    e = cfg.get("entropy", {})
    method = e.get("method", "spectral")
    r = entropy_details(x, method, (e.get("n_min", 10), e.get("n_max", 24)))
    res["results"] = {"system": x.to_json(), "method": method, "value": r.value,
                      "tolerance": 1e-9 if method == "spectral" else None,
                      "provenance": "computed"}
    res["certificates"] = {"bounds": list(r.bounds) if r.bounds else None,
                           "irreducible": r.irreducible}


def cmd_horseshoe_xi(cfg: dict, res: dict) -> None:
    from .horseshoe import xi_M

    M = cfg.get("horseshoe", {}).get("M", 3)
    h = xi_M(M)
    ok = h.certificate.revalidate(h.lam)
    res["results"] = {"M": M, **h.to_json()}
    res["certificates"] = {"step_disjointness": h.certificate.to_json(), "revalidated": ok}


def cmd_horseshoe_cyl(cfg: dict, res: dict) -> None:
    from .horseshoe import horseshoe_in_cylinder
    from .symcore import Cylinder

    h = cfg.get("horseshoe", {})
    c = Cylinder.parse(_binary(), h.get("cylinder", "0"))
    th = horseshoe_in_cylinder(c, n_blocks=h.get("n_blocks", 2))
    res["results"] = {"cylinder": str(c), **th.to_json()}
    res["certificates"] = {"step_disjointness": th.certificate.to_json(),
                           "revalidated": th.certificate.revalidate(th.lam)}


def _binary():
    from .horseshoe import BINARY

    return BINARY


def cmd_horseshoe_extract(cfg: dict, res: dict) -> None:
    from .horseshoe import ExtractionParams, semi_horseshoe_extract_sft

    h = cfg.get("horseshoe", {})
    x = _system(cfg)
    params = ExtractionParams(eta=h.get("eta", 0.3), sep_k=h.get("sep_k", 0),
                              l_min=h.get("l_min", 4), l_max=h.get("l_max", 16),
                              depth=cfg.get("max_depth", 8), seed=cfg.get("seed", 0))
    r = semi_horseshoe_extract_sft(x, params)
    res["results"] = {"system": x.to_json(), "eta": params.eta, "k": r.k, "m": str(r.m),
                      "rate": r.rate, "factor": r.factor.to_json(), "constants": r.constants}
    res["certificates"] = {"step_disjointness": r.certificate.to_json(),
                           "verification": r.verification.to_json()}


def cmd_prune(cfg: dict, res: dict) -> dict | None:
    from .prune import build_instance, corpus, first_return_horseshoe, prune, subset_sum_check

    name = cfg.get("prune", {}).get("instance", "even-full")
    inst = _instance(name, corpus())
    lam, pi, N = inst
    pi_inst = build_instance(lam, pi, N, depth=cfg.get("max_depth", 6))
    B, trace = prune(pi_inst)
    fr = first_return_horseshoe(B)
    res["results"] = {"instance": name, "N": N, "M": pi_inst.M, "tau": pi_inst.tau,
                      "trace": trace.to_json(), "first_return": fr.to_json()}
    res["certificates"] = {"subset_sum": subset_sum_check(pi_inst, trace),
                           "first_return_disjoint": fr.certificate.to_json(),
                           "periodic_check": fr.periodic_check}
    rows = [("cut", i, q) for i, q in enumerate(trace.cuts)]
    return {"columns": ["kind", "index", "value"], "rows": rows}


def _instance(name: str, table: dict):
    if name not in table:
        raise DomainError(f"unknown instance {name!r}; choose from {sorted(table)}")
    return table[name]


def cmd_bohr_correlate(cfg: dict, res: dict) -> dict:
    from .bohr import ObservableSpec, Weight, correlation_average, lemma_a_point, nontriviality_statistic

    b = cfg.get("bohr", {})
    w = Weight.parse(b.get("weight", "random-sign:seed=7"))
    m = b.get("m", 2)
    N = b.get("horizon", 10_000)
    y = lemma_a_point(w, m, N)
    rep = correlation_average(y, ObservableSpec(m), w, N)
    nt = nontriviality_statistic(w, N)
    res["results"] = {"weight": w.spec(), "m": m, "horizon": N, "point_prefix": str(y)[:64],
                      "correlation": rep.to_json(),
                      "nontriviality": {"value": nt.value, "running_sup": nt.running_sup,
                                        "tail_sup": nt.tail_sup, "plateau": nt.plateau,
                                        "nontrivial_proxy": nt.nontrivial}}
    res["certificates"] = {"lemma_a_equality": rep.equal, "tolerance": rep.tol}
    return {"text": rep.to_csv()}


def cmd_bohr_witness(cfg: dict, res: dict) -> dict:
    from .bohr import Weight, end_to_end_bohr_witness
    from .prune import corpus

    b = cfg.get("bohr", {})
    w = Weight.parse(b.get("weight", "random-sign:seed=7"))
    name = b.get("instance", "identity")
    lam, pi, N = _instance(name, corpus())
    wit = end_to_end_bohr_witness(lam, pi, N, w, b.get("horizon", 10_000),
                                  depth=cfg.get("max_depth", 8))
    d = wit.to_json()
    res["timings"].update({f"stage:{k}": v for k, v in d["stages"].pop("timings").items()})
    res["results"] = {"instance": name, "weight": w.spec(), "point_prefix": "".join(
        map(str, wit.point.prefix(64))), **d}
    res["certificates"] = {"entropy": wit.entropy_certificate,
                           "correlation_equals_reference": wit.report.equal}
    return {"text": wit.report.to_csv()}


def cmd_shadow_trace(cfg: dict, res: dict) -> dict:
    from .shadowspec import random_pseudo_orbit, trace_sft

    s = cfg.get("shadow", {})
    x = _system(cfg)
    m = s.get("m", 3)
    rng = np.random.default_rng(cfg.get("seed", 0))
    rows = []
    for i in range(s.get("count", 10)):
        po = random_pseudo_orbit(x, s.get("length", 10), m, rng)
        r = trace_sft(x, po)
        rows.append((i, len(po), repr(r.eps_out), repr(max(r.distances)), int(r.recheck(po))))
    res["results"] = {"system": x.to_json(), "m": m, "traced": len(rows),
                      "eps_out": math.exp(-(m + 1))}
    res["certificates"] = {"all_rechecked": all(r[-1] for r in rows)}
    return {"columns": ["index", "length", "eps_out", "max_distance", "rechecked"], "rows": rows}


def cmd_shadow_counterexample(cfg: dict, res: dict) -> dict:
    from .shadowspec import counterexample_suite

    s = cfg.get("shadow", {})
    suite = counterexample_suite(s.get("m_max", 10), s.get("n_max", 8))
    res["results"] = suite.to_json()
    res["results"]["summary"] = {"gluing_witnesses": len(suite.gluings),
                                 "mistake_minima": len(suite.mistake_minima)}
    res["certificates"] = {"ok": suite.ok}
    res["text"] = suite.to_text()
    return {"text": suite.to_csv()}


def cmd_shadow_spec(cfg: dict, res: dict) -> None:
    from .entropy import MistakeFunction
    from .shadowspec import SpecQuery, modified_almost_spec_check
    from .symcore import UPPoint, grid

    s = cfg.get("shadow", {})
    x = _system(cfg, default="counterexample-x")
    targets = tuple(UPPoint.parse(x.alphabet, t) for t in s.get("targets", ["(02)", "(20)"]))
    g = s.get("g", ["zero", 0])
    q = SpecQuery(targets, s.get("n", 8), grid(s.get("eps_k", 0)), MistakeFunction(g[0], float(g[1])))
    r = modified_almost_spec_check(x, q)
    out = {"system": x.to_json(), "n": q.n, "eps_k": s.get("eps_k", 0), "g": g,
           "budget": q.budget, "found": r.found}
    if r.found:
        out["witness"] = x.alphabet.render(r.word)
        res["certificates"] = {"rechecked": r.recheck(x)}
    else:
        out.update(tag=r.tag, reason=r.reason)
        res["certificates"] = {"exhaustive_cross_check": r.cross_checked}
    res["results"] = out


COMMANDS = {
    ("entropy",): cmd_entropy,
    ("horseshoe", "xi"): cmd_horseshoe_xi,
    ("horseshoe", "cyl"): cmd_horseshoe_cyl,
    ("horseshoe", "extract"): cmd_horseshoe_extract,
    ("prune",): cmd_prune,
    ("bohr", "correlate"): cmd_bohr_correlate,
    ("bohr", "witness"): cmd_bohr_witness,
    ("shadow", "trace"): cmd_shadow_trace,
    ("shadow", "counterexample"): cmd_shadow_counterexample,
    ("shadow", "spec"): cmd_shadow_spec,
}


# ---------------------------------------------------------------------------
# argument parsing


def _globals(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="report path (JSON); a CSV sidecar goes next to it")
    p.add_argument("--max-states", type=int, dest="max_states")
    p.add_argument("--max-depth", type=int, dest="max_depth")
    p.add_argument("--system", help="family name (golden-mean, full-3, beta-1.5, ...) or JSON path")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="semihorse", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("entropy", help="topological entropy of a subshift")
    _globals(e)
    e.add_argument("--method", choices=["spectral", "growth"])

    h = sub.add_parser("horseshoe", help="step-disjoint block horseshoes")
    hs = h.add_subparsers(dest="sub", required=True)
    xi = hs.add_parser("xi", help="the two-block family Xi_M")
    _globals(xi)
    xi.add_argument("--M", type=int, dest="M")
    cy = hs.add_parser("cyl", help="a horseshoe inside a cylinder")
    _globals(cy)
    cy.add_argument("--cylinder")
    cy.add_argument("--n-blocks", type=int, choices=[2, 4], dest="n_blocks")
    ex = hs.add_parser("extract", help="semi-horseshoe extraction for a mixing SFT")
    _globals(ex)
    ex.add_argument("--eta", type=float)

    pr = sub.add_parser("prune", help="pruning loop and first-return horseshoe")
    _globals(pr)
    pr.add_argument("--instance")

    b = sub.add_parser("bohr", help="correlated points")
    bs = b.add_subparsers(dest="sub", required=True)
    bc = bs.add_parser("correlate", help="parity point of a weight and its correlation curve")
    bw = bs.add_parser("witness", help="end-to-end witness")
    for q in (bc, bw):
        _globals(q)
        q.add_argument("--weight")
        q.add_argument("--horizon", type=int)
    bc.add_argument("--m", type=int, dest="m")
    bw.add_argument("--instance")

    s = sub.add_parser("shadow", help="tracing, counterexample, specification checks")
    ss = s.add_subparsers(dest="sub", required=True)
    st = ss.add_parser("trace", help="trace random pseudo-orbits")
    _globals(st)
    st.add_argument("--m", type=int, dest="m")
    st.add_argument("--length", type=int)
    st.add_argument("--count", type=int)
    sc = ss.add_parser("counterexample", help="the non-shadowing counterexample suite")
    _globals(sc)
    sc.add_argument("--m-max", type=int, dest="m_max")
    sc.add_argument("--n-max", type=int, dest="n_max")
    sp = ss.add_parser("spec", help="modified almost specification check")
    _globals(sp)
    sp.add_argument("--targets", nargs="+")
    sp.add_argument("--n", type=int, dest="n")
    sp.add_argument("--eps-k", type=int, dest="eps_k")
    sp.add_argument("--g", nargs=2, metavar=("FAMILY", "C"))

    v = sub.add_parser("validate", help="check a config file against the schema")
    v.add_argument("path")
    return p


_SECTION_FLAGS = {
    "entropy": ("method",),
    "horseshoe": ("M", "cylinder", "n_blocks", "eta"),
    "prune": ("instance",),
    "bohr": ("weight", "horizon", "m", "instance"),
    "shadow": ("m", "length", "count", "m_max", "n_max", "targets", "n", "eps_k", "g"),
}


def merge_flags(cfg: dict, args: argparse.Namespace) -> dict:
    cfg = json.loads(json.dumps(cfg))
    for key in ("seed", "max_states", "max_depth", "out"):
        if getattr(args, key, None) is not None:
            cfg[key] = getattr(args, key)
    if getattr(args, "system", None):
        cfg["system"] = _system_arg(args.system)
    section = args.command
    for flag in _SECTION_FLAGS.get(section, ()):
        val = getattr(args, flag, None)
        if val is not None:
            if flag == "g":
                val = [val[0], float(val[1])]
            cfg.setdefault(section, {})[flag] = val
    return cfg


def run(command: tuple[str, ...], cfg: dict) -> tuple[int, dict, dict | None]:
    """Execute one command on a validated config; returns (exit code, report, table)."""
    echo = {k: v for k, v in cfg.items() if k != "out"}
    report: dict = {"command": " ".join(command), "version": __version__, "config": echo,
                    "status": "ok", "results": None, "certificates": None, "timings": {}}
    t0 = time.perf_counter()
    table = None
    old = os.environ.get("SEMIHORSE_MAX_STATES")
    if "max_states" in cfg:
        os.environ["SEMIHORSE_MAX_STATES"] = str(cfg["max_states"])
    code = 0
    try:
        table = COMMANDS[command](cfg, report)
    except (StructuredFailure, ResourceError) as e:
        report["status"] = "failure"
        report["error"] = e.to_dict()
        code = 2
    finally:
        if "max_states" in cfg:
            if old is None:
                os.environ.pop("SEMIHORSE_MAX_STATES", None)
            else:
                os.environ["SEMIHORSE_MAX_STATES"] = old
    report["timings"]["total_seconds"] = round(time.perf_counter() - t0, 4)
    return code, report, table


def _emit(report: dict, table: dict | None, out: str | None) -> None:
    text = report.pop("text", None)
    payload = json_text(_jsonable(report))
    if out:
        atomic_write_text(out, payload)
        if table is not None:
            from .reporting import csv_text

            csv = table["text"] if "text" in table else csv_text(table["columns"], table["rows"])
            atomic_write_text(Path(out).with_suffix(".csv"), csv)
        if text:
            atomic_write_text(Path(out).with_suffix(".txt"), text)
    else:
        sys.stdout.write(payload)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 1 if e.code else 0
    if args.command == "validate":
        try:
            cfg, text = load_config(args.path)
            diags = validate_config(cfg, text)
        except ConfigError as e:
            diags = e.diagnostics
        for d in diags:
            print(f"{args.path}: {d}", file=sys.stderr)
        print("ok" if not diags else f"{len(diags)} problem(s)")
        return 1 if diags else 0
    command = (args.command,) + ((args.sub,) if getattr(args, "sub", None) else ())
    try:
        cfg, text = load_config(args.config)
        cfg = merge_flags(cfg, args)
        diags = validate_config(cfg, text)
        if diags:
            raise ConfigError(diags)
    except ConfigError as e:
        for d in e.diagnostics:
            print(f"config: {d}", file=sys.stderr)
        return 1
    except DomainError as e:
        print(f"config: {e}", file=sys.stderr)
        return 1
    try:
        code, report, table = run(command, cfg)
    except DomainError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    _emit(report, table, cfg.get("out"))
    if code:
        print(f"{report['error']['kind']}: {report['error']['message']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
