"""Command-line front end.

Exit codes: 0 success, 1 validation failure (bad or missing input),
2 infeasible or uncertified synthesis, 3 runtime or numerical failure,
64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from importlib import resources
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from . import __version__
from .analysis import LEMMAS, LkfWeights, dissipativity_index, lemma_gap, lkf_value
from .lmi import SynthesisScalars, build_theorem1, build_theorem2
from .lmi.affine import AssemblyError
from .lmi.sdpa import FEASIBILITY, MAX_EIG, export_sdpa
from .model import SCALAR_FIELDS, ModelError, model_from_dict, validate
from .simulator import (Gains, Scenario, ScenarioError, SignalError, SimulationError, run,
                        transmission_stats, write_csv)
from .synthesis import KNOWN, UNKNOWN, ExtractionError, synthesize

__all__ = ["main", "run_command", "load_preset", "PRESETS"]

log = logging.getLogger("ncts")

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2, 3, 64
PRESETS = ("case1", "case2", "case3")
SYNTH_SCALARS = ("eps1", "eps2", "eps3", "eps4", "eps_f")
MODEL_SCALARS = SCALAR_FIELDS + ("gamma",)


class InputError(Exception):
    """Bad user input; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- I/O helpers

def _read_json(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"file not found: {p}")
    try:
        with open(p) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{p}: invalid JSON ({exc})") from None


def _write_json(path: Path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_preset(name: str) -> dict:
    if name not in PRESETS:
        raise InputError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    text = resources.files("ncts").joinpath("data", f"{name}.json").read_text()
    return json.loads(text)


def _parse_overrides(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep or not key:
            raise InputError(f"override {item!r} is not key=value")
        if key not in MODEL_SCALARS + SYNTH_SCALARS:
            raise InputError(f"unknown scalar {key!r} in override; known: "
                             f"{', '.join(MODEL_SCALARS + SYNTH_SCALARS)}")
        try:
            out[key] = float(val)
        except ValueError:
            raise InputError(f"override {key}: {val!r} is not a number") from None
    return out


def _model_bundle(doc: dict, overrides: dict):
    """Model, synthesis scalars and fault mode from a model or preset document."""
    body = doc.get("model", doc) if isinstance(doc, dict) else doc
    try:
        model = model_from_dict(body)
    except (ModelError, ValueError, TypeError) as exc:
        raise InputError(f"invalid model: {exc}") from None
    scal = SynthesisScalars(**doc.get("scalars", {})) if "model" in doc else SynthesisScalars()
    mkw = {k: v for k, v in overrides.items() if k in MODEL_SCALARS}
    skw = {k: v for k, v in overrides.items() if k in SYNTH_SCALARS}
    try:
        if mkw:
            model = model.with_scalars(**mkw)
        if skw:
            scal = scal.with_overrides(**skw)
    except (ModelError, ValueError) as exc:
        raise InputError(str(exc)) from None
    rep = validate(model)
    if not rep.ok:
        raise InputError("model validation failed: " + "; ".join(rep.violations))
    return model, scal, doc.get("fault_mode", UNKNOWN) if "model" in doc else UNKNOWN


def _scenario(doc: dict, seed, step, horizon) -> Scenario:
    body = doc.get("scenario", doc)
    try:
        sc = Scenario.from_dict(body, seed=seed)
    except (ScenarioError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"invalid scenario: {exc}") from None
    if step is not None:
        sc.step = step
    if horizon is not None:
        sc.horizon = horizon
    return sc


def _read_trace(path) -> SimpleNamespace:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"file not found: {p}")
    with open(p, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise InputError(f"{p}: empty trace")
    head = rows[0]
    data = np.array(rows[1:], dtype=float)

    def cols(prefix):
        idx = [i for i, h in enumerate(head) if h == prefix or h.startswith(prefix + "_")
               and h[len(prefix) + 1:].isdigit()]
        if not idx:
            raise InputError(f"{p}: trace has no column {prefix!r}")
        return data[:, idx]

    return SimpleNamespace(t=data[:, head.index("t")], x1=cols("x1"), x2=cols("x2"),
                           y1=cols("y1"), w=cols("w"), meta={})


def _synthesize(model, scal, fault_mode):
    if fault_mode not in (KNOWN, UNKNOWN):
        raise InputError(f"fault_mode must be {KNOWN!r} or {UNKNOWN!r}")
    return synthesize(model, scal, fault_mode=fault_mode)


def _synth_exit(res) -> int:
    if not res.feasible:
        return EXIT_INFEASIBLE if res.status == "infeasible_certificate" else EXIT_RUNTIME
    return EXIT_OK if res.status == "feasible" else EXIT_INFEASIBLE


# ---------------------------------------------------------------- commands

def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_synthesize(args) -> int:
    doc = _read_json(args.model)
    model, scal, mode = _model_bundle(doc, _parse_overrides(args.override))
    res = _synthesize(model, scal, args.fault_mode or mode)
    out = _out_dir(args)
    _write_json(out / "certificate.json", res.to_dict())
    print(f"synthesis: {res.status}" + (f" ({res.reason})" if res.reason else ""))
    return _synth_exit(res)


def cmd_simulate(args) -> int:
    model, _, _ = _model_bundle(_read_json(args.model), _parse_overrides(args.override))
    cert = _read_json(args.certificate)
    if cert.get("status") != "feasible":
        raise InputError(f"certificate status is {cert.get('status')!r}, not 'feasible'")
    try:
        gains = Gains.from_dict(cert)
    except (KeyError, ValueError) as exc:
        raise InputError(f"invalid certificate: {exc}") from None
    sc = _scenario(_read_json(args.scenario), args.seed, args.step, args.horizon)
    return _simulate_and_write(model, gains, sc, _out_dir(args))


def _simulate_and_write(model, gains, sc, out: Path) -> int:
    try:
        trace = run(model, gains, sc)
    except (ScenarioError, SignalError) as exc:
        raise InputError(str(exc)) from None
    write_csv(trace, out / "trace.csv")
    stats = transmission_stats(trace)
    stats["seed"] = sc.seed
    stats["state_norm_initial"] = trace.state_norm(0)
    stats["state_norm_final"] = trace.state_norm(-1)
    stats["eq5_violations"] = int(trace.eq5_violation.sum())
    _write_json(out / "stats.json", stats)
    print(f"simulation: {trace.n_rows} rows, release ratio {stats['ratio']:.4f}, "
          f"|x(T)|/|x(0)| = {stats['state_norm_final'] / stats['state_norm_initial']:.3e}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    model, _, _ = _model_bundle(_read_json(args.model), {})
    trace = _read_trace(args.trace)
    rep = dissipativity_index(trace, model.diss, tol=args.tol)
    doc = {"dissipativity": rep.to_dict()}
    if args.certificate:
        cert = _read_json(args.certificate)
        if "decision" not in cert:
            raise InputError("certificate has no decision values")
        weights = LkfWeights.from_decision(cert["decision"])
        longest = max(model.zeta2, model.d2, model.tau2, model.theta_bar)
        times = [float(t) for t in trace.t if t >= longest - 1e-12]
        stride = max(1, len(times) // 200)
        doc["lkf"] = {"t": times[::stride],
                      "V": [lkf_value(trace, weights, t, model) for t in times[::stride]]}
    _write_json(_out_dir(args) / "analysis.json", doc)
    note = " (trace starts away from rest; inequality not required)" \
        if rep.nonzero_initial else ""
    print(f"dissipativity: J(T) = {rep.terminal:.6g}, min J = {rep.minimum:.6g}, "
          f"{'ok' if rep.ok else 'VIOLATED'}{note}")
    return EXIT_OK


def _verify_lemmas(rng, draws: int) -> dict:
    P = np.polynomial.polynomial
    worst = {k: np.inf for k in LEMMAS}
    for _ in range(draws):
        n = int(rng.integers(1, 4))
        A = rng.normal(size=(n, n))
        R = A @ A.T + 0.1 * np.eye(n)
        c = rng.uniform(-1, 1, size=(7, n))
        dc = P.polyder(c)
        a = float(rng.uniform(-2, 1))
        b = a + float(rng.uniform(0.1, 3))

        def x(s, c=c):
            return P.polyval(s, c).T

        def xd(s, dc=dc):
            return P.polyval(s, dc).T

        B = rng.normal(size=(n, n))
        O1 = -(B @ B.T + 0.1 * np.eye(n))
        m = int(rng.integers(1, 4))
        C = rng.normal(size=(m, m))
        O2 = C @ C.T + 0.1 * np.eye(m)
        F = rng.normal(size=(m, m))
        F /= max(1.0, np.linalg.norm(F, 2))
        w, v = np.linalg.eigh(R)
        Rh = (v * np.sqrt(w)) @ v.T
        K = rng.normal(size=(n, n))
        K /= max(1.0, np.linalg.norm(K, 2))
        cases = {
            "schur": {"Omega1": O1, "Omega2": O2, "Omega3": rng.normal(size=(m, n))},
            "norm_bound": {"M": rng.normal(size=(n, m)), "N": rng.normal(size=(m, n)),
                           "F": F, "eps": float(rng.uniform(0.1, 10))},
            "wirtinger_split": {"R": R, "a": a, "b": b, "x": x, "xdot": xd},
            "recip_convex": {"R": R, "M": Rh @ K @ Rh, "theta": float(rng.uniform(0.01, 0.99))},
            "jensen": {"W1": R, "a": a, "b": b, "x": x},
            "wirtinger_pi": {"R": R, "a": a, "b": b, "x": x, "xdot": xd},
        }
        for k, inp in cases.items():
            worst[k] = min(worst[k], lemma_gap(k, inp))
    return worst


def _verify_solver() -> dict:
    from .lmi.affine import NEG, PSD, Constraint, LmiSystem, VarRegistry
    from .lmi.sdpa import parse_sdpa
    from .numerics import BlockLayout
    from .solver import solve

    reg = VarRegistry()
    x = reg.scalar("x")
    lo = Constraint("lo", PSD, BlockLayout([1]))
    lo.add(1, 1, x - 2.0 * np.eye(1))
    hi = Constraint("hi", PSD, BlockLayout([1]))
    hi.add(1, 1, 3.0 * np.eye(1) - x)
    sol = solve(LmiSystem(reg, [lo, hi]))
    interval = sol.status == "feasible" and 2.0 <= float(sol.x[0]) <= 3.0
    bad = Constraint("pos", NEG, BlockLayout([1]))
    bad.add(1, 1, np.eye(1))
    infeasible = solve(LmiSystem(VarRegistry(), [bad])).status == "infeasible_certificate"
    text = export_sdpa(LmiSystem(reg, [lo, hi]))
    prob = parse_sdpa(text)
    roundtrip = prob.nvars == 1 and prob.blocks == [1, 1] and np.allclose(
        [blk[0, 0] for blk in prob.evaluate([2.5])], [0.5, 0.5])
    return {"interval_feasible": interval, "constant_infeasible": infeasible,
            "sdpa_roundtrip": bool(roundtrip)}


def cmd_verify(args) -> int:
    rng = np.random.default_rng(args.seed)
    worst = _verify_lemmas(rng, args.draws)
    fixtures = _verify_solver()
    ok_lemmas = {k: v >= -1e-8 for k, v in worst.items()}
    for k, v in worst.items():
        print(f"lemma {k:16s} worst gap {v: .3e}  {'PASS' if ok_lemmas[k] else 'FAIL'}")
    for k, v in fixtures.items():
        print(f"solver {k:21s} {'PASS' if v else 'FAIL'}")
    if args.out:
        _write_json(_out_dir(args) / "verify.json",
                    {"lemmas": worst, "fixtures": fixtures, "seed": args.seed,
                     "draws": args.draws})
    return EXIT_OK if all(ok_lemmas.values()) and all(fixtures.values()) else EXIT_RUNTIME


def cmd_export_sdpa(args) -> int:
    model, scal, mode = _model_bundle(_read_json(args.model), _parse_overrides(args.override))
    theorem = args.theorem or (1 if mode == KNOWN else 2)
    try:
        sys_ = build_theorem1(model, scalars=scal) if theorem == 1 else \
            build_theorem2(model, scalars=scal)
    except AssemblyError as exc:
        raise InputError(f"assembly failed: {exc}") from None
    text = export_sdpa(sys_, MAX_EIG if args.objective == MAX_EIG else FEASIBILITY)
    out = Path(args.out)
    if out.suffix != ".dat-s":
        out.mkdir(parents=True, exist_ok=True)
        out = out / f"theorem{theorem}.dat-s"
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)
    print(f"wrote {out} ({sys_.nvars} variables, {len(sys_.constraints)} blocks)")
    return EXIT_OK


def cmd_case(args) -> int:
    doc = load_preset(args.name)
    model, scal, mode = _model_bundle(doc, _parse_overrides(args.override))
    res = _synthesize(model, scal, mode)
    out = _out_dir(args)
    _write_json(out / "certificate.json", res.to_dict())
    print(f"{args.name}: synthesis {res.status}")
    code = _synth_exit(res)
    if code != EXIT_OK:
        return code
    sc = _scenario(doc, args.seed, args.step, args.horizon)
    return _simulate_and_write(model, Gains(res.K1, res.K2, res.W), sc, out)


# ---------------------------------------------------------------- entry

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ncts", description="Mixed-triggered reliable dissipative control of "
                                         "singular networked cascade systems.")
    p.add_argument("--version", action="version", version=f"ncts {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, seed=False, sim=False):
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--override", action="append", metavar="KEY=VALUE",
                        help="scalar override (repeatable)")
        if seed:
            sp.add_argument("--seed", type=int, default=0)
        if sim:
            sp.add_argument("--step", type=float, default=None, help="integration step (s)")
            sp.add_argument("--horizon", type=float, default=None, help="horizon (s)")

    sp = sub.add_parser("synthesize", help="model JSON -> certificate JSON")
    sp.add_argument("model")
    sp.add_argument("--fault-mode", choices=(KNOWN, UNKNOWN), default=None)
    common(sp)
    sp.set_defaults(func=cmd_synthesize)

    sp = sub.add_parser("simulate", help="model + certificate + scenario -> trace CSV")
    sp.add_argument("model")
    sp.add_argument("certificate")
    sp.add_argument("scenario")
    common(sp, seed=True, sim=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("analyze", help="trace CSV + model -> dissipativity/LKF JSON")
    sp.add_argument("trace")
    sp.add_argument("model")
    sp.add_argument("--certificate", default=None, help="certificate JSON for the LKF")
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--out", default=".")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("verify", help="lemma oracles and solver fixtures")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--draws", type=int, default=200)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("export-sdpa", help="model -> SDPA sparse file")
    sp.add_argument("model")
    sp.add_argument("--theorem", type=int, choices=(1, 2), default=None)
    sp.add_argument("--objective", choices=(FEASIBILITY, MAX_EIG), default=FEASIBILITY)
    common(sp)
    sp.set_defaults(func=cmd_export_sdpa)

    sp = sub.add_parser("case", help="run a preset end to end")
    sp.add_argument("name", choices=PRESETS)
    common(sp, seed=True, sim=True)
    sp.set_defaults(func=cmd_case)
    return p


def run_command(argv=None) -> int:
    level = os.environ.get("NCTS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SimulationError, ExtractionError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
