"""Command-line front end.

Exit codes: 0 when every hard invariant passes, 1 when one fails, 2 for
usage, configuration or expression errors.
"""

import argparse
import csv
import io
import json
import math
import sys

import jsonschema
import numpy as np

from . import __version__, expr, fock, ideal, linalg, morita, reps, systems

# Linking-system dimensions grow like (1+k)^2 dim Y(n); deeper runs go through the library.
MORITA_MAX_LEVEL = 5

SUITES = ("axioms", "shifts", "gauge", "ideal", "sphere", "reps", "wold", "morita")

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "system": systems.SYSTEM_SCHEMA,
        "N": {"type": "integer", "minimum": 1},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "tol_ideal": {"type": "number", "exclusiveMinimum": 0},
        "suites": {"type": "array", "items": {"enum": list(SUITES)}},
        "out": {"type": "string"},
        "seed": {"type": "integer"},
        "samples": {"type": "integer", "minimum": 1},
        "k": {"type": "integer", "minimum": 1},
    },
    "required": ["system"],
    "additionalProperties": False,
}

REP_SCHEMA = {
    "type": "object",
    "properties": {
        "system": systems.SYSTEM_SCHEMA,
        "dims": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "T1": {"type": "object", "additionalProperties": {
            "type": "array", "items": {"type": "array", "items": {"type": ["number", "string"]}}}},
    },
    "required": ["dims", "T1"],
    "additionalProperties": False,
}


class ConfigError(Exception):
    pass


# -- config and output ----------------------------------------------------------


def load_config(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if isinstance(raw, dict) and "kind" in raw:
        raw = {"system": raw}
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid config: {exc.message}") from exc
    cfg = dict(raw)
    if "N" in cfg:
        cfg["system"] = dict(cfg["system"], N=cfg["N"])
    return cfg


def make_system(cfg):
    try:
        return systems.build_system(cfg["system"])
    except (ValueError, jsonschema.ValidationError) as exc:
        raise ConfigError(str(exc)) from exc


def clean(obj):
    """JSON-ready copy with floats rounded to 15 significant digits."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return float(f"{x:.15g}")
    if isinstance(obj, (complex, np.complexfloating)):
        return [clean(obj.real), clean(obj.imag)]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    return obj


def render(report, fmt):
    if fmt == "json":
        return json.dumps(clean(report), sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["table", "n", "value", "exact"])
    for name, rows in sorted(_tables(report.get("result", {})).items()):
        for row in rows:
            r = clean(list(row))
            writer.writerow([name] + r + [""] * (3 - len(r)))
    return buf.getvalue()


def _tables(result, prefix=""):
    """Collect [n, value, (exact)] tables nested anywhere in a result."""
    out = {}
    if isinstance(result, dict):
        for key, val in result.items():
            name = f"{prefix}{key}"
            if (isinstance(val, list) and val and all(isinstance(r, (list, tuple)) for r in val)
                    and all(len(r) in (2, 3) and isinstance(r[0], (int, np.integer)) for r in val)):
                out[name] = val
            else:
                out.update(_tables(val, name + "."))
    elif isinstance(result, list):
        for i, val in enumerate(result):
            out.update(_tables(val, f"{prefix}{i}."))
    return out


def emit(report, args):
    text = render(report, args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def base_report(command, cfg, args):
    return {"command": command, "config": cfg, "version": __version__,
            "tol": args.tol, "seed": args.seed}


# -- suites -----------------------------------------------------------------------


def suite_axioms(X, ctx):
    rep = systems.validate_system(X, ctx["tol"])
    return {"fiber_dims": list(X.fiber_dims), **rep.to_dict()}, rep.passed


def suite_shifts(X, ctx):
    F = fock.TruncatedFock(X)
    semi = 0.0
    for n in range(1, X.N):
        for m in range(1, X.N - n + 1):
            for i in range(X.fiber_dims[n]):
                zi = X.fiber_basis_vector(n, i)
                for j in range(X.fiber_dims[m]):
                    semi = max(semi, fock.semigroup_residual(F, n, m, zi, X.fiber_basis_vector(m, j)))
    adj = max(fock.adjoint_action_check(F, n, X.fiber_basis_vector(n, i))
              for n in range(1, X.N + 1) for i in range(X.fiber_dims[n]))
    recon = max(linalg.op_norm(ideal.reconstruct_tail_projection(F, n).to_dense() - F.Rp(n).to_dense())
                for n in range(1, min(4, X.N) + 1))
    out = {"semigroup_residual": semi, "adjoint_residual": adj, "tail_reconstruction": recon}
    return out, semi <= ctx["tol"] and adj <= ctx["tol"] and recon <= max(ctx["tol"], 1e-12)


def _sample_ops(X, F, rng, count=6):
    ops = []
    for _ in range(count):
        node = expr.random_expr(X, rng, depth=3)
        ops.append((expr.to_text(node), expr.evaluate(node, F)))
    return ops


def suite_gauge(X, ctx):
    F = fock.TruncatedFock(X)
    rng = np.random.default_rng(ctx["seed"])
    lam = np.exp(2j * np.pi * rng.random())
    mono = 0.0
    for n in range(1, X.N + 1):
        for i in range(X.fiber_dims[n]):
            S = F.basis_shift(n, i)
            mono = max(mono, np.max(np.abs(fock.gauge_conjugate(S, lam).to_dense() - lam ** n * S.to_dense())))
    band = fejer_gap = 0.0
    for _, S in _sample_ops(X, F, rng, 20):
        total = F.zero()
        for k in range(-X.N, X.N + 1):
            total = total + fock.spectral_component(S, k)
        band = max(band, float(np.max(np.abs(total.to_dense() - S.to_dense()), initial=0.0)))
        nrm = S.norm()
        for n in range(0, X.N + 1):
            fejer_gap = max(fejer_gap, fock.fejer(S, n).norm() - nrm)
    out = {"monomial_residual": mono, "band_sum_residual": band, "fejer_excess": fejer_gap}
    return out, mono <= 1e-12 and band == 0.0 and fejer_gap <= 1e-10


def _standard_samples(X, F):
    out = []
    if X.q == 1:
        a = F.basis_shift(1, 0)
        b = F.basis_shift(1, 1) if X.fiber_dims[1] > 1 else a
        out.append(("[S1(e1),S1(e2)*]" if b is not a else "[S1(e1),S1(e1)*]",
                    fock.commutator(a, b.adj())))
        out.append(("phi(1)", F.left_action([1.0])))
    else:
        out.append(("phi(1)", F.left_action(np.ones(X.q))))
        out.append(("I - sum S1 S1*", F.identity() - ideal.reconstruct_tail_projection(F, 1)))
    out.append(("Q3", F.Q(min(3, X.N))))
    return out


def suite_ideal(X, ctx):
    F = fock.TruncatedFock(X)
    rng = np.random.default_rng(ctx["seed"])
    lam = np.exp(2j * np.pi * rng.random())
    rows, ok = [], True
    for name, S in _standard_samples(X, F):
        rep = ideal.decay_scan(S, tol_ideal=ctx["tol_ideal"], op=name)
        tails = [v for _, v, _ in rep.tail_norms]
        mono = all(tails[i + 1] <= tails[i] + 1e-12 for i in range(len(tails) - 1))
        dom = all(q <= t + 1e-12 for (_, q, _), t in zip(rep.norms, tails))
        g = ideal.decay_scan(fock.gauge_conjugate(S, lam), tol_ideal=ctx["tol_ideal"])
        gauge = max(abs(a[1] - b[1]) for a, b in zip(rep.norms, g.norms))
        ok = ok and mono and dom and gauge <= 1e-12 and g.verdict == rep.verdict
        rows.append({**rep.to_dict(), "tail_monotone": mono, "dominated": dom,
                     "gauge_deviation": gauge})
    gen = ideal.generated_by_Qn_check(F, _standard_samples(X, F), tol_ideal=ctx["tol_ideal"])
    if gen.applicable:
        ok = ok and gen.passed
    return {"scans": rows, "generated_by_Q": gen.to_dict()}, ok


def suite_sphere(X, ctx):
    if X.label != "symmetric":
        return {"skipped": "sphere comparison applies to symmetric systems"}, True
    d = X.fiber_dims[1]
    rows, ok = [], True
    coeff_sets = [[1.0] + [0.0] * d, [1.0, -1.0] + [0.0] * (d - 1), [1.0] * d + [-1.0]]
    for c in coeff_sets:
        rep = ideal.sphere_compare(d, c, X.N, ctx["samples"], ctx["seed"],
                                   n_star=max(1, X.N - 1), system=X)
        rows.append(rep.to_dict())
        ok = ok and rep.gap <= 0.1
    return {"comparisons": rows}, ok


def _partner_rep(X, rng):
    if X.label == "quiver":
        return reps.quiver_coisometric_rep(X)
    if X.label in ("symmetric", "product"):
        z = ideal.sphere_points(X.fiber_dims[1], samples=1, seed=int(rng.integers(2 ** 31)), grid=0)[-1]
        return reps.evaluation_rep(X, z)
    return None


def suite_reps(X, ctx):
    rng = np.random.default_rng(ctx["seed"])
    fr = reps.fock_rep(X, ctx["tol"])
    shift_match = 0.0
    F = fock.TruncatedFock(X)
    for n in range(1, X.N + 1):
        for i in range(X.fiber_dims[n]):
            shift_match = max(shift_match, float(np.max(np.abs(fr.T_basis(n, i) - F.basis_shift(n, i).to_dense()))))
    cls = reps.classify(fr, tol=ctx["tol"])
    out = {"fock": {"multiplicativity": fr.consistency.residual, "shift_match": shift_match,
                    "classification": cls.to_dict()}}
    ok = shift_match <= ctx["tol"] and cls.pure and not cls.essential
    partner = _partner_rep(X, rng)
    if partner is not None:
        pc = reps.classify(partner, tol=ctx["tol"])
        out["partner"] = {"multiplicativity": partner.consistency.residual,
                          "classification": pc.to_dict()}
        ok = ok and pc.fully_coisometric and pc.essential
        if X.label == "symmetric":
            d = X.fiber_dims[1]
            vanishing = expr.parse_expr(
                " + ".join(f"S1[e{i + 1}] * S1[e{i + 1}]~" for i in range(d)) + " - I", X)
            worst, _ = reps.kernel_ideal_check(partner, [("sum-minus-identity", vanishing)])
            out["partner"]["kernel_ideal"] = worst
            ok = ok and worst <= 1e-9
    return out, ok


def suite_wold(X, ctx):
    rng = np.random.default_rng(ctx["seed"])
    fr = reps.fock_rep(X, ctx["tol"])
    partner = _partner_rep(X, rng)
    rep = reps.direct_sum(fr, partner) if partner is not None else fr
    split = reps.wold_decompose(rep, tol=ctx["tol"])
    target_i = np.eye(rep.dim)[:, :fr.dim]
    target_c = np.eye(rep.dim)[:, fr.dim:]
    angle_i = linalg.subspace_distance(split.induced_subspace, target_i)
    angle_c = linalg.subspace_distance(split.coisometric_subspace, target_c)
    res = split.residuals
    ok = (angle_i <= 1e-8 and angle_c <= 1e-8 and res["hypothesis"] <= ctx["tol"]
          and res["induced_invariance"] <= 1e-9 and res["coisometric_invariance"] <= 1e-9)
    return {"angle_induced": angle_i, "angle_coisometric": angle_c,
            "induced_dim": split.induced_subspace.shape[1],
            "coisometric_dim": split.coisometric_subspace.shape[1], "residuals": res}, ok


def suite_morita(X, ctx):
    if X.q != 1:
        return {"skipped": "Morita context needs a single-vertex system"}, True
    k = ctx.get("k", 2)
    X = X.truncated(min(X.N, MORITA_MAX_LEVEL))
    mc = morita.build_context(k, X)
    rng = np.random.default_rng(ctx["seed"])
    words = [morita.random_word(mc, rng) for _ in range(ctx.get("words", 20))]
    comp = morita.compression_check(mc, words)
    FY = mc.FY
    a = FY.basis_shift(1, 0)
    S = fock.commutator(a, a.adj())
    t1 = morita.linking_shift(mc, morita.LinkingElement.random(mc, 0, rng, "2")).normalized()
    t2 = morita.linking_shift(mc, morita.LinkingElement.random(mc, 0, rng, "1")).normalized()
    tr = morita.ideal_transfer_check(mc, t1, t2, S, tol_ideal=ctx["tol_ideal"])
    zdims = [mc.z_dim(n) for n in range(X.N + 1)]
    ok = (mc.checks["passed"] and comp.p_residual <= 1e-10 and comp.q_residual <= 1e-10
          and comp.direct_vs_matrix <= 1e-10 and comp.norm_preservation <= 1e-10
          and comp.invariance <= 1e-12 and tr.violations == 0)
    if k == 1:
        ok = ok and comp.p_residual == 0.0 and comp.q_residual == 0.0
    return {"k": k, "N": X.N, "context": mc.checks, "compression": comp.to_dict(), "transfer": tr.to_dict(),
            "z_dims": zdims, "z_subproduct_residual": morita.z_subproduct_residual(mc)}, ok


SUITE_FUNCS = {
    "axioms": suite_axioms, "shifts": suite_shifts, "gauge": suite_gauge, "ideal": suite_ideal,
    "sphere": suite_sphere, "reps": suite_reps, "wold": suite_wold, "morita": suite_morita,
}


def run_suite(cfg, tol=1e-10, seed=0):
    """Run the configured suites; returns (result dict, all hard invariants passed)."""
    X = make_system(cfg)
    ctx = {"tol": cfg.get("tol", tol), "tol_ideal": cfg.get("tol_ideal", ideal.TOL_IDEAL),
           "seed": cfg.get("seed", seed), "samples": cfg.get("samples", 1000)}
    if "k" in cfg:
        ctx["k"] = cfg["k"]
    results, ok = {}, True
    for name in cfg.get("suites", SUITES):
        try:
            res, passed = SUITE_FUNCS[name](X, ctx)
        except (ValueError, reps.RepresentationError) as exc:
            res, passed = {"error": str(exc)}, False
        results[name] = {"passed": passed, **res}
        ok = ok and passed
    return results, ok


# -- commands ---------------------------------------------------------------------


def cmd_build(args):
    cfg = load_config(args.config)
    X = make_system(cfg)
    rep = systems.validate_system(X, args.tol)
    result = {"system": repr(X), "fiber_dims": list(X.fiber_dims),
              "labels": [list(f.labels) for f in X.fibers], "validation": rep.to_dict()}
    return base_report("build", cfg, args) | {"result": result, "passed": rep.passed}, rep.passed


def cmd_verify(args):
    cfg = load_config(args.config)
    cfg.setdefault("seed", args.seed)
    result, ok = run_suite(cfg, args.tol, args.seed)
    return base_report("verify", cfg, args) | {"result": result, "passed": ok}, ok


def _parse_op(args, X):
    try:
        return expr.parse_expr(args.op, X)
    except expr.ExprError as exc:
        raise ConfigError(f"expression error at {exc}") from exc


def cmd_scan(args):
    cfg = load_config(args.config)
    X = make_system(cfg)
    node = _parse_op(args, X)
    S = expr.evaluate(node, fock.TruncatedFock(X))
    rep = ideal.decay_scan(S, tol_ideal=cfg.get("tol_ideal", ideal.TOL_IDEAL), op=expr.to_text(node))
    result = rep.to_dict() | {"degrees": sorted(expr.degrees(node))}
    return base_report("scan", cfg, args) | {"result": result, "passed": True}, True


def cmd_cpnorm(args):
    cfg = load_config(args.config)
    X = make_system(cfg)
    node = _parse_op(args, X)
    S = expr.evaluate(node, fock.TruncatedFock(X))
    est = ideal.cp_seminorm(S, args.nstar)
    result = {"op": expr.to_text(node), "estimate": est.estimate, "n_star": est.n_star,
              "certificate": [[n, v] for n, v in est.certificate]}
    return base_report("cpnorm", cfg, args) | {"result": result, "passed": True}, True


def cmd_sphere(args):
    cfg = load_config(args.config)
    X = make_system(cfg)
    if X.label != "symmetric":
        raise ConfigError("sphere comparison needs a symmetric system")
    try:
        coeffs = [complex(c) for c in args.coeffs.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad coefficient list: {args.coeffs}") from exc
    d = X.fiber_dims[1]
    if len(coeffs) != d + 1:
        raise ConfigError(f"need {d + 1} coefficients")
    coeffs = [c.real if c.imag == 0 else c for c in coeffs]
    rep = ideal.sphere_compare(d, coeffs, X.N, cfg.get("samples", 1000), args.seed,
                               n_star=args.nstar, system=X)
    return base_report("sphere", cfg, args) | {"result": rep.to_dict(), "passed": True}, True


def _load_rep(args, X):
    try:
        with open(args.rep) as fh:
            data = json.load(fh)
        jsonschema.validate(data, REP_SCHEMA)
        return reps.rep_from_json(data, X)
    except (OSError, json.JSONDecodeError, jsonschema.ValidationError, ValueError) as exc:
        raise ConfigError(f"invalid representation: {exc}") from exc


def cmd_rep(args):
    cfg = load_config(args.config)
    X = make_system(cfg)
    rep = _load_rep(args, X)
    cls = reps.classify(rep, tol=args.tol)
    tts = [linalg.op_norm(reps.ttilde(rep, n)[0]) for n in range(1, X.N + 1)]
    result = {"classification": cls.to_dict(), "multiplicativity": rep.consistency.residual,
              "ttilde_norms": [[n + 1, v] for n, v in enumerate(tts)],
              "contraction": all(v <= 1 + args.tol for v in tts)}
    return base_report("rep", cfg, args) | {"result": result, "passed": True}, True


def cmd_wold(args):
    cfg = load_config(args.config)
    X = make_system(cfg)
    rep = _load_rep(args, X)
    try:
        split = reps.wold_decompose(rep, tol=args.tol)
    except reps.WoldError as exc:
        result = {"error": str(exc), "n": exc.n}
        return base_report("wold", cfg, args) | {"result": result, "passed": False}, False
    res = split.residuals
    ok = res["induced_invariance"] <= 1e-9 and res["coisometric_invariance"] <= 1e-9
    result = {"induced_dim": split.induced_subspace.shape[1],
              "coisometric_dim": split.coisometric_subspace.shape[1],
              "induced_basis": split.induced_subspace, "residuals": res}
    return base_report("wold", cfg, args) | {"result": result, "passed": ok}, ok


def cmd_morita(args):
    cfg = load_config(args.config)
    X = make_system(cfg)
    ctx = {"tol": args.tol, "tol_ideal": cfg.get("tol_ideal", ideal.TOL_IDEAL),
           "seed": cfg.get("seed", args.seed), "k": cfg.get("k", 2),
           "words": cfg.get("samples", 20)}
    res, ok = suite_morita(X, ctx)
    return base_report("morita", cfg, args) | {"result": res, "passed": ok}, ok


def build_parser():
    p = argparse.ArgumentParser(prog="subproduct-lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    sub = p.add_subparsers(dest="command", required=True)
    for name, func in (("build", cmd_build), ("verify", cmd_verify), ("morita", cmd_morita)):
        s = sub.add_parser(name, parents=[common])
        s.add_argument("config")
        s.set_defaults(func=func)
    for name, func in (("scan", cmd_scan), ("cpnorm", cmd_cpnorm)):
        s = sub.add_parser(name, parents=[common])
        s.add_argument("--op", required=True)
        s.add_argument("config")
        if name == "cpnorm":
            s.add_argument("--nstar", type=int, default=None)
        s.set_defaults(func=func)
    s = sub.add_parser("sphere", parents=[common])
    s.add_argument("--coeffs", required=True)
    s.add_argument("--nstar", type=int, default=None)
    s.add_argument("config")
    s.set_defaults(func=cmd_sphere)
    for name, func in (("rep", cmd_rep), ("wold", cmd_wold)):
        s = sub.add_parser(name, parents=[common])
        s.add_argument("config")
        s.add_argument("rep")
        s.set_defaults(func=func)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report, ok = args.func(args)
    except ConfigError as exc:
        report = {"command": args.command, "version": __version__,
                  "error": str(exc), "passed": False}
        emit(report, argparse.Namespace(format="json", out=args.out))
        return 2
    emit(report, args)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
