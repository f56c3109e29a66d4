"""Machine checks of the acceptance criteria against report dictionaries."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class CriterionResult:
    cid: str
    name: str
    measured: object
    target: str
    passed: bool

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.cid} {self.name}: measured {_fmt(self.measured)} (target {self.target})"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _need(rep: dict, *keys):
    missing = [k for k in keys if k not in rep]
    if missing:
        raise SchemaError(f"report lacks fields: {', '.join(missing)}")


def _bedrock(r):
    _need(r, "round_trip", "soliton_translation", "drift", "dt_factor_if_rk4")
    f = r["dt_factor_if_rk4"]
    drift = max(r["drift"]["M"], r["drift"]["H"])
    return [
        CriterionResult("C1", "transform round trip", r["round_trip"], "<= 1e-12", r["round_trip"] <= 1e-12),
        CriterionResult("C1", "soliton translation error", r["soliton_translation"], "<= 1e-6", r["soliton_translation"] <= 1e-6),
        CriterionResult("C1", "M/H drift over [0,50]", drift, "<= 1e-8", drift <= 1e-8),
        CriterionResult("C1", "dt convergence factor", f, "in [12, 20]", 12.0 <= f <= 20.0),
    ]


def _oscint(r):
    _need(r, "statphase", "solver_check", "asymptotic", "lemma")
    out = [
        CriterionResult("C2", "phi values and Hessian determinants exact", r["statphase_phi_det_ok"], "exact", bool(r["statphase_phi_det_ok"])),
        CriterionResult("C2", "signatures 0 (x3) and 1 - sign xi exact", r["statphase_standard_signatures"], "exact", bool(r["statphase_signature_ok"])),
    ]
    sc = r["solver_check"]
    worst = max((row["difference"] / row["tolerance"] if row["tolerance"] > 0 else 0.0) for row in sc) if sc else 0.0
    out.append(CriterionResult("C9", "quadrature vs solver d_t f^ at t=5", worst, "difference/tolerance <= 1", all(row["ok"] for row in sc)))
    a = r["asymptotic"]
    out.append(CriterionResult("C9", "leading-term relative error decreasing", a["relative_errors"], "strictly decreasing", bool(a["strictly_decreasing"])))
    lm = r["lemma"]
    bound = -(1 + lm["alpha"]) + 0.1
    out.append(CriterionResult("C9", "no-critical-point decay slope", lm["noncritical_slope"], f"<= {bound:g}", lm["noncritical_slope"] <= bound))
    return out


def _semigroup(r):
    _need(r, "runs", "unprojected_ratio", "kernel_identities")
    out = []
    ki = r["kernel_identities"]
    worst = max(max(row["L_xi1"], row["L_xi2_minus_xi1"]) for row in ki)
    out.append(CriterionResult("C3", "L_c xi1 and L_c xi2 - xi1 (relative)", worst, "<= 1e-8", worst <= 1e-8))
    mir = max(row["miracle"] for row in ki)
    out.append(CriterionResult("C3", "dQ/dc identity residual", mir, "<= 1e-10", mir <= 1e-10))
    gram = max(row["gram"] for row in ki)
    out.append(CriterionResult("C3", "Gram matrix vs identity", gram, "<= 1e-8", gram <= 1e-8))
    for run in r["runs"]:
        ok = run["fitted_b"] > 0 and run["fit_r2"] >= 0.95
        out.append(CriterionResult("C8", f"decay rate at a={run['a']:g}", [run["fitted_b"], run["fit_r2"]], "b > 0, R^2 >= 0.95", ok))
    ratio = r["unprojected_ratio"]
    out.append(CriterionResult("C8", "kernel direction shows no decay", ratio, "in [0.5, 2]", 0.5 <= ratio <= 2.0))
    return out


def _decay(r):
    _need(r, "sup_exponent", "scaled_slope")
    e, s = r["sup_exponent"], r["scaled_slope"]
    return [
        CriterionResult("C4", "sup-norm exponent on [10, 200]", e, "-1/3 +- 0.05", abs(e + 1.0 / 3.0) <= 0.05),
        CriterionResult("C4", "scaled sup functional trend", s, "in [-0.02, 0.02]", -0.02 <= s <= 0.02),
    ]


def _scattering(r):
    _need(r, "modulus_variation", "phase_ratio", "region")
    out = [CriterionResult("C5", "|f^(xi*)| variation on [10, 100]", r["modulus_variation"], "<= 0.02", r["modulus_variation"] <= 0.02)]
    ratio, nominal = r["phase_ratio"], r["nominal_coefficient"]
    out.append(CriterionResult("C5", "arg f^ slope / |f^|^2", ratio, f"{nominal:.4g} within 10%", abs(ratio - nominal) <= 0.1 * abs(nominal)))
    reg = r["region"].get("derived", {})
    keys = sorted(reg, key=float)
    if len(keys) >= 2:
        first = reg[keys[0]]["max_normalized_error"]
        last = reg[keys[-1]]["max_normalized_error"]
        vals = [reg[k]["max_normalized_error"] for k in keys]
        ok = all(b <= a for a, b in zip(vals, vals[1:]))
        out.append(CriterionResult("C5", f"region error t={keys[0]} -> {keys[-1]}", vals, "non-increasing", ok))
    else:
        out.append(CriterionResult("C5", "region error", None, "two check times", False))
    return out


def _selfsimilar(r):
    _need(r, "collapse", "painleve", "lambda_selection", "comparison")
    col = r["collapse"]
    out = [CriterionResult("C6", "collapse differences", col, "decreasing", len(col) >= 2 and all(b < a for a, b in zip(col, col[1:])))]
    res = r["painleve"].get("ode_residual", np.inf)
    out.append(CriterionResult("C6", "Painleve ODE residual", res, "<= 1e-8", res <= 1e-8))
    sel = r["lambda_selection"]
    out.append(CriterionResult("C6", "lambda oracle", [sel.get("selected"), sel.get("ratio")], "unique, ratio >= 1e3",
                               bool(sel.get("unique")) and sel.get("ratio", 0) >= 1e3))
    ne = np.asarray(r["comparison"].get("normalized_error", []), float)
    if ne.size >= 4:
        half = ne.size // 2
        ok = bool(np.max(ne[half:]) <= np.max(ne[:half]))
    else:
        ok = False
    out.append(CriterionResult("C6", "normalized self-similar error on [20, T]", [float(ne[0]), float(ne[-1])] if ne.size else None,
                               "bounded (late max <= early max)", ok))
    return out


def _painleve(r):
    _need(r, "solution", "linear_response")
    res = r["solution"]["ode_residual"]
    out = [CriterionResult("C6", "Painleve ODE residual", res, "<= 1e-8", res <= 1e-8)]
    sel = r.get("lambda_selection")
    if sel:
        out.append(CriterionResult("C6", "lambda oracle", [sel["selected"], sel["ratio"]], "unique, ratio >= 1e3",
                                   bool(sel["unique"]) and sel["ratio"] >= 1e3))
    return out


def _stability(r):
    _need(r, "constraint_residuals", "c", "fitted_exponents", "virial_ledger")
    out = []
    cr = r.get("max_constraint_residual", max(abs(v) for v in r["constraint_residuals"]))
    out.append(CriterionResult("C7", "modulation constraints", cr, "<= 1e-9", cr <= 1e-9))
    dc = r.get("c_drift_late")
    out.append(CriterionResult("C7", "|c(T) - c(T/2)|", dc, "<= 1e-3", dc is not None and dc <= 1e-3))
    p = r["fitted_exponents"]["v1_H1w"][0]
    out.append(CriterionResult("C7", "exponent of ||v1||_{H^1_w}", p, "<= -1.0", p <= -1.0))
    out.append(CriterionResult("C7", "virial ledger non-increasing", r.get("virial_nonincreasing"), "True (1e-6 relative)", bool(r.get("virial_nonincreasing"))))
    return out


CHECKS = {
    "bedrock": _bedrock,
    "oscint_check": _oscint,
    "semigroup": _semigroup,
    "decay": _decay,
    "scattering": _scattering,
    "selfsimilar": _selfsimilar,
    "soliton_stability": _stability,
    "painleve": _painleve,
}


def check_report(report: dict, profile: str = "default") -> list:
    if profile != "default":
        raise SchemaError(f"unknown criteria profile {profile!r}")
    if not isinstance(report, dict) or "schema" not in report or "experiment" not in report:
        raise SchemaError("not an mkdv-lab report (missing schema/experiment)")
    exp = report["experiment"]
    if not str(report["schema"]).startswith(f"mkdv-lab/{exp}/"):
        raise SchemaError(f"schema tag {report['schema']!r} does not match experiment {exp!r}")
    if exp not in CHECKS:
        raise SchemaError(f"no criteria registered for experiment {exp!r}")
    return CHECKS[exp](report)
