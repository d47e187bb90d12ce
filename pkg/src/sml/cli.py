"""Batch front end: ``sml <area> <action> [input.json] [flags]``.

Every analysis reads one JSON document (a file path, ``-`` for stdin, or
nothing when a ``--preset`` supplies the data) and writes one JSON document or
a CSV table.  Exit status is 0 on success, 1 on a precondition or parse
error, and 2 when the element budget (``SML_BUDGET``) would be exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import circle_measures as cm
from . import rank_one_systems as r1
from .bimodule_measures import (
    BivariateMeasure,
    FiniteKoopmanModel,
    compare,
    disintegrate,
    eta_from_vectors,
    fiber_mixing_profile,
    fingerprint,
    maximal_spectral_type,
    snag_identity_check,
    transport_S,
    transport_identity_defect,
)
from .errors import BudgetExceeded, PreconditionError
from .group_masa import (
    GroupAlgebraElement,
    ahp_subsequence,
    cesaro_diagnostics,
    conditional_expectation,
    icc_check,
    malnormality_check,
    st_condition,
    stabilizer_Kg,
    summability_identity,
    wandering_test,
)
from .groups import GroupPresentationModel

SIG_DIGITS = 12

COMMANDS: dict[str, tuple[str, ...]] = {
    "measure": ("fourier", "wiener", "rajchman", "weakmix"),
    "rankone": ("build", "correlate"),
    "group": ("st", "kg", "malnormal", "icc"),
    "masa": ("condexp", "cesaro", "ahp", "wandering", "summability"),
    "bimodule": ("eta", "disintegrate", "fibers", "snag", "transport", "fingerprint"),
}

GROUP_PRESETS: dict[str, dict] = {
    "F2/a": {"kind": "free", "rank": 2, "marked": ["a"]},
    "Z2/a": {"kind": "abelian", "invariants": [0, 0], "marked": ["(1,0)"]},
    "hyperbolic": {"kind": "semidirect", "matrix": [[2, 1], [1, 1]], "marked": "acting_Z"},
}


@dataclass
class RunConfig:
    """One invocation: which analysis, on what input, with which overrides."""

    area: str
    action: str
    input: str | None = None
    horizon: int | None = None
    radius: int | None = None
    tol: float | None = None
    seed: int = 0
    format: str = "json"
    out: str | None = None
    K: int | None = None
    preset: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.area not in COMMANDS or self.action not in COMMANDS[self.area]:
            raise PreconditionError(f"unknown subcommand {self.area} {self.action}")
        if self.format not in ("json", "csv"):
            raise PreconditionError(f"format must be json or csv, got {self.format!r}")

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise PreconditionError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)


# ----------------------------------------------------------------------
# input and output


class InputError(PreconditionError):
    """Unreadable or malformed input, reported with its location."""


def load_document(path: str | None) -> dict:
    if path is None:
        return {}
    where = "<stdin>" if path == "-" else path
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{where}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{where}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise InputError(f"{where}:1:1: top-level JSON value must be an object")
    return doc


def _round(x: float) -> float:
    if not math.isfinite(x) or x == 0:
        return x
    return float(f"{x:.{SIG_DIGITS}g}")


def normalize(obj: Any) -> Any:
    """Plain JSON types with floats cut to 12 significant digits."""
    if isinstance(obj, dict):
        return {str(k): normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [normalize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return normalize(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (float, np.floating)):
        return _round(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return [_round(obj.real), _round(obj.imag)]
    return obj


def render(doc: dict, table: list[dict] | None, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(normalize(doc), sort_keys=True, indent=2) + "\n"
    rows = table if table is not None else [{"key": k, "value": v} for k, v in sorted(normalize(doc).items())]
    rows = normalize(rows)
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in row.items()})
    return buf.getvalue()


def _require(doc: dict, key: str):
    if key not in doc:
        raise InputError(f"input is missing required key {key!r}")
    return doc[key]


def _pick(override, doc: dict, key: str, default):
    if override is not None:
        return override
    return doc.get(key, default)


def _group_model(cfg: RunConfig, doc: dict) -> GroupPresentationModel:
    if "model" in doc:
        return GroupPresentationModel.from_json(doc["model"])
    if cfg.preset is not None:
        if cfg.preset not in GROUP_PRESETS:
            raise PreconditionError(f"unknown group preset {cfg.preset!r}; choose from {sorted(GROUP_PRESETS)}")
        return GroupPresentationModel.from_json(GROUP_PRESETS[cfg.preset])
    raise InputError("input needs a 'model' object or --preset")


def _vector(model, doc: dict, key: str) -> GroupAlgebraElement:
    return GroupAlgebraElement.parse(model, str(_require(doc, key)))


def _koopman(doc: dict) -> FiniteKoopmanModel:
    return FiniteKoopmanModel.from_json(_require(doc, "koopman"))


def _complex_vector(raw, n: int, name: str) -> np.ndarray:
    vals = np.array([complex(*v) if isinstance(v, list) else complex(v) for v in raw])
    if vals.size != n:
        raise PreconditionError(f"{name} needs {n} values, got {vals.size}")
    return vals


Result = tuple[dict, list[dict] | None]


# ----------------------------------------------------------------------
# measure


def _measure(doc: dict) -> cm.CircleMeasure:
    return cm.CircleMeasure.from_json(doc.get("measure", doc))


def measure_fourier(cfg: RunConfig, doc: dict) -> Result:
    mu = _measure(doc)
    N = _pick(cfg.horizon, doc, "horizon", 32)
    ns = np.arange(-N, N + 1)
    c = cm.fourier_coefficients(mu, ns)
    rows = [{"n": int(n), "re": v.real, "im": v.imag, "abs": abs(v)} for n, v in zip(ns, c)]
    return {"horizon": N, "total_mass": mu.total_mass, "coefficients": [[r["n"], r["re"], r["im"]] for r in rows]}, rows


def measure_wiener(cfg: RunConfig, doc: dict) -> Result:
    mu = _measure(doc)
    N = _pick(cfg.horizon, doc, "horizon", cm.DEFAULT_HORIZON)
    series = cm.wiener_atom_energy(mu, N)
    rows = [{"N": n, "value": v} for n, v in enumerate(series)]
    return {"horizon": N, "terminal": series[-1], "atom_energy": mu.atom_energy}, rows


def measure_rajchman(cfg: RunConfig, doc: dict) -> Result:
    mu = _measure(doc)
    N = _pick(cfg.horizon, doc, "horizon", 1000)
    prof = cm.rajchman_profile(mu, int(doc.get("N0", 1)), N)
    rows = [{"n": n, "re": v.real, "im": v.imag, "abs": abs(v)} for n, v in sorted(prof.coefficients.items())]
    return prof.summary(), rows


def measure_weakmix(cfg: RunConfig, doc: dict) -> Result:
    mu = _measure(doc)
    N = _pick(cfg.horizon, doc, "horizon", cm.DEFAULT_HORIZON)
    series = cm.weak_mixing_profile(mu, N)
    rows = [{"N": n, "value": v} for n, v in enumerate(series)]
    return {"horizon": N, "terminal": series[-1], "atom_mass": mu.atom_mass}, rows


# ----------------------------------------------------------------------
# rankone


def _tower(cfg: RunConfig, doc: dict) -> r1.Tower:
    if cfg.preset is not None:
        spec = r1.CutSpacerSpec(preset=cfg.preset)
    else:
        spec = r1.CutSpacerSpec.from_json(doc.get("spec", {"preset": "staircase"}))
    K = cfg.K if cfg.K is not None else int(doc.get("K", 1))
    return r1.build_tower(spec, K)


def rankone_build(cfg: RunConfig, doc: dict) -> Result:
    tower = _tower(cfg, doc)
    out = {
        "stage": tower.stage,
        "height": tower.height,
        "heights": list(tower.heights),
        "base_width": tower.base_width,
        "total_mass": tower.total_mass,
        "measure_preserving": r1.measure_preserving(tower),
    }
    rows = [{"stage": k, "height": h, "width": w} for k, (h, w) in enumerate(zip(tower.heights, tower.widths))]
    return out, rows


def rankone_correlate(cfg: RunConfig, doc: dict) -> Result:
    tower = _tower(cfg, doc)
    f = r1.centered_base_indicator(tower, doc.get("j"))
    M = _pick(cfg.horizon, doc, "horizon", tower.height - 1)
    seq = r1.correlation_sequence(tower, f, M)
    c0 = seq.values[0]
    ratio = np.abs(seq.values[1:]) / c0 if M >= 1 else np.zeros(0)
    out = {
        "stage": tower.stage,
        "horizon": M,
        "c0": c0,
        "max_ratio": float(ratio.max()) if ratio.size else 0.0,
        "max_truncated_mass": float(seq.truncated_mass.max()),
    }
    rows = [{"m": m, "c": c, "truncated_mass": t} for m, (c, t) in enumerate(zip(seq.values, seq.truncated_mass))]
    return out, rows


# ----------------------------------------------------------------------
# group


def group_st(cfg: RunConfig, doc: dict) -> Result:
    model = _group_model(cfg, doc)
    R = _pick(cfg.radius, doc, "radius", 8)
    F = doc.get("F")
    if F is None:
        F = [model.format(g) for g in model.ball(1) if not model.in_marked_subgroup(g)]
    return st_condition(model, F, R, doc.get("E_bound")).to_json(), None


def group_kg(cfg: RunConfig, doc: dict) -> Result:
    model = _group_model(cfg, doc)
    return stabilizer_Kg(model, str(_require(doc, "g"))).to_json(), None


def group_malnormal(cfg: RunConfig, doc: dict) -> Result:
    model = _group_model(cfg, doc)
    return malnormality_check(model, _pick(cfg.radius, doc, "radius", 3)).to_json(), None


def group_icc(cfg: RunConfig, doc: dict) -> Result:
    model = _group_model(cfg, doc)
    R = _pick(cfg.radius, doc, "radius", 3)
    return icc_check(model, R, doc.get("threshold")).to_json(), None


# ----------------------------------------------------------------------
# masa


def masa_condexp(cfg: RunConfig, doc: dict) -> Result:
    model = _group_model(cfg, doc)
    x = _vector(model, doc, "x")
    y = conditional_expectation(x)
    return {"x": x.format(), "E_A(x)": y.format(), "norm2": y.norm2, "residual_norm2": (x - y).norm2}, None


def masa_cesaro(cfg: RunConfig, doc: dict) -> Result:
    model = _group_model(cfg, doc)
    N = _pick(cfg.horizon, doc, "horizon", 20)
    tol = _pick(cfg.tol, doc, "tol", 1e-12)
    return cesaro_diagnostics(model, _vector(model, doc, "x"), str(_require(doc, "v")), N, tol).to_json(), None


def masa_ahp(cfg: RunConfig, doc: dict) -> Result:
    model = _group_model(cfg, doc)
    family = [GroupAlgebraElement.parse(model, s) for s in _require(doc, "family")]
    K_max = _pick(cfg.horizon, doc, "K_max", 100)
    return ahp_subsequence(model, family, str(_require(doc, "v")), int(doc.get("L", 5)), K_max).to_json(), None


def masa_wandering(cfg: RunConfig, doc: dict) -> Result:
    model = _group_model(cfg, doc)
    N = _pick(cfg.horizon, doc, "horizon", 20)
    tol = _pick(cfg.tol, doc, "tol", 1e-12)
    return wandering_test(model, _vector(model, doc, "zeta"), str(_require(doc, "v")), N, tol).to_json(), None


def masa_summability(cfg: RunConfig, doc: dict) -> Result:
    model = _group_model(cfg, doc)
    lhs, rhs = summability_identity(model, _vector(model, doc, "xi1"), _vector(model, doc, "xi2"), str(_require(doc, "v")))
    return {"lhs": lhs, "rhs": rhs, "defect": abs(lhs - rhs)}, None


# ----------------------------------------------------------------------
# bimodule


def bimodule_eta(cfg: RunConfig, doc: dict) -> Result:
    model = _group_model(cfg, doc)
    z1 = _vector(model, doc, "zeta1")
    z2 = _vector(model, doc, "zeta2") if "zeta2" in doc else z1
    eta = eta_from_vectors(model, z1, z2, truncation=doc.get("truncation"))
    out = eta.to_json()
    out["total_variation"] = eta.total_variation
    out["flip_equivalent"] = eta.flip_equivalent()
    return out, None


def _fibers(doc: dict):
    beta = BivariateMeasure.from_json(_require(doc, "measure"))
    return beta, disintegrate(beta, int(doc.get("axis", 1)), doc.get("base", "pushforward"))


def bimodule_disintegrate(cfg: RunConfig, doc: dict) -> Result:
    beta, fib = _fibers(doc)
    out = fib.to_json()
    out["reconstruction_exact"] = fib.reconstruct() == beta
    return out, None


def bimodule_fibers(cfg: RunConfig, doc: dict) -> Result:
    _, fib = _fibers(doc)
    N = _pick(cfg.horizon, doc, "horizon", 32)
    return fiber_mixing_profile(fib, N, int(doc.get("N0", 1))).to_json(), None


def bimodule_snag(cfg: RunConfig, doc: dict) -> Result:
    model = _koopman(doc)
    formula = doc.get("formula", "literal")
    trials = int(doc.get("trials", 0))
    if trials:
        rng = np.random.default_rng(cfg.seed)
        worst = 0.0
        rows = []
        for i in range(trials):
            f1, f2 = (_random_mean_zero(model, rng) for _ in range(2))
            entries = [model.elements[int(k)] for k in rng.integers(model.order, size=4)]
            _, _, d = snag_identity_check(model, f1, f2, *entries, formula=formula)
            worst = max(worst, d)
            rows.append({"trial": i, "defect": d})
        return {"formula": formula, "trials": trials, "seed": cfg.seed, "max_defect": worst}, rows
    n = model.n_points
    f1 = _complex_vector(_require(doc, "f1"), n, "f1")
    f2 = _complex_vector(doc["f2"], n, "f2") if "f2" in doc else f1
    g1, g2, h1, h2 = (doc.get(k, [0] * len(model.invariants)) for k in ("g1", "g2", "h1", "h2"))
    lhs, rhs, d = snag_identity_check(model, f1, f2, g1, g2, h1, h2, formula=formula)
    return {"formula": formula, "lhs": lhs, "rhs": rhs, "defect": d}, None


def _random_mean_zero(model: FiniteKoopmanModel, rng: np.random.Generator) -> np.ndarray:
    f = rng.standard_normal(model.n_points) + 1j * rng.standard_normal(model.n_points)
    return f - model.mean(f)


def bimodule_transport(cfg: RunConfig, doc: dict) -> Result:
    if "koopman" in doc:
        model = _koopman(doc)
        st = maximal_spectral_type(model)
        eta = transport_S(st.mu, model)
        out = {"max_spectral_type": st.mu, "transport": eta.to_json(), "defect": transport_identity_defect(model, st.f0)}
        return out, None
    H = _require(doc, "H")
    mu = np.asarray(_require(doc, "mu"), dtype=float)
    return {"transport": transport_S(mu, H).to_json()}, None


def _fingerprint(spec: dict):
    n_max = int(spec.get("n_max", 32))
    if "geometric" in spec:
        return fingerprint(n_max=n_max, geometric=float(spec["geometric"]))
    return fingerprint(_require(spec, "weights"), n_max, tail=float(spec.get("tail", 0.0)))


def bimodule_fingerprint(cfg: RunConfig, doc: dict) -> Result:
    fp = _fingerprint(doc)
    out = fp.to_json()
    if "compare" in doc:
        out["equal"] = compare(fp, _fingerprint(doc["compare"]))
    rows = [{"n": n, "mass": m, "weight": w} for n, (m, w) in enumerate(fp.blocks, start=1)]
    return out, rows


HANDLERS: dict[tuple[str, str], Callable[[RunConfig, dict], Result]] = {
    (area, action): globals()[f"{area}_{action}"] for area, actions in COMMANDS.items() for action in actions
}


# ----------------------------------------------------------------------
# entry points


def run(cfg: RunConfig) -> tuple[int, str]:
    """Execute one configuration; returns ``(exit_status, output_text)``."""
    doc = load_document(cfg.input)
    doc.update(cfg.extra)
    result, table = HANDLERS[(cfg.area, cfg.action)](cfg, doc)
    return 0, render(result, table, cfg.format)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sml", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON RunConfig file; command-line flags override it")
    areas = parser.add_subparsers(dest="area", required=True)
    for area, actions in COMMANDS.items():
        sub = areas.add_parser(area).add_subparsers(dest="action", required=True)
        for action in actions:
            p = sub.add_parser(action)
            p.add_argument("input", nargs="?", help="JSON input file, or - for stdin")
            p.add_argument("--horizon", type=int)
            p.add_argument("--radius", type=int)
            p.add_argument("--tol", type=float)
            p.add_argument("--seed", type=int)
            p.add_argument("--format", choices=("json", "csv"))
            p.add_argument("--out")
            p.add_argument("-K", type=int)
            p.add_argument("--preset")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    base: dict = {}
    if args.config:
        base = load_document(args.config)
    base.update(area=args.area, action=args.action)
    for key in ("input", "horizon", "radius", "tol", "seed", "format", "out", "K", "preset"):
        value = getattr(args, key)
        if value is not None:
            base[key] = value
    return RunConfig.from_dict(base)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        status, text = run(cfg)
    except BudgetExceeded as exc:
        print(f"sml: budget exhausted: {exc}", file=sys.stderr)
        return 2
    except (PreconditionError, KeyError, ValueError, TypeError) as exc:
        print(f"sml: error: {exc}", file=sys.stderr)
        return 1
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
