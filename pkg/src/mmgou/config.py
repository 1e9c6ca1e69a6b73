"""Experiment configuration: a versioned YAML/JSON document schema.

The document has two parts: a ``model`` declaration (either a discrete
``mmlifs`` model or a continuous ``map`` model) and run parameters.  Parsing
validates the whole document and reports *all* findings with dotted paths;
unknown keys are rejected everywhere.  A parsed configuration serializes back
to a normalized document (defaults filled), and re-parsing that document
yields an equal configuration.

Schema (version 1)::

    schema_version: 1
    model:
      kind: mmlifs | map
      states: [<label>, ...]
      # kind = mmlifs -- exactly one of P | Q must be given, here P:
      P: [[row-stochastic matrix]]
      coefficients:            # one entry per transition with P[from][to] > 0
        - from: <label>
          to: <label>
          log_abs: <distribution>        # law of log|A|
          sign_neg_prob: 0.0             # P[A < 0]
          intercept: <distribution>      # law of B
        # or, instead of the three fields above:
        #   joint_atoms: [{a: <float != 0>, b: <float>, prob: <float>}, ...]
      # kind = map:
      Q: [[intensity matrix]]
      epoch_rates: [<float>, ...]        # optional, >= exit rates
      zeta: [<levy component>, ...]      # one per state
      eta:  [<levy component>, ...]
      brownian_cov: [<float>, ...]       # optional, default zeros
      switch_jumps:                      # optional
        - from: <label>
          to: <label>
          zeta: <distribution>
          eta: <distribution>
        # or joint_atoms: [{zeta: f, eta: f, prob: f}, ...]
    task: solve-kappa | simulate-tail | constants | check-conditions |
          validate | mmgou-demo | upsilon-compare
    seed: 0                    # uint64
    samples: 100000            # [1000, 1e9]
    tolerance: 1.0e-6          # (0, 1]
    step: 0.01                 # (0, 10]
    horizon: 20.0              # (0, 1e6]
    epsilon: 0.05              # (0, 10]
    theta: null                # optional, >= 0 (upsilon-compare tilt)
    quantile_window: [0.99, 0.9999]   # 0.5 < lo < hi < 1
    workers: 1                 # [1, 256]
    output:
      directory: out
      formats: [json, csv]

Distribution documents: ``{family: <name>, <parameters>}`` with
``point_mass(value)``, ``two_point(x1, p, x2)``, ``uniform(a, b)``,
``normal(mean, var)``, ``lognormal(log_mean, log_var)``,
``negated_lognormal(log_mean, log_var)``, ``exponential(rate)``,
``negated_exponential(rate)``.  Levy components:
``{drift, gaussian_var, cp_rate, cp_jump: <distribution>}``.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from pathlib import Path

import yaml

from .chains import CtmcSpec, DtmcSpec, StateSpace
from .distributions import DistributionSpec
from .errors import ConfigError, MmgouError
from .kernels import CoefficientLaw, MmlifsSpec
from .levy import LevyComponentSpec, MapSpec, SwitchJump

SCHEMA_VERSION = 1

TASKS = (
    "solve-kappa",
    "simulate-tail",
    "constants",
    "check-conditions",
    "validate",
    "mmgou-demo",
    "upsilon-compare",
)

_DIST_FIELDS = {
    "point_mass": ("value",),
    "two_point": ("x1", "p", "x2"),
    "uniform": ("a", "b"),
    "normal": ("mean", "var"),
    "lognormal": ("log_mean", "log_var"),
    "negated_lognormal": ("log_mean", "log_var"),
    "exponential": ("rate",),
    "negated_exponential": ("rate",),
}

_PARAM_BOUNDS = {
    "samples": (1_000, 1_000_000_000),
    "tolerance": (0.0, 1.0),
    "step": (0.0, 10.0),
    "horizon": (0.0, 1_000_000.0),
    "epsilon": (0.0, 10.0),
    "workers": (1, 256),
}

_DEFAULTS = {
    "seed": 0,
    "samples": 100_000,
    "tolerance": 1.0e-6,
    "step": 0.01,
    "horizon": 20.0,
    "epsilon": 0.05,
    "theta": None,
    "quantile_window": [0.99, 0.9999],
    "workers": 1,
    "output": {"directory": "out", "formats": ["json", "csv"]},
}


class _Errors:
    def __init__(self):
        self.items = []

    def add(self, path: str, message: str):
        self.items.append((path, message))

    def check(self):
        if self.items:
            raise ConfigError(self.items)


def _require_mapping(doc, path, errors, allowed):
    if not isinstance(doc, dict):
        errors.add(path, f"expected a mapping, got {type(doc).__name__}")
        return False
    unknown = set(doc) - set(allowed)
    for key in sorted(unknown):
        errors.add(f"{path}.{key}", "unknown key")
    return True

def _get_number(doc, key, path, errors, default=None, required=False, integer=False):
    if key not in doc:
        if required:
            errors.add(f"{path}.{key}", "required field missing")
        return default
    val = doc[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        errors.add(f"{path}.{key}", f"expected a number, got {val!r}")
        return default
    if integer and int(val) != val:
        errors.add(f"{path}.{key}", f"expected an integer, got {val!r}")
        return default
    if not math.isfinite(float(val)):
        errors.add(f"{path}.{key}", "must be finite")
        return default
    return int(val) if integer else float(val)


def _parse_distribution(doc, path, errors):
    if not isinstance(doc, dict):
        errors.add(path, f"expected a distribution mapping, got {type(doc).__name__}")
        return None
    family = doc.get("family")
    if family not in _DIST_FIELDS:
        errors.add(f"{path}.family", f"unknown family {family!r}; valid: {sorted(_DIST_FIELDS)}")
        return None
    fields = _DIST_FIELDS[family]
    unknown = set(doc) - {"family", *fields}
    for key in sorted(unknown):
        errors.add(f"{path}.{key}", f"unknown key for family {family}")
    params = []
    for f in fields:
        params.append(_get_number(doc, f, path, errors, required=True))
    if any(p is None for p in params):
        return None
    try:
        return DistributionSpec(family, tuple(params))
    except MmgouError as exc:
        errors.add(path, str(exc))
        return None


def _parse_levy_component(doc, path, errors):
    if not _require_mapping(doc, path, errors, {"drift", "gaussian_var", "cp_rate", "cp_jump"}):
        return None
    drift = _get_number(doc, "drift", path, errors, default=0.0)
    var = _get_number(doc, "gaussian_var", path, errors, default=0.0)
    rate = _get_number(doc, "cp_rate", path, errors, default=0.0)
    jump = None
    if "cp_jump" in doc:
        jump = _parse_distribution(doc["cp_jump"], f"{path}.cp_jump", errors)
    if var is None or drift is None or rate is None:
        return None
    try:
        if jump is None:
            return LevyComponentSpec(drift, var, rate)
        return LevyComponentSpec(drift, var, rate, jump)
    except MmgouError as exc:
        errors.add(path, str(exc))
        return None


def _parse_matrix(doc, key, path, errors, n):
    val = doc.get(key)
    if not isinstance(val, list) or len(val) != n or any(
        not isinstance(row, list) or len(row) != n for row in val
    ):
        errors.add(f"{path}.{key}", f"expected a {n}x{n} matrix of numbers")
        return None
    for r, row in enumerate(val):
        for c, entry in enumerate(row):
            if isinstance(entry, bool) or not isinstance(entry, (int, float)):
                errors.add(f"{path}.{key}[{r}][{c}]", f"expected a number, got {entry!r}")
                return None
    return [[float(x) for x in row] for row in val]


def _parse_mmlifs(doc, path, errors):
    states_raw = doc.get("states")
    if not isinstance(states_raw, list) or not states_raw:
        errors.add(f"{path}.states", "expected a nonempty list of labels")
        return None
    states = StateSpace(tuple(str(s) for s in states_raw))
    n = len(states)
    P = _parse_matrix(doc, "P", path, errors, n)
    entries = doc.get("coefficients")
    if not isinstance(entries, list):
        errors.add(f"{path}.coefficients", "expected a list of transition entries")
        return None
    kernel = {}
    for idx, entry in enumerate(entries):
        epath = f"{path}.coefficients[{idx}]"
        if not _require_mapping(
            entry, epath, errors,
            {"from", "to", "log_abs", "sign_neg_prob", "intercept", "joint_atoms"},
        ):
            continue
        try:
            i = states.index(str(entry.get("from")))
            j = states.index(str(entry.get("to")))
        except MmgouError:
            errors.add(epath, f"unknown state in transition {entry.get('from')!r}->{entry.get('to')!r}")
            continue
        if "joint_atoms" in entry:
            atoms = entry["joint_atoms"]
            if not isinstance(atoms, list) or not atoms:
                errors.add(f"{epath}.joint_atoms", "expected a nonempty list")
                continue
            parsed = []
            ok = True
            for a_idx, atom in enumerate(atoms):
                apath = f"{epath}.joint_atoms[{a_idx}]"
                if not _require_mapping(atom, apath, errors, {"a", "b", "prob"}):
                    ok = False
                    continue
                a = _get_number(atom, "a", apath, errors, required=True)
                b = _get_number(atom, "b", apath, errors, required=True)
                p = _get_number(atom, "prob", apath, errors, required=True)
                if None in (a, b, p):
                    ok = False
                    continue
                parsed.append((a, b, p))
            if not ok:
                continue
            try:
                kernel[(i, j)] = CoefficientLaw(joint_atoms=tuple(parsed))
            except MmgouError as exc:
                errors.add(epath, str(exc))
            continue
        log_abs = _parse_distribution(entry.get("log_abs"), f"{epath}.log_abs", errors)
        p_neg = _get_number(entry, "sign_neg_prob", epath, errors, default=0.0)
        intercept = None
        if "intercept" in entry:
            intercept = _parse_distribution(entry["intercept"], f"{epath}.intercept", errors)
        if log_abs is None or p_neg is None:
            continue
        try:
            if intercept is None:
                kernel[(i, j)] = CoefficientLaw(log_abs, p_neg)
            else:
                kernel[(i, j)] = CoefficientLaw(log_abs, p_neg, intercept)
        except MmgouError as exc:
            errors.add(epath, str(exc))
    if P is None:
        return None
    errors.check()
    try:
        return MmlifsSpec(DtmcSpec(states, P), kernel)
    except MmgouError as exc:
        errors.add(path, str(exc))
        return None


def _parse_map(doc, path, errors):
    states_raw = doc.get("states")
    if not isinstance(states_raw, list) or not states_raw:
        errors.add(f"{path}.states", "expected a nonempty list of labels")
        return None
    states = StateSpace(tuple(str(s) for s in states_raw))
    n = len(states)
    Q = _parse_matrix(doc, "Q", path, errors, n)

    def comp_list(key):
        val = doc.get(key)
        if not isinstance(val, list) or len(val) != n:
            errors.add(f"{path}.{key}", f"expected one component per state ({n})")
            return None
        comps = []
        for k, comp_doc in enumerate(val):
            comp = _parse_levy_component(comp_doc, f"{path}.{key}[{k}]", errors)
            if comp is None:
                return None
            comps.append(comp)
        return tuple(comps)

    zeta = comp_list("zeta")
    eta = comp_list("eta")
    cov = None
    if "brownian_cov" in doc:
        raw = doc["brownian_cov"]
        if not isinstance(raw, list) or len(raw) != n:
            errors.add(f"{path}.brownian_cov", f"expected {n} numbers")
        else:
            cov = tuple(float(x) for x in raw)
    rates = None
    if "epoch_rates" in doc:
        raw = doc["epoch_rates"]
        if not isinstance(raw, list) or len(raw) != n:
            errors.add(f"{path}.epoch_rates", f"expected {n} numbers")
        else:
            rates = tuple(float(x) for x in raw)
    jumps = {}
    for idx, entry in enumerate(doc.get("switch_jumps", []) or []):
        epath = f"{path}.switch_jumps[{idx}]"
        if not _require_mapping(entry, epath, errors, {"from", "to", "zeta", "eta", "joint_atoms"}):
            continue
        try:
            i = states.index(str(entry.get("from")))
            j = states.index(str(entry.get("to")))
        except MmgouError:
            errors.add(epath, "unknown state in transition")
            continue
        if "joint_atoms" in entry:
            atoms = entry["joint_atoms"]
            parsed = []
            for a_idx, atom in enumerate(atoms if isinstance(atoms, list) else []):
                apath = f"{epath}.joint_atoms[{a_idx}]"
                if not _require_mapping(atom, apath, errors, {"zeta", "eta", "prob"}):
                    continue
                a = _get_number(atom, "zeta", apath, errors, required=True)
                b = _get_number(atom, "eta", apath, errors, required=True)
                p = _get_number(atom, "prob", apath, errors, required=True)
                if None not in (a, b, p):
                    parsed.append((a, b, p))
            try:
                jumps[(i, j)] = SwitchJump(joint_atoms=tuple(parsed))
            except MmgouError as exc:
                errors.add(epath, str(exc))
            continue
        zj = _parse_distribution(entry["zeta"], f"{epath}.zeta", errors) if "zeta" in entry else None
        ej = _parse_distribution(entry["eta"], f"{epath}.eta", errors) if "eta" in entry else None
        kwargs = {}
        if zj is not None:
            kwargs["zeta"] = zj
        if ej is not None:
            kwargs["eta"] = ej
        try:
            jumps[(i, j)] = SwitchJump(**kwargs)
        except MmgouError as exc:
            errors.add(epath, str(exc))
    if Q is None or zeta is None or eta is None:
        return None
    errors.check()
    try:
        return MapSpec(
            chain=CtmcSpec(states, Q),
            zeta=zeta,
            eta=eta,
            brownian_cov=cov,
            switch_jumps=jumps,
            epoch_rates=rates,
        )
    except MmgouError as exc:
        errors.add(path, str(exc))
        return None


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Validated configuration; equality compares normalized documents."""

    document: dict
    model: object  # MmlifsSpec | MapSpec

    def __eq__(self, other):
        return isinstance(other, ExperimentConfig) and self.document == other.document

    @property
    def model_kind(self) -> str:
        return self.document["model"]["kind"]

    @property
    def task(self) -> str:
        return self.document["task"]

    @property
    def seed(self) -> int:
        return self.document["seed"]

    @property
    def samples(self) -> int:
        return self.document["samples"]

    @property
    def tolerance(self) -> float:
        return self.document["tolerance"]

    @property
    def step(self) -> float:
        return self.document["step"]

    @property
    def horizon(self) -> float:
        return self.document["horizon"]

    @property
    def epsilon(self) -> float:
        return self.document["epsilon"]

    @property
    def theta(self):
        return self.document["theta"]

    @property
    def quantile_window(self) -> tuple:
        return tuple(self.document["quantile_window"])

    @property
    def workers(self) -> int:
        return self.document["workers"]

    @property
    def output_directory(self) -> str:
        return self.document["output"]["directory"]

    @property
    def output_formats(self) -> tuple:
        return tuple(self.document["output"]["formats"])

    def to_document(self) -> dict:
        return copy.deepcopy(self.document)

    def replace(self, **overrides) -> "ExperimentConfig":
        doc = self.to_document()
        for key, val in overrides.items():
            if val is None:
                continue
            if key in ("out", "directory"):
                doc["output"]["directory"] = str(val)
            elif key == "formats":
                doc["output"]["formats"] = list(val)
            else:
                doc[key] = val
        return parse_config(doc)


def parse_config(document: dict) -> ExperimentConfig:
    """Validate a configuration document, reporting every finding at once."""
    errors = _Errors()
    top_allowed = {
        "schema_version", "model", "task", "seed", "samples", "tolerance",
        "step", "horizon", "epsilon", "theta", "quantile_window", "workers",
        "output",
    }
    if not _require_mapping(document, "$", errors, top_allowed):
        errors.check()
    version = document.get("schema_version")
    if version != SCHEMA_VERSION:
        errors.add("$.schema_version", f"expected {SCHEMA_VERSION}, got {version!r}")
    task = document.get("task")
    if task not in TASKS:
        errors.add("$.task", f"expected one of {TASKS}, got {task!r}")

    norm = {"schema_version": SCHEMA_VERSION, "task": task}
    seed = _get_number(document, "seed", "$", errors, default=_DEFAULTS["seed"], integer=True)
    if seed is not None and not 0 <= seed < 2**64:
        errors.add("$.seed", "must fit in an unsigned 64-bit integer")
    norm["seed"] = seed
    for key in ("samples", "workers"):
        val = _get_number(document, key, "$", errors, default=_DEFAULTS[key], integer=True)
        lo, hi = _PARAM_BOUNDS[key]
        if val is not None and not lo <= val <= hi:
            errors.add(f"$.{key}", f"must lie in [{lo}, {hi}]")
        norm[key] = val
    for key in ("tolerance", "step", "horizon", "epsilon"):
        val = _get_number(document, key, "$", errors, default=_DEFAULTS[key])
        lo, hi = _PARAM_BOUNDS[key]
        if val is not None and not lo < val <= hi:
            errors.add(f"$.{key}", f"must lie in ({lo}, {hi}]")
        norm[key] = val
    theta = document.get("theta", None)
    if theta is not None:
        theta = _get_number(document, "theta", "$", errors)
        if theta is not None and theta < 0:
            errors.add("$.theta", "must be nonnegative")
    norm["theta"] = theta
    window = document.get("quantile_window", _DEFAULTS["quantile_window"])
    if (
        not isinstance(window, list)
        or len(window) != 2
        or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in window)
        or not (0.5 < window[0] < window[1] < 1.0)
    ):
        errors.add("$.quantile_window", "expected [lo, hi] with 0.5 < lo < hi < 1")
        window = _DEFAULTS["quantile_window"]
    norm["quantile_window"] = [float(window[0]), float(window[1])]
    out_doc = document.get("output", _DEFAULTS["output"])
    if _require_mapping(out_doc, "$.output", errors, {"directory", "formats"}):
        directory = out_doc.get("directory", _DEFAULTS["output"]["directory"])
        formats = out_doc.get("formats", _DEFAULTS["output"]["formats"])
        if not isinstance(directory, str) or not directory:
            errors.add("$.output.directory", "expected a nonempty string")
            directory = "out"
        if (
            not isinstance(formats, list)
            or not formats
            or any(f not in ("json", "csv") for f in formats)
        ):
            errors.add("$.output.formats", "expected a nonempty subset of [json, csv]")
            formats = ["json", "csv"]
        norm["output"] = {"directory": directory, "formats": sorted(set(formats))}
    else:
        norm["output"] = copy.deepcopy(_DEFAULTS["output"])

    model_doc = document.get("model")
    model = None
    if not isinstance(model_doc, dict):
        errors.add("$.model", "required mapping missing")
    else:
        kind = model_doc.get("kind")
        has_p = "P" in model_doc
        has_q = "Q" in model_doc
        if has_p == has_q:
            errors.add("$.model", "exactly one chain parameterization (P or Q) must be given")
        if kind == "mmlifs":
            allowed = {"kind", "states", "P", "coefficients"}
            ok = _require_mapping(model_doc, "$.model", errors, allowed)
            if not has_p:
                errors.add("$.model.P", "mmlifs models require the transition matrix P")
            elif ok:
                model = _parse_mmlifs(model_doc, "$.model", errors)
        elif kind == "map":
            allowed = {
                "kind", "states", "Q", "epoch_rates", "zeta", "eta",
                "brownian_cov", "switch_jumps",
            }
            ok = _require_mapping(model_doc, "$.model", errors, allowed)
            if not has_q:
                errors.add("$.model.Q", "map models require the intensity matrix Q")
            elif ok:
                model = _parse_map(model_doc, "$.model", errors)
        else:
            errors.add("$.model.kind", f"expected 'mmlifs' or 'map', got {kind!r}")
    errors.check()
    norm["model"] = _normalize_model_doc(model_doc)
    return ExperimentConfig(norm, model)


def _normalize_model_doc(model_doc: dict) -> dict:
    doc = copy.deepcopy(model_doc)
    doc["states"] = [str(s) for s in doc["states"]]
    return doc


def parse_config_file(path) -> ExperimentConfig:
    with open(Path(path), "r", encoding="utf-8") as fh:
        document = yaml.safe_load(fh)
    if not isinstance(document, dict):
        raise ConfigError([("$", "configuration document must be a mapping")])
    return parse_config(document)


def dump_config(config: ExperimentConfig) -> str:
    return yaml.safe_dump(config.to_document(), sort_keys=True)
