"""Scenario configuration: JSON schema, validation, object construction.

Configs are JSON documents; a ``preset`` field expands to a full built-in
config before validation, with user keys taking precedence.  Complex
matrix entries are [re, im] pairs.  Validation collects every violation
and reports them all at once; defaults are filled in and echoed back into
the run summary so an output directory is self-describing.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from qlyap import bloch, dynamics, hamiltonians, linalg, states

DEFAULTS = {
    "name": None,
    "description": "",
    "horizon": 500.0,
    "dt": None,
    "record_stride": 25,
    "snapshot_stride": 50,
    "orbit_samples": 2000,
}

INITIAL_DEFAULTS = {
    "seeds": 10,
    "seed_base": 1000,
    "exclude_antipodal": False,
}

ANALYSIS_DEFAULTS = {
    "critical_points": False,
    "invariant_residuals": False,
    "target_regularity": True,
    "m_max": None,
    "saddle_index": None,
    "trials": 50,
    "attraction_horizon": 400.0,
}


class ConfigError(Exception):
    """Carries the full list of validation failures."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {e}" for e in self.errors))


@dataclass
class ScenarioConfig:
    """Validated scenario with concrete numbers filled in."""

    name: str
    description: str
    levels: list
    couplings: dict  # (k, l) -> complex
    kappa: float
    target_spec: dict
    initial_spec: dict
    horizon: float
    dt: float | None
    record_stride: int
    snapshot_stride: int
    orbit_samples: int
    analysis: dict
    echo: dict = field(default_factory=dict)


def _parse_complex(value, errors, where):
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        try:
            return complex(float(value[0]), float(value[1]))
        except (TypeError, ValueError):
            pass
    errors.append(f"{where}: expected a number or [re, im] pair, got {value!r}")
    return 0j


def _parse_matrix(value, n, errors, where):
    if not isinstance(value, list) or len(value) != n:
        errors.append(f"{where}: expected {n} rows")
        return np.zeros((n, n), dtype=complex)
    out = np.zeros((n, n), dtype=complex)
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != n:
            errors.append(f"{where}[{i}]: expected {n} entries")
            continue
        for j, entry in enumerate(row):
            out[i, j] = _parse_complex(entry, errors, f"{where}[{i}][{j}]")
    return out


def load_config(path):
    """Read, expand and validate a scenario config file."""
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"{path}: JSON parse error at line {exc.lineno}: {exc.msg}"])
    return parse_config(raw)


def parse_config(raw):
    """Expand any preset reference, then validate into a ScenarioConfig."""
    from qlyap import presets  # local import; presets build raw config dicts

    errors = []
    if not isinstance(raw, dict):
        raise ConfigError(["config root must be a JSON object"])
    raw = dict(raw)
    preset_name = raw.pop("preset", None)
    if preset_name is not None:
        try:
            base = presets.preset_config(preset_name)
        except KeyError:
            raise ConfigError(
                [f"preset: unknown preset {preset_name!r}; available: {', '.join(presets.names())}"]
            )
        merged = _deep_merge(base, raw)
    else:
        merged = raw

    cfg = dict(DEFAULTS)
    for key in DEFAULTS:
        if key in merged:
            cfg[key] = merged[key]
    name = cfg["name"] or preset_name or "scenario"

    system = merged.get("system")
    levels, couplings, kappa = [], {}, 1.0
    if not isinstance(system, dict):
        errors.append("system: required object with 'levels' and 'couplings'")
    else:
        levels = system.get("levels")
        if not isinstance(levels, list) or len(levels) < 2:
            errors.append("system.levels: need a list of at least two energy levels")
            levels = [1.0, -1.0]
        n = len(levels)
        raw_coup = system.get("couplings", {})
        if not isinstance(raw_coup, dict):
            errors.append("system.couplings: expected an object keyed 'k,l'")
            raw_coup = {}
        for key, val in raw_coup.items():
            try:
                k, l = (int(x) for x in key.split(","))
            except ValueError:
                errors.append(f"system.couplings[{key!r}]: key must be 'k,l' with integers")
                continue
            if not (1 <= k < l <= n):
                errors.append(f"system.couplings[{key!r}]: need 1 <= k < l <= {n}")
                continue
            couplings[(k, l)] = _parse_complex(val, errors, f"system.couplings[{key!r}]")
        kappa = system.get("kappa", 1.0)
        if not isinstance(kappa, (int, float)) or kappa <= 0:
            errors.append(f"system.kappa: must be a positive number, got {kappa!r}")
            kappa = 1.0

    target_spec = merged.get("target")
    if not isinstance(target_spec, dict):
        errors.append("target: required object (diagonal | matrix | spectrum | exceptional)")
        target_spec = {"diagonal": None}
    forms = [k for k in ("diagonal", "matrix", "spectrum", "exceptional") if k in target_spec]
    if len(forms) != 1:
        errors.append(f"target: exactly one of diagonal/matrix/spectrum/exceptional, got {forms}")

    initial_spec = dict(INITIAL_DEFAULTS)
    merged_initial = merged.get("initial", {})
    if not isinstance(merged_initial, dict):
        errors.append("initial: expected an object")
        merged_initial = {}
    initial_spec.update(merged_initial)
    if "matrix" not in initial_spec:
        seeds = initial_spec.get("seeds")
        if not isinstance(seeds, int) or seeds < 0:
            errors.append(f"initial.seeds: must be a non-negative integer, got {seeds!r}")
            initial_spec["seeds"] = 0

    if not (isinstance(cfg["horizon"], (int, float)) and cfg["horizon"] > 0):
        errors.append(f"horizon: must be positive, got {cfg['horizon']!r}")
    if cfg["dt"] is not None and not (isinstance(cfg["dt"], (int, float)) and cfg["dt"] > 0):
        errors.append(f"dt: must be positive or null (auto), got {cfg['dt']!r}")
    for key in ("record_stride", "snapshot_stride", "orbit_samples"):
        if not (isinstance(cfg[key], int) and cfg[key] >= 1):
            errors.append(f"{key}: must be a positive integer, got {cfg[key]!r}")

    analysis = dict(ANALYSIS_DEFAULTS)
    merged_analysis = merged.get("analysis", {})
    if not isinstance(merged_analysis, dict):
        errors.append("analysis: expected an object")
        merged_analysis = {}
    analysis.update(merged_analysis)

    if errors:
        raise ConfigError(errors)

    echo = {
        "name": name,
        "description": cfg["description"],
        "system": {
            "levels": [float(x) for x in levels],
            "couplings": {f"{k},{l}": [v.real, v.imag] for (k, l), v in sorted(couplings.items())},
            "kappa": float(kappa),
        },
        "target": target_spec,
        "initial": {k: v for k, v in initial_spec.items()},
        "horizon": float(cfg["horizon"]),
        "dt": cfg["dt"],
        "record_stride": cfg["record_stride"],
        "snapshot_stride": cfg["snapshot_stride"],
        "orbit_samples": cfg["orbit_samples"],
        "analysis": analysis,
    }
    if preset_name:
        echo["preset"] = preset_name

    return ScenarioConfig(
        name=name,
        description=cfg["description"],
        levels=[float(x) for x in levels],
        couplings=couplings,
        kappa=float(kappa),
        target_spec=target_spec,
        initial_spec=initial_spec,
        horizon=float(cfg["horizon"]),
        dt=None if cfg["dt"] is None else float(cfg["dt"]),
        record_stride=int(cfg["record_stride"]),
        snapshot_stride=int(cfg["snapshot_stride"]),
        orbit_samples=int(cfg["orbit_samples"]),
        analysis=analysis,
        echo=echo,
    )


def _deep_merge(base, override):
    out = dict(base)
    for key, val in override.items():
        if key in out and isinstance(out[key], dict) and isinstance(val, dict):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = val
    return out


# -- object construction ------------------------------------------------------


def build_system(cfg):
    """ControlSystem from a validated config.

    Non-descending levels are sorted jointly with the couplings, and the
    same relabeling is applied to target/initial matrices, so a config is
    basis-consistent regardless of input ordering.
    """
    errors = []
    h0, h1, perm = hamiltonians.build_operators(cfg.levels, cfg.couplings)
    n = h0.dim
    target = _build_target(cfg, n, perm, errors)
    if errors:
        raise ConfigError(errors)
    try:
        system = dynamics.ControlSystem(h0, h1, cfg.kappa, target)
    except ValueError as exc:
        raise ConfigError([f"target: {exc}"])
    return system, perm


def _permute(mat, perm):
    idx = np.asarray(perm)
    return mat[np.ix_(idx, idx)]


def _build_target(cfg, n, perm, errors):
    spec = cfg.target_spec
    if "diagonal" in spec:
        diag = spec["diagonal"]
        if not isinstance(diag, list) or len(diag) != n:
            errors.append(f"target.diagonal: expected {n} values")
            return np.eye(n, dtype=complex) / n
        mat = np.diag(np.asarray(diag, dtype=float)).astype(complex)
    elif "matrix" in spec:
        mat = _parse_matrix(spec["matrix"], n, errors, "target.matrix")
    elif "spectrum" in spec:
        w = spec.get("spectrum")
        if not isinstance(w, list) or len(w) != n:
            errors.append(f"target.spectrum: expected {n} eigenvalues")
            return np.eye(n, dtype=complex) / n
        seed = spec.get("haar_seed", 0)
        u = states.haar_unitary(n, np.random.default_rng(seed))
        mat = linalg.hermitize(u @ np.diag(np.asarray(w, dtype=float)).astype(complex) @ u.conj().T)
    else:
        exc = spec.get("exceptional", {})
        try:
            w, u_val = float(exc["w"]), float(exc["u"])
            k, l = (int(x) for x in exc["pair"])
            alpha = float(exc.get("alpha", 0.0))
        except (KeyError, TypeError, ValueError):
            errors.append("target.exceptional: needs w, u, pair [k,l] and optional alpha")
            return np.eye(n, dtype=complex) / n
        if not (1 <= k < l <= n):
            errors.append(f"target.exceptional.pair: need 1 <= k < l <= {n}")
            return np.eye(n, dtype=complex) / n
        mat = np.eye(n, dtype=complex) * u_val
        mat[k - 1, k - 1] = mat[l - 1, l - 1] = 0.5 * (w + u_val)
        r = 0.5 * (w - u_val) * complex(math.cos(alpha), math.sin(alpha))
        mat[k - 1, l - 1] = r
        mat[l - 1, k - 1] = np.conj(r)
    return _permute(mat, perm)


def build_initial_states(cfg, system, perm):
    """List of (label, seed_or_None, rho0) runs for the scenario."""
    spec = cfg.initial_spec
    target = system.target0
    n = system.dim
    if "matrix" in spec:
        errors = []
        mat = _parse_matrix(spec["matrix"], n, errors, "initial.matrix")
        if errors:
            raise ConfigError(errors)
        rho0 = linalg.hermitize(_permute(mat, perm))
        return [("explicit", None, rho0)]
    out = []
    seed_base = int(spec.get("seed_base", 1000))
    if spec.get("perturb_target_v") is not None:
        v0 = float(spec["perturb_target_v"])
        for i in range(int(spec["seeds"])):
            seed = seed_base + i
            out.append((f"perturb-{i:03d}", seed, perturbed_state(target, v0, seed)))
        return out
    exclude_antipodal = bool(spec.get("exclude_antipodal", False))
    basis = bloch.build_basis(n) if exclude_antipodal else None
    sd = bloch.to_bloch(target, basis) if exclude_antipodal else None
    for i in range(int(spec["seeds"])):
        seed = seed_base + i
        rho0 = states.random_isospectral(target, seed)
        if exclude_antipodal:
            attempt = 0
            while np.linalg.norm(bloch.to_bloch(rho0, basis) + sd) < 0.05 and attempt < 100:
                attempt += 1
                rho0 = states.random_isospectral(target, seed + 900001 * attempt)
        out.append((f"seed-{i:03d}", seed, rho0))
    return out


def perturbed_state(target, v0, seed):
    """Isospectral state at prescribed Lyapunov distance from the target.

    Conjugates by exp(-i eps G) with a seeded random Hermitian direction G
    and bisects eps until V(rho0, target) = v0 to high relative accuracy.
    """
    n = target.shape[0]
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    g = linalg.hermitize(g)
    g -= (np.trace(g) / n) * np.eye(n)
    g /= np.linalg.norm(g)

    def v_of(eps):
        u = linalg.expm_skew(g, eps)
        rho = linalg.hermitize(u @ target @ u.conj().T)
        return dynamics.lyapunov(rho, target), rho

    hi = 1.0
    v_hi, _ = v_of(hi)
    grow = 0
    while v_hi < v0 and grow < 60:
        hi *= 2.0
        v_hi, _ = v_of(hi)
        grow += 1
    if v_hi < v0:
        raise ValueError(f"cannot reach perturbation level V={v0:g} along this direction")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        v_mid, _ = v_of(mid)
        if v_mid < v0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    _, rho0 = v_of(0.5 * (lo + hi))
    return rho0
