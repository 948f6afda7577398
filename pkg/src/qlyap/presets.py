"""Built-in scenario presets.

Each preset is a complete config dict reproducing one regime of the
convergence theory: the two-level dichotomy (off-equator targets converge,
equator targets only reach the orbit), pseudo-pure targets and their
exceptional periodic-orbit family, the stationary generic case with its
n! critical points, the worked three-level commutator example, the
regular non-stationary case, the two non-ideal (centre) families, and the
saddle-attraction witness search.
"""

import math

_OFF = 0.3 / math.sqrt(2.0)  # tilted two-level target: 45 deg off the pole, eigs (0.8, 0.2)

_SYS2 = {"levels": [0.5, -0.5], "couplings": {"1,2": 1.0}, "kappa": 1.0}
_SYS3_IDEAL = {
    "levels": [1.2, 0.1, -1.3],
    "couplings": {"1,2": 1.0, "1,3": 1.0, "2,3": 1.0},
    "kappa": 1.0,
}
_SYS3_MISSING = {"levels": [1.2, 0.1, -1.3], "couplings": {"1,2": 1.0, "2,3": 1.0}, "kappa": 1.0}
_SYS3_DEGEN = {
    "levels": [1.0, 0.0, -1.0],
    "couplings": {"1,2": 1.0, "1,3": 1.0, "2,3": 1.0},
    "kappa": 1.0,
}

# the worked three-level pair: isospectral, diagonal nonzero commutator
EXAMPLE1_RHO1 = [
    [[1 / 12, 0.0], [-1 / 12, 0.0], [-1 / 12, 0.0]],
    [[-1 / 12, 0.0], [11 / 24, 0.0], [1 / 8, 0.0]],
    [[-1 / 12, 0.0], [1 / 8, 0.0], [11 / 24, 0.0]],
]
EXAMPLE1_RHO2 = [
    [[1 / 3, 0.0], [0.0, -1 / 12], [0.0, 1 / 12]],
    [[0.0, 1 / 12], [1 / 3, 0.0], [0.0, -1 / 4]],
    [[0.0, -1 / 12], [0.0, 1 / 4], [1 / 3, 0.0]],
]

EXAMPLE1_RHO1_EXACT = [
    [("1/12", "0"), ("-1/12", "0"), ("-1/12", "0")],
    [("-1/12", "0"), ("11/24", "0"), ("1/8", "0")],
    [("-1/12", "0"), ("1/8", "0"), ("11/24", "0")],
]
EXAMPLE1_RHO2_EXACT = [
    [("1/3", "0"), ("0", "-1/12"), ("0", "1/12")],
    [("0", "1/12"), ("1/3", "0"), ("0", "-1/4")],
    [("0", "-1/12"), ("0", "1/4"), ("1/3", "0")],
]


def _two_level_generic():
    return {
        "name": "two-level-generic",
        "description": "Two-level, target off the equator: every non-antipodal "
        "start converges to the moving target.",
        "system": dict(_SYS2),
        "target": {
            "matrix": [
                [[0.5 + _OFF, 0.0], [_OFF, 0.0]],
                [[_OFF, 0.0], [0.5 - _OFF, 0.0]],
            ]
        },
        "initial": {"seeds": 100, "seed_base": 100, "exclude_antipodal": True},
        "horizon": 500.0,
        "record_stride": 25,
    }


def _two_level_equator():
    return {
        "name": "two-level-equator",
        "description": "Two-level, target on the equator: solutions reach the "
        "free orbit but the residual V spreads over (0, V_max).",
        "system": dict(_SYS2),
        "target": {"matrix": [[[0.5, 0.0], [0.3, 0.0]], [[0.3, 0.0], [0.5, 0.0]]]},
        "initial": {"seeds": 20, "seed_base": 200},
        "horizon": 500.0,
        "record_stride": 25,
    }


def _pseudo_pure_n3():
    return {
        "name": "pseudo-pure-n3",
        "description": "Ideal three-level system, pseudo-pure target in generic "
        "position: effective convergence.",
        "system": dict(_SYS3_IDEAL),
        "target": {"spectrum": [0.6, 0.2, 0.2], "haar_seed": 7},
        "initial": {"seeds": 12, "seed_base": 300},
        "horizon": 500.0,
        "record_stride": 50,
    }


def _pseudo_pure_exceptional():
    return {
        "name": "pseudo-pure-exceptional",
        "description": "Pseudo-pure target confined to a periodic two-dimensional "
        "orbit (single off-diagonal pair): only orbit convergence.",
        "system": dict(_SYS3_IDEAL),
        "target": {"exceptional": {"w": 0.6, "u": 0.2, "pair": [1, 2], "alpha": 0.0}},
        "initial": {"seeds": 12, "seed_base": 400},
        "horizon": 500.0,
        "record_stride": 50,
    }


def _three_level_ideal_stationary():
    return {
        "name": "three-level-ideal-stationary",
        "description": "Ideal system, generic stationary target: 6 critical "
        "points, one sink, one source, four saddles.",
        "system": dict(_SYS3_IDEAL),
        "target": {"diagonal": [0.5, 0.3, 0.2]},
        "initial": {"seeds": 50, "seed_base": 500},
        "horizon": 400.0,
        "record_stride": 50,
        "analysis": {"critical_points": True},
    }


def _example1_commutator():
    return {
        "name": "example1-commutator",
        "description": "Worked isospectral pair with diagonal nonzero commutator: "
        "in the invariant set, field stays zero, no convergence.",
        "system": dict(_SYS3_IDEAL),
        "target": {"matrix": EXAMPLE1_RHO2},
        "initial": {"matrix": EXAMPLE1_RHO1},
        "horizon": 200.0,
        "record_stride": 25,
        "analysis": {"invariant_residuals": True},
    }


def _nonstationary_generic():
    return {
        "name": "nonstationary-generic",
        "description": "Ideal system, random generic non-stationary target "
        "(regular with probability one): convergence to the moving target.",
        "system": dict(_SYS3_IDEAL),
        "target": {"spectrum": [0.5, 0.3, 0.2], "haar_seed": 11},
        "initial": {"seeds": 12, "seed_base": 700},
        "horizon": 2000.0,
        "record_stride": 200,
    }


def _three_level_missing_coupling():
    return {
        "name": "three-level-missing-coupling",
        "description": "Control with a vanishing 1-3 coupling: centre at the "
        "target, V plateaus instead of converging.",
        "system": dict(_SYS3_MISSING),
        "target": {"diagonal": [0.5, 0.3, 0.2]},
        "initial": {"seeds": 6, "seed_base": 800, "perturb_target_v": 1e-2},
        "horizon": 2000.0,
        "record_stride": 200,
        "analysis": {"critical_points": True},
    }


def _three_level_degenerate_gap():
    return {
        "name": "three-level-degenerate-gap",
        "description": "Drift with equal 1-2 and 2-3 transition frequencies: "
        "centre at the target despite full connectivity.",
        "system": dict(_SYS3_DEGEN),
        "target": {"diagonal": [0.5, 0.3, 0.2]},
        "initial": {"seeds": 6, "seed_base": 902, "perturb_target_v": 1e-2},
        "horizon": 2000.0,
        "record_stride": 200,
        "analysis": {"critical_points": True},
    }


def _unstable_attraction():
    return {
        "name": "unstable-attraction",
        "description": "Seeded search for starts above a saddle level that still "
        "reach the target: saddles are unstable but not repulsive.",
        "system": dict(_SYS3_IDEAL),
        "target": {"diagonal": [0.5, 0.3, 0.2]},
        "initial": {"seeds": 0, "seed_base": 1100},
        "horizon": 400.0,
        "record_stride": 50,
        "analysis": {"critical_points": True, "saddle_index": 3, "trials": 50},
    }


_BUILDERS = {
    "two-level-generic": _two_level_generic,
    "two-level-equator": _two_level_equator,
    "pseudo-pure-n3": _pseudo_pure_n3,
    "pseudo-pure-exceptional": _pseudo_pure_exceptional,
    "three-level-ideal-stationary": _three_level_ideal_stationary,
    "example1-commutator": _example1_commutator,
    "nonstationary-generic": _nonstationary_generic,
    "three-level-missing-coupling": _three_level_missing_coupling,
    "three-level-degenerate-gap": _three_level_degenerate_gap,
    "unstable-attraction": _unstable_attraction,
}


def names():
    return list(_BUILDERS)


def preset_config(name):
    """Full config dict for a named preset (KeyError if unknown)."""
    return _BUILDERS[name]()


def describe():
    """(name, one-line description) pairs for the CLI listing."""
    out = []
    for name in names():
        out.append((name, _BUILDERS[name]()["description"]))
    return out
