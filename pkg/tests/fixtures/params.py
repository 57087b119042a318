"""Parameter sets shared across test modules."""

from nhosc.core.parameters import ParameterSet


def make_params(slope=0.1, drive="imaginary", mass=1.0, omega_sq=1.0, hbar=1.0):
    """Constant oscillator with λ(t) = slope·t."""
    return ParameterSet.model_validate({
        "mass": {"kind": "constant", "value": mass},
        "omega_sq": {"kind": "constant", "value": omega_sq},
        "lambda": {"kind": "linear", "slope": slope},
        "hbar": hbar,
        "drive": drive,
    })


def scenario_dict(name="unit", slope=0.1, drive="imaginary", tasks=None, **blocks):
    """Minimal scenario body with a small grid; extra blocks override the defaults."""
    data = {
        "name": name,
        "params": make_params(slope, drive).to_json_dict(),
        "grid_config": {"center": 0.0, "half_width": 8.0, "n_points": 1024},
        "evolve_config": {"t0": 0.0, "t1": 0.2, "dt": 1e-3},
        "tasks": tasks or ["SolveAux", "Evolve", "Compare"],
    }
    data.update(blocks)
    return data
