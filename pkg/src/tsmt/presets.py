"""Named scenario grids reproducing the tuning figure and the four simulation figures."""

import math

from .asymptotics import figure_grid
from .errors import ConfigurationError
from .methods import ProcedureSpec
from .simulation import ScenarioConfig, ThresholdGrid

PRESETS = ("fig4_1", "fig8_1", "fig8_2", "fig8_3", "fig8_4")

ALPHA = 0.05
GLOBAL_GAMMA = 0.5
# selection level that keeps about half of m = 100 hypotheses
FWER_SELECTION_LEVEL = 0.5
# fig8_1's power panel does not state its sparsity exponent
FIG8_1_POWER_EPSILON = 0.7


def _grid(start, stop, step):
    count = int(round((stop - start) / step)) + 1
    return [round(start + i * step, 10) for i in range(count)]


def sparse_signal_count(m, epsilon):
    """``floor(m^(1 - epsilon))`` with a guard against round-off just below an integer."""
    return int(math.floor(m ** (1.0 - epsilon) + 1e-9))


def global_test_methods(alpha=ALPHA, gamma=GLOBAL_GAMMA):
    return (
        ProcedureSpec("ts-bonf", alpha=alpha, gamma=gamma, sigma_mode="estimated"),
        ProcedureSpec("bonferroni", alpha=alpha),
        ProcedureSpec("simes", alpha=alpha),
        ProcedureSpec("ss-bonf", alpha=alpha, gamma=gamma, split_r=0.5),
        ProcedureSpec("hc", alpha=alpha),
    )


def fwer_methods(alpha=ALPHA, level=FWER_SELECTION_LEVEL):
    return (
        ProcedureSpec("ts-bonf", alpha=alpha, sigma_mode="estimated", selection_level=level),
        ProcedureSpec("bonferroni", alpha=alpha),
        ProcedureSpec("hochberg", alpha=alpha),
        ProcedureSpec("ss-bonf", alpha=alpha, selection_level=level, split_r=0.5),
    )


def _dependence(rho):
    return "equal_correlation" if rho > 0 else "independent"


def _fig8_1(reps, seed, **_):
    m, n = 1000, 15
    cells = []
    methods = global_test_methods()
    for panel, k in (("null", 0), ("power", sparse_signal_count(m, FIG8_1_POWER_EPSILON))):
        for rho in _grid(0.0, 0.95, 0.05):
            cells.append(
                ScenarioConfig(
                    m=m, n=n, procedures=methods, signal_count=k, rho=rho,
                    dependence=_dependence(rho), variance_mode="common_uniform",
                    mean_mode="uniform_pm1", replications=reps, base_seed=seed,
                    scenario_id=f"fig8_1/{panel}/rho={rho:g}", figure="fig8_1",
                    panel=panel, x_name="rho", x=rho,
                )
            )
    return cells


def _fig8_2(reps, seed, **_):
    m, n = 1000, 15
    panels = (
        ("equal_var_0.5_1.5", "common_uniform", (0.5, 1.5)),
        ("unequal_var_0.8_1.2", "per_hypothesis_uniform", (0.8, 1.2)),
        ("unequal_var_0.5_1.5", "per_hypothesis_uniform", (0.5, 1.5)),
    )
    methods = global_test_methods()
    cells = []
    for panel, vmode, vrange in panels:
        for eps in _grid(0.5, 1.0, 0.1):
            cells.append(
                ScenarioConfig(
                    m=m, n=n, procedures=methods, signal_count=sparse_signal_count(m, eps),
                    variance_mode=vmode, variance_range=vrange, mean_mode="uniform_pm1",
                    replications=reps, base_seed=seed,
                    scenario_id=f"fig8_2/{panel}/epsilon={eps:g}", figure="fig8_2",
                    panel=panel, x_name="epsilon", x=eps,
                )
            )
    return cells


def _mean_kwargs(mean_mode):
    if mean_mode in (None, "constant"):
        return {"mean_mode": "constant", "mean_value": 1.0}
    if mean_mode == "uniform_pm1":
        return {"mean_mode": "uniform_pm1"}
    raise ConfigurationError(f"unknown mean mode {mean_mode!r}")


def _fig8_3(reps, seed, mean_mode=None):
    m, n = 100, 15
    methods = fwer_methods()
    cells = []
    for rho in (0.0, 0.5):
        panel = f"rho={rho:g}"
        for pi1 in _grid(0.0, 0.5, 0.05):
            cells.append(
                ScenarioConfig(
                    m=m, n=n, procedures=methods, signal_count=int(round(pi1 * m)), rho=rho,
                    dependence=_dependence(rho), variance_mode="common_uniform",
                    replications=reps, base_seed=seed,
                    scenario_id=f"fig8_3/{panel}/pi1={pi1:g}", figure="fig8_3",
                    panel=panel, x_name="pi1", x=pi1, **_mean_kwargs(mean_mode),
                )
            )
    return cells


def _fig8_4(reps, seed, mean_mode=None):
    m, n = 100, 15
    methods = fwer_methods()
    return [
        ScenarioConfig(
            m=m, n=n, procedures=methods, signal_count=20, rho=rho,
            dependence=_dependence(rho), variance_mode="common_uniform",
            replications=reps, base_seed=seed,
            scenario_id=f"fig8_4/rho={rho:g}", figure="fig8_4",
            panel="all", x_name="rho", x=rho, **_mean_kwargs(mean_mode),
        )
        for rho in _grid(0.0, 0.95, 0.05)
    ]


def scenario_preset(name, reps=2000, seed=0, mean_mode=None):
    """Cells for a named figure.

    ``fig4_1`` returns a :class:`ThresholdGrid`; the others return a list of
    :class:`ScenarioConfig`. ``mean_mode`` switches fig8_3/fig8_4 between
    constant unit means (default) and means drawn from U(-1, 1).
    """
    if name == "fig4_1":
        return ThresholdGrid(tuple(figure_grid()))
    builders = {"fig8_1": _fig8_1, "fig8_2": _fig8_2, "fig8_3": _fig8_3, "fig8_4": _fig8_4}
    if name not in builders:
        raise ConfigurationError(f"unknown preset {name!r}; expected one of {PRESETS}")
    if mean_mode is not None and name in ("fig8_1", "fig8_2"):
        raise ConfigurationError(f"{name} always draws means from U(-1, 1)")
    return builders[name](reps=reps, seed=seed, mean_mode=mean_mode)
