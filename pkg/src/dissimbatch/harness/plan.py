"""Experiment plans, presets and regime guards."""

from __future__ import annotations

import configparser
import itertools
import math
from dataclasses import asdict, dataclass
from typing import Optional

from ..dataset import CategoricalSpec, DensitySpec, GeneratorConfig
from ..theory import TheoryParams

PRESETS = (
    "degree-scaling",
    "tau-tradeoff",
    "nsim-bracket",
    "variance-nsim",
    "variance-tau",
    "lll-termination",
    "admit-probability",
)
# asymptotic regime guards only make sense for the large-n presets
GUARDED = ("degree-scaling", "tau-tradeoff", "nsim-bracket")


class RegimeError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentPlan:
    preset: str
    n: tuple = (1000,)
    k: tuple = (1,)
    trials: int = 10
    base_seed: int = 0
    d: int = 2
    p0: float = 0.0
    cat_size: int = 1
    cat_kind: str = "uniform"
    # r_n = n ** -r_exponent unless explicit radii are given
    r_exponent: Optional[float] = 0.25
    r_n: tuple = ()
    # categorical law #Y = n^rho, p_up = c_cat * n^-theta_cat (nsim-bracket)
    rho: Optional[float] = None
    theta_cat: Optional[float] = None
    c_cat: float = 1.0
    # LLL oversampling; empty means "smallest q the certificate accepts"
    lll_theta: tuple = ()
    max_rounds_factor: int = 50

    def radii(self, n: int) -> list:
        if self.r_n:
            return list(self.r_n)
        return [n ** -self.r_exponent]

    def categorical(self, n: int) -> CategoricalSpec:
        if self.rho is not None:
            m = max(2, round(n**self.rho))
            p_top = min(max(self.c_cat * n ** -self.theta_cat, 1.0 / m), 0.999)
            return CategoricalSpec("two-level", m, p_top=p_top)
        return CategoricalSpec(self.cat_kind, self.cat_size)

    def cells(self) -> list:
        thetas = list(self.lll_theta) or [None]
        out = []
        for n in self.n:
            for r, k, th in itertools.product(self.radii(n), self.k, thetas):
                out.append({"n": int(n), "r_n": float(r), "k": int(k), "theta": th})
        return out

    def model(self, cell: dict, seed: int) -> GeneratorConfig:
        return GeneratorConfig(
            n=cell["n"],
            d=self.d,
            r_n=cell["r_n"],
            p0=self.p0,
            density=DensitySpec(),
            categorical=self.categorical(cell["n"]),
            seed=seed,
        )

    def theory_params(self, cell: dict) -> TheoryParams:
        cat = self.categorical(cell["n"])
        return TheoryParams(cell["n"], self.d, cell["r_n"], self.p0, cat.p_up, cat.p_low, cat.cat_size)

    def to_dict(self) -> dict:
        return asdict(self)


def preset(name: str, **overrides) -> ExperimentPlan:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {PRESETS}")
    base = {
        "degree-scaling": dict(n=(2**11, 2**13, 2**15), k=(1,), trials=20, d=2, cat_size=4, r_exponent=0.25),
        "tau-tradeoff": dict(n=(2**14,), k=(2, 4, 8, 16), trials=3, d=2, cat_size=4, r_exponent=0.25),
        "nsim-bracket": dict(
            n=(2**10, 2**12, 2**14), k=(1, 2, 4), trials=3, d=1, r_exponent=0.3, rho=0.3, theta_cat=0.2, c_cat=1.0
        ),
        "variance-nsim": dict(n=(10,), k=(1, 2), trials=2000, d=2, cat_size=2, r_exponent=None, r_n=(0.4,)),
        "variance-tau": dict(n=(12,), k=(1,), trials=400, d=2, cat_size=1, r_exponent=None, r_n=(0.2, 0.6)),
        "lll-termination": dict(n=(300,), k=(2,), trials=200, d=2, cat_size=2, p0=0.05, r_exponent=None, r_n=(0.1,)),
        "admit-probability": dict(n=(500,), k=(1,), trials=5000, d=2, cat_size=1, r_exponent=None, r_n=(0.03,)),
    }[name]
    base.update(overrides)
    for key in ("n", "k", "r_n", "lll_theta"):
        if key in base and not isinstance(base[key], tuple):
            base[key] = tuple(base[key])
    return ExperimentPlan(preset=name, **base)


def check_regime(plan: ExperimentPlan) -> None:
    """Finite-n stand-ins for the asymptotic conditions; raises RegimeError."""
    if plan.preset not in PRESETS:
        raise RegimeError(f"unknown preset {plan.preset!r}")
    if plan.trials < 0:
        raise RegimeError("trials must be non-negative")
    if not plan.n:
        return
    for cell in plan.cells():
        plan.theory_params(cell)  # raises on inconsistent categorical laws
        if cell["k"] < 1:
            raise RegimeError("k must be >= 1")
    if plan.preset not in GUARDED:
        return
    from ..theory import delta_lambda

    n_max = max(plan.n)
    for cell in plan.cells():
        if cell["n"] != n_max:
            continue
        _, lam = delta_lambda(plan.theory_params(cell))
        if lam < 2 * math.log(n_max):
            raise RegimeError(
                f"Lambda/log n condition: Lambda={lam:.3g} < 2 ln n={2 * math.log(n_max):.3g} at n={n_max}"
            )
    if plan.rho is not None:
        if plan.theta_cat is None or not (0 < plan.theta_cat < plan.rho < 1):
            raise RegimeError("categorical law needs 0 < theta < rho < 1")
        if plan.r_exponent is None:
            raise RegimeError("nsim-bracket needs r_n = n^-beta")
        for n in plan.n:
            p_low = plan.categorical(n).p_low
            lam_exp = -math.log(p_low) / math.log(n)
            if not (0 < plan.r_exponent < (1 - lam_exp) / plan.d):
                raise RegimeError(
                    f"beta condition: need 0 < beta < (1 - lambda)/d = {(1 - lam_exp) / plan.d:.3g} at n={n}, "
                    f"got beta={plan.r_exponent}"
                )
    if plan.r_exponent is not None and plan.rho is None:
        cat = plan.categorical(n_max)
        theta_exp = -math.log(cat.p_up) / math.log(n_max)
        if not (0 < plan.r_exponent < (1 - theta_exp) / plan.d):
            raise RegimeError(f"beta condition: need 0 < beta < (1 - theta)/d = {(1 - theta_exp) / plan.d:.3g}")


_LIST_FIELDS = {"n": int, "k": int, "r_n": float, "lll_theta": float}


def plan_from_config(name: str, path=None, **overrides) -> ExperimentPlan:
    """Preset defaults, then the ``[experiment]`` section of an INI file, then overrides."""
    values = {}
    if path is not None:
        cp = configparser.ConfigParser()
        if not cp.read(path, encoding="utf-8"):
            raise FileNotFoundError(path)
        if cp.has_section("experiment"):
            for key, raw in cp["experiment"].items():
                if key == "preset":
                    continue
                if key in _LIST_FIELDS:
                    conv = _LIST_FIELDS[key]
                    values[key] = tuple(conv(v) for v in raw.replace(" ", "").split(",") if v)
                elif key in ("trials", "base_seed", "d", "cat_size", "max_rounds_factor"):
                    values[key] = int(raw)
                elif key in ("p0", "c_cat"):
                    values[key] = float(raw)
                elif key in ("r_exponent", "rho", "theta_cat"):
                    values[key] = None if raw.lower() == "none" else float(raw)
                elif key == "cat_kind":
                    values[key] = raw
                else:
                    raise ValueError(f"unknown experiment key {key!r}")
    values.update({k: v for k, v in overrides.items() if v is not None})
    return preset(name, **values)
