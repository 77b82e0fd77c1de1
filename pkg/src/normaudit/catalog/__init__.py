"""Ready-made models: binary choice, logit demand, dyadic network, temperature."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict

from ..audit import Counterfactual, Normalization
from ..errors import UnknownModel
from ..quotient import TransformFamily
from . import binary, logit, network, temperature
from .binary import (
    BinaryChoiceModel,
    binary_affine_family,
    binary_choice_prob,
    binary_marginal_effect,
    binary_pct_welfare,
)
from .logit import (
    LogitDemandModel,
    logit_affine_family,
    logit_cs_level,
    logit_delta_cs,
    logit_pct_cs,
)
from .network import (
    NetworkModel,
    fixed_effect_ranking,
    network_affine_family,
    network_link_prob,
    two_quantile_normalize,
)
from .temperature import temperature_pct_change


@dataclass(frozen=True)
class CatalogEntry:
    model_id: str
    family: TransformFamily
    counterfactuals: Dict[str, Counterfactual]
    expected: Dict[str, str]
    normalizations: Dict[str, Normalization]
    orbit_invariant: Callable
    base_points: list


_MODULES = {"binary": binary, "logit": logit, "network": network, "temperature": temperature}
FAMILY_BUILDERS = {
    "binary": binary_affine_family,
    "logit": logit_affine_family,
    "network": network_affine_family,
    "temperature": temperature.temperature_family,
}

MODEL_IDS = tuple(_MODULES)


def get_model(model_id: str) -> CatalogEntry:
    try:
        mod = _MODULES[model_id]
    except KeyError:
        raise UnknownModel(f"unknown model {model_id!r}; expected one of {MODEL_IDS}") from None
    return CatalogEntry(
        model_id,
        FAMILY_BUILDERS[model_id](),
        dict(mod.COUNTERFACTUALS),
        dict(mod.EXPECTED),
        mod.normalizations(),
        mod.orbit_invariant,
        mod.base_points(),
    )


def expected_manifest():
    """``(model, counterfactual) -> expected verdict`` for every catalog pair."""
    return {(mid, name): status for mid, mod in _MODULES.items() for name, status in mod.EXPECTED.items()}
