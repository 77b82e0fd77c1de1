"""Temperature readings under a change of unit.

A point holds two readings ``t_from``/``t_to`` in some unit together with
the unit's definition relative to Celsius, ``reading = deg * celsius +
zero``.  Changing the unit is the affine family ``(a, b)`` acting on
readings and ``zero`` by ``b x + a`` and on ``deg`` by ``b x``.
"""

from __future__ import annotations

from ..audit import Counterfactual, section_from_element
from ..errors import ZeroDenominator
from ..quotient import AffineRule, ParamPoint, affine_family

#: unit -> (zero, deg) with reading = deg * celsius + zero
UNITS = {"C": (0.0, 1.0), "F": (32.0, 1.8), "K": (273.15, 1.0)}


def to_unit(t_celsius: float, unit: str) -> float:
    try:
        zero, deg = UNITS[unit]
    except KeyError:
        raise ValueError(f"unknown unit {unit!r}; expected one of {sorted(UNITS)}") from None
    return deg * t_celsius + zero


def temperature_pct_change(t_from_celsius: float, t_to_celsius: float, unit: str) -> float:
    lo = to_unit(t_from_celsius, unit)
    hi = to_unit(t_to_celsius, unit)
    if lo == 0.0:
        raise ZeroDenominator(f"starting temperature is zero in unit {unit}")
    return (hi - lo) / lo


def temperature_point(t_from_celsius, t_to_celsius, unit="C") -> ParamPoint:
    zero, deg = UNITS[unit]
    return ParamPoint(
        {
            "t_from": to_unit(t_from_celsius, unit),
            "t_to": to_unit(t_to_celsius, unit),
            "zero": zero,
            "deg": deg,
        }
    )


def temperature_family():
    return affine_family(
        "temperature-unit",
        scales=("b",),
        locations={"a": "b"},
        rules=(
            AffineRule("t_*", "b", (("a", 1.0),)),
            AffineRule("zero", "b", (("a", 1.0),)),
            AffineRule("deg", "b"),
        ),
        requires=("t_from", "t_to", "zero", "deg"),
        reference_point=temperature_point(1.0, 11.0),
        param_order=("a", "b"),
    )


def unit_change(from_unit: str, to_unit_: str):
    """Group element converting readings in ``from_unit`` to ``to_unit_``."""
    z0, d0 = UNITS[from_unit]
    z1, d1 = UNITS[to_unit_]
    b = d1 / d0
    return temperature_family().element(z1 - b * z0, b)


def _pct(theta, ctx):
    lo = theta.coords["t_from"]
    if lo == 0.0:
        raise ZeroDenominator("starting reading is zero")
    return (theta.coords["t_to"] - lo) / lo


COUNTERFACTUALS = {
    "abs_change": Counterfactual(
        "abs_change", lambda t, c: (t.coords["t_to"] - t.coords["t_from"]) / t.coords["deg"]
    ),
    "pct_change": Counterfactual("pct_change", _pct),
}

EXPECTED = {"abs_change": "invariant", "pct_change": "non_invariant"}


def _unit_section(name, unit):
    fam = temperature_family()
    z1, d1 = UNITS[unit]

    def element(theta):
        b = d1 / theta.coords["deg"]
        return fam.element(z1 - b * theta.coords["zero"], b)

    return section_from_element(name, fam, element, f"readings expressed in {unit}")


def normalizations():
    return {"celsius": _unit_section("celsius", "C"), "kelvin": _unit_section("kelvin", "K")}


def orbit_invariant(theta):
    c = theta.coords
    return ((c["t_from"] - c["zero"]) / c["deg"], (c["t_to"] - c["zero"]) / c["deg"])


def base_points():
    pairs = [(1.0, 11.0, "C"), (1.0, 11.0, "F"), (-5.0, 20.0, "K"), (15.0, 14.0, "C"), (30.0, 2.5, "F")]
    return [(temperature_point(a, b, u), {}) for a, b, u in pairs]
