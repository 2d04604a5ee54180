"""Vehicle, charger and unit-cost parameters plus per-arc cost primitives.

Units throughout: distance km, time hours, energy kWh, power kW, money USD.
Capital costs are annualised with a capital-recovery factor so investment and
operating costs can be added on a per-year basis.

Defaults follow linear cost scalings for automated electric vehicles:
purchase cost and consumption grow with battery capacity, charging-plug cost
grows with rated power.  Every default is overridable from a scenario file.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from .errors import InfeasibilityError, InputError

HOURS_PER_DAY = 24
DAYS_PER_YEAR = 365.0

DEFAULT_TIME_COST = 22.62       # $ per passenger-hour on board
DEFAULT_MAINTENANCE_COST = 0.025  # $ per vehicle-km
DEFAULT_DISCOUNT_RATE = 0.08
DEFAULT_LIFETIME_YEARS = 15
DEFAULT_CHARGER_MARGIN = 1.2    # sizing margin on concurrent charger demand
DEFAULT_RESERVE_KWH = 15.0      # battery head-room never planned into a leg


class Mode(enum.Enum):
    """What the fleet carries; goods traffic has no value of travel time."""

    PASSENGER = "passenger"
    GOODS = "goods"

    @classmethod
    def parse(cls, text) -> "Mode":
        try:
            return cls(str(text).strip().lower())
        except ValueError:
            raise InputError(
                f"unknown mode {text!r}; expected one of "
                f"{[m.value for m in cls]}"
            ) from None


def capital_recovery(rate: float, years: float) -> float:
    """Annuity factor turning a present cost into equal annual payments.

    Computed as r(1+r)^Y / ((1+r)^Y - 1); strictly decreasing in Y and
    increasing in r for r > 0.
    """
    if years <= 0:
        raise InputError(f"lifetime must be positive, got {years}")
    if rate <= 0.0:
        raise InputError(f"discount rate must be positive, got {rate}")
    growth = (1.0 + rate) ** years
    return rate * growth / (growth - 1.0)


def fuel_efficiency(battery_kwh: float) -> float:
    """Consumption in kWh/km; heavier packs consume more."""
    return 0.155 + 0.00037 * battery_kwh


def vehicle_purchase_cost(battery_kwh: float) -> float:
    return 30_000.0 + 200.0 * battery_kwh


def charger_purchase_cost(power_kw: float, lifetime_years: float) -> float:
    return (700.0 + 15.0 * lifetime_years) * power_kw


@dataclass(frozen=True)
class VehicleSpec:
    """Physical vehicle parameters; derived figures exposed as properties."""

    battery_kwh: float
    speed_kmh: float = 100.0
    reserve_kwh: float = DEFAULT_RESERVE_KWH
    fuel_eff_kwh_per_km: float = 0.0  # 0 means "derive from battery size"

    def __post_init__(self):
        if self.battery_kwh <= 0:
            raise InputError(f"battery_kwh must be positive, got {self.battery_kwh}")
        if self.speed_kmh <= 0:
            raise InputError(f"speed_kmh must be positive, got {self.speed_kmh}")
        if not 0 <= self.reserve_kwh < self.battery_kwh:
            raise InputError(
                f"reserve_kwh must lie in [0, battery), got {self.reserve_kwh}"
            )
        if self.fuel_eff_kwh_per_km == 0.0:
            object.__setattr__(
                self, "fuel_eff_kwh_per_km", fuel_efficiency(self.battery_kwh)
            )
        if self.fuel_eff_kwh_per_km <= 0:
            raise InputError("fuel efficiency must be positive")

    @property
    def usable_kwh(self) -> float:
        return self.battery_kwh - self.reserve_kwh

    @property
    def range_km(self) -> float:
        """Farthest leg drivable on one charge while keeping the reserve."""
        return self.usable_kwh / self.fuel_eff_kwh_per_km


@dataclass(frozen=True)
class ChargerSpec:
    power_kw: float = 100.0
    efficiency: float = 0.92
    lifetime_years: float = DEFAULT_LIFETIME_YEARS

    def __post_init__(self):
        if self.power_kw <= 0:
            raise InputError(f"power_kw must be positive, got {self.power_kw}")
        if not 0 < self.efficiency <= 1:
            raise InputError(f"efficiency must lie in (0, 1], got {self.efficiency}")
        if self.lifetime_years <= 0:
            raise InputError("charger lifetime must be positive")


@dataclass(frozen=True)
class CostParams:
    """Unit costs plus the annualisation factor applied to capital."""

    aev_cost: float
    charger_cost: float
    time_cost: float = DEFAULT_TIME_COST
    maintenance_cost: float = DEFAULT_MAINTENANCE_COST
    discount_rate: float = DEFAULT_DISCOUNT_RATE
    lifetime_years: float = DEFAULT_LIFETIME_YEARS
    capital_recovery: float = 0.0   # 0 means "derive from rate and lifetime"
    charger_margin: float = DEFAULT_CHARGER_MARGIN

    def __post_init__(self):
        for name in ("aev_cost", "charger_cost", "time_cost", "maintenance_cost"):
            if getattr(self, name) < 0:
                raise InputError(f"{name} must be nonnegative")
        if self.charger_margin < 1.0:
            raise InputError(
                f"charger_margin must be >= 1, got {self.charger_margin}"
            )
        if self.capital_recovery == 0.0:
            object.__setattr__(
                self,
                "capital_recovery",
                capital_recovery(self.discount_rate, self.lifetime_years),
            )

    def with_time_cost(self, value: float) -> "CostParams":
        return replace(self, time_cost=value)


def derive_unit_costs(
    battery_kwh: float,
    charger: ChargerSpec,
    rate: float = DEFAULT_DISCOUNT_RATE,
    years: float = DEFAULT_LIFETIME_YEARS,
    *,
    time_cost: float = DEFAULT_TIME_COST,
    maintenance_cost: float = DEFAULT_MAINTENANCE_COST,
    charger_margin: float = DEFAULT_CHARGER_MARGIN,
    aev_cost: float | None = None,
    charger_cost: float | None = None,
) -> CostParams:
    """Fill a CostParams from battery size and charger spec.

    Purchase-cost defaults scale linearly (vehicle with battery capacity,
    charger with rated power and lifetime); pass explicit values to override.
    """
    return CostParams(
        aev_cost=vehicle_purchase_cost(battery_kwh) if aev_cost is None else aev_cost,
        charger_cost=(
            charger_purchase_cost(charger.power_kw, charger.lifetime_years)
            if charger_cost is None
            else charger_cost
        ),
        time_cost=time_cost,
        maintenance_cost=maintenance_cost,
        discount_rate=rate,
        lifetime_years=years,
        charger_margin=charger_margin,
    )


def _check_arc_length(length_km: float, veh: VehicleSpec) -> None:
    if length_km < 0:
        raise InputError(f"arc length must be nonnegative, got {length_km}")
    if length_km > veh.range_km + 1e-9:
        raise InfeasibilityError(
            f"arc of {length_km} km exceeds single-charge range "
            f"{veh.range_km:.3f} km"
        )


def arc_drive_hours(length_km: float, veh: VehicleSpec) -> float:
    return length_km / veh.speed_kmh


def arc_charge_hours(length_km: float, veh: VehicleSpec, charger: ChargerSpec) -> float:
    """Plug time needed to put back the energy one arc consumed."""
    return veh.fuel_eff_kwh_per_km * length_km / (charger.efficiency * charger.power_kw)


def arc_occupancy_time(
    length_km: float, veh: VehicleSpec, charger: ChargerSpec
) -> float:
    """Hours the vehicle is tied up by the arc: driving plus recharging."""
    _check_arc_length(length_km, veh)
    return arc_drive_hours(length_km, veh) + arc_charge_hours(length_km, veh, charger)


def arc_passenger_time(
    length_km: float,
    is_destination_arc: bool,
    veh: VehicleSpec,
    charger: ChargerSpec,
) -> float:
    """Hours the customer spends on the arc.

    Recharging after the final arc happens once the customer has left, so a
    destination arc contributes driving time only.
    """
    _check_arc_length(length_km, veh)
    t = arc_drive_hours(length_km, veh)
    if not is_destination_arc:
        t += arc_charge_hours(length_km, veh, charger)
    return t


def arc_energy_kwh(length_km: float, veh: VehicleSpec, charger: ChargerSpec) -> float:
    """Grid energy drawn to recover one traversal, including charger losses."""
    return veh.fuel_eff_kwh_per_km * length_km / charger.efficiency


def arc_operation_cost(
    length_km: float,
    is_destination_arc: bool,
    veh: VehicleSpec,
    charger: ChargerSpec,
    mode: Mode,
    price_at_head: float,
    costs: CostParams,
) -> float:
    """Per-trip cost of one arc: time value + electricity + maintenance.

    Electricity is bought where the vehicle recharges, i.e. at the arc's head
    node, hence ``price_at_head``.  Goods traffic (and relocation moves,
    which carry nobody) value time at zero.
    """
    time_value = 0.0 if mode is Mode.GOODS else costs.time_cost
    t = arc_passenger_time(length_km, is_destination_arc, veh, charger)
    return (
        time_value * t
        + price_at_head * arc_energy_kwh(length_km, veh, charger)
        + costs.maintenance_cost * length_km
    )


def whole_hours(duration: float) -> int:
    """Duration rounded up to whole hours, at least 1.

    A 1e-9 slack keeps float sums that are mathematically integral (e.g.
    0.5 + 0.5) from spilling into the next hour.
    """
    return max(1, math.ceil(duration - 1e-9))
