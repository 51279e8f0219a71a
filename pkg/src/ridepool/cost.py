"""Peak-hour operating and procurement costs: pooling fleet versus private cars.

Maintenance, insurance, depots and charging infrastructure are deliberately
left out, as are drives to and from a depot.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields


@dataclass(frozen=True)
class CostParams:
    hourly_wage: float = 18.0  # EUR per driver-hour
    energy_use: float = 32.6  # kWh / 100 km
    energy_price: float = 0.30  # EUR / kWh
    fuel_use: float = 7.0  # L / 100 km
    fuel_price: float = 1.946  # EUR / L
    pooling_vehicle_price: float = 42_690.0
    private_vehicle_price: float = 18_800.0
    working_days: float = 251
    peak_share: float = 0.088
    n_travelers: int = 40_000
    operating_hours: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError(f"{f.name} must be positive, got {getattr(self, f.name)}")
        if self.peak_share > 1:
            raise ValueError("peak_share must be in (0, 1]")


@dataclass(frozen=True)
class CostReport:
    wages: float
    energy: float
    pooling_operating_total: float
    fare_per_trip: float
    fare_per_year: float
    private_fuel_total: float
    private_cost_per_trip: float
    private_cost_per_year: float
    pooling_procurement_total: float
    pooling_procurement_peak_share: float
    pooling_procurement_per_customer: float
    private_procurement_total: float
    private_procurement_per_customer: float

    def to_dict(self) -> dict:
        return asdict(self)

    def table(self) -> list[tuple[str, float | None, float | None]]:
        """Rows of ``(label, pooling, private)`` for side-by-side printing."""
        return [
            ("operating cost, peak hour [EUR]", self.pooling_operating_total, self.private_fuel_total),
            ("  wages [EUR]", self.wages, None),
            ("  energy / fuel [EUR]", self.energy, self.private_fuel_total),
            ("cost per trip [EUR]", self.fare_per_trip, self.private_cost_per_trip),
            ("cost per traveler and year [EUR]", self.fare_per_year, self.private_cost_per_year),
            ("procurement, total [EUR]", self.pooling_procurement_total, self.private_procurement_total),
            ("procurement, peak-hour share [EUR]", self.pooling_procurement_peak_share, None),
            ("procurement per traveler [EUR]", self.pooling_procurement_per_customer,
             self.private_procurement_per_customer),
        ]


def fares(operating_total: float, p: CostParams) -> tuple[float, float]:
    """Per-trip and per-year fare covering ``operating_total`` for one peak hour."""
    per_trip = operating_total / p.n_travelers
    return per_trip, per_trip * p.working_days


def cost_report(fleet_size: int, fleet_km: float, private_km: float, p: CostParams = CostParams()) -> CostReport:
    """Itemised peak-hour cost comparison for ``fleet_size`` pooling vehicles."""
    if fleet_size <= 0 or fleet_km < 0 or private_km < 0:
        raise ValueError("fleet_size must be positive and distances non-negative")
    wages = fleet_size * p.hourly_wage * p.operating_hours
    energy = fleet_km * p.energy_use / 100 * p.energy_price
    operating = wages + energy
    fare_trip, fare_year = fares(operating, p)
    fuel = private_km * p.fuel_use / 100 * p.fuel_price
    private_trip, private_year = fares(fuel, p)
    procurement = fleet_size * p.pooling_vehicle_price
    peak = procurement * p.peak_share
    return CostReport(
        wages=wages,
        energy=energy,
        pooling_operating_total=operating,
        fare_per_trip=fare_trip,
        fare_per_year=fare_year,
        private_fuel_total=fuel,
        private_cost_per_trip=private_trip,
        private_cost_per_year=private_year,
        pooling_procurement_total=procurement,
        pooling_procurement_peak_share=peak,
        pooling_procurement_per_customer=peak / p.n_travelers,
        private_procurement_total=p.n_travelers * p.private_vehicle_price,
        private_procurement_per_customer=p.private_vehicle_price,
    )
