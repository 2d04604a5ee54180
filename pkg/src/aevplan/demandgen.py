"""Hourly origin-destination demand: gravity synthesis and file I/O.

A demand set fixes the planning horizon T (hours per period) and, per OD
pair, one nonnegative volume per hour.  Volumes are trips per hour starting
in that hour; the period repeats cyclically (day after day).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .errors import InputError, ParseError
from .netcore import Network, shortest_path_lengths

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DemandEntry:
    origin: int
    destination: int
    volumes: tuple[float, ...]

    def __post_init__(self):
        if self.origin == self.destination:
            raise InputError(
                f"demand pair with identical origin/destination {self.origin}"
            )
        if any(v < 0 for v in self.volumes):
            raise InputError(
                f"negative volume for pair ({self.origin},{self.destination})"
            )

    @property
    def total(self) -> float:
        return sum(self.volumes)

    @property
    def peak_rate(self) -> float:
        return max(self.volumes)


@dataclass(frozen=True)
class DemandSet:
    horizon_hours: int
    entries: tuple[DemandEntry, ...]
    skipped_pairs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.horizon_hours < 1:
            raise InputError("horizon must be at least 1 hour")
        seen = set()
        for e in self.entries:
            if len(e.volumes) != self.horizon_hours:
                raise InputError(
                    f"pair ({e.origin},{e.destination}) has {len(e.volumes)} "
                    f"volumes, expected {self.horizon_hours}"
                )
            key = (e.origin, e.destination)
            if key in seen:
                raise InputError(f"duplicate demand pair {key}")
            seen.add(key)

    @property
    def total_trips(self) -> float:
        return sum(e.total for e in self.entries)

    def peak_hour_trips(self) -> float:
        """Largest single-hour system-wide departure volume."""
        return max(
            sum(e.volumes[t] for e in self.entries)
            for t in range(self.horizon_hours)
        )


def flat_profile(horizon: int) -> tuple[float, ...]:
    return tuple(1.0 / horizon for _ in range(horizon))


def peaked_profile(horizon: int, peak_hour: int, peak_share: float) -> tuple[float, ...]:
    """Uniform profile with one hour boosted to carry ``peak_share`` of the day."""
    if not (0 <= peak_hour < horizon):
        raise InputError(f"peak hour {peak_hour} outside horizon {horizon}")
    if not (0 < peak_share < 1):
        raise InputError("peak share must lie in (0, 1)")
    rest = (1.0 - peak_share) / (horizon - 1)
    if rest > peak_share:
        raise InputError("peak share smaller than the off-peak share")
    return tuple(peak_share if t == peak_hour else rest for t in range(horizon))


def gravity_demands(
    net: Network,
    daily_total: float,
    profile,
    beta: float = 2.0,
) -> DemandSet:
    """Split ``daily_total`` trips over OD pairs by a gravity rule.

    Pair weight is w_o * w_d / dist(o,d)^beta with dist the shortest road
    distance on the original network.  Pairs with a zero-weight endpoint get
    no demand; pairs with positive weights but no connecting route are
    skipped and reported on the result's ``skipped_pairs``.
    """
    if daily_total <= 0:
        raise InputError(f"daily total must be positive, got {daily_total}")
    if beta < 0:
        raise InputError(f"beta must be nonnegative, got {beta}")
    profile = tuple(float(p) for p in profile)
    horizon = len(profile)
    if horizon < 1:
        raise InputError("profile must have at least one hour")
    if any(p < 0 for p in profile):
        raise InputError("profile weights must be nonnegative")
    if not math.isclose(sum(profile), 1.0, rel_tol=0, abs_tol=1e-9):
        raise InputError(f"profile must sum to 1, got {sum(profile)!r}")

    weights = [n.gravity_weight for n in net.nodes]
    if all(w == 0 for w in weights):
        raise InputError("all gravity weights are zero")

    dist = {i: shortest_path_lengths(net, i) for i in range(net.n_nodes)}
    raw: list[tuple[int, int, float]] = []
    skipped: list[tuple[int, int]] = []
    for o in range(net.n_nodes):
        if weights[o] == 0:
            continue
        for d in range(net.n_nodes):
            if d == o or weights[d] == 0:
                continue
            dod = dist[o][d][0]
            if not math.isfinite(dod):
                skipped.append((o, d))
                continue
            raw.append((o, d, weights[o] * weights[d] / dod**beta))
    if skipped:
        log.warning(
            "gravity model skipped %d disconnected OD pairs: %s",
            len(skipped),
            ", ".join(f"({net.name_of(o)},{net.name_of(d)})" for o, d in skipped[:8])
            + ("..." if len(skipped) > 8 else ""),
        )
    total_weight = sum(w for _, _, w in raw)
    if total_weight <= 0:
        raise InputError("no connected OD pair with positive gravity weight")

    entries = tuple(
        DemandEntry(
            origin=o,
            destination=d,
            volumes=tuple(daily_total * (w / total_weight) * p for p in profile),
        )
        for o, d, w in raw
    )
    return DemandSet(
        horizon_hours=horizon, entries=entries, skipped_pairs=tuple(skipped)
    )


# ---------------------------------------------------------------------------
# file format
#
#   # comment
#   horizon 24
#   ORIGIN DESTINATION v0,v1,...,v23
#
# Node fields are names when a network is supplied to load_demands, raw
# integer ids otherwise.
# ---------------------------------------------------------------------------


def load_demands(path, net: Network | None = None) -> DemandSet:
    horizon = None
    entries: list[DemandEntry] = []

    def resolve(token, lineno):
        if net is not None:
            try:
                return net.id_of(token)
            except InputError as exc:
                raise ParseError(str(exc), path=str(path), line=lineno) from None
        try:
            return int(token)
        except ValueError:
            raise ParseError(
                f"node id {token!r} is not an integer (no network supplied)",
                path=str(path),
                line=lineno,
            ) from None

    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if fields[0].lower() == "horizon":
                if horizon is not None:
                    raise ParseError("duplicate horizon line", str(path), lineno)
                try:
                    horizon = int(fields[1])
                except (IndexError, ValueError):
                    raise ParseError("horizon needs an integer", str(path), lineno)
                continue
            if horizon is None:
                raise ParseError(
                    "demand rows before the horizon line", str(path), lineno
                )
            if len(fields) != 3:
                raise ParseError(
                    "demand rows need ORIGIN DESTINATION v0,...,vT-1",
                    str(path),
                    lineno,
                )
            o = resolve(fields[0], lineno)
            d = resolve(fields[1], lineno)
            try:
                volumes = tuple(float(v) for v in fields[2].split(","))
            except ValueError:
                raise ParseError("bad volume list", str(path), lineno) from None
            if len(volumes) != horizon:
                raise ParseError(
                    f"expected {horizon} volumes, got {len(volumes)}",
                    str(path),
                    lineno,
                )
            try:
                entries.append(DemandEntry(origin=o, destination=d, volumes=volumes))
            except InputError as exc:
                raise ParseError(str(exc), str(path), lineno) from None
    if horizon is None:
        raise ParseError("missing horizon line", path=str(path))
    try:
        return DemandSet(horizon_hours=horizon, entries=tuple(entries))
    except InputError as exc:
        raise ParseError(str(exc), path=str(path)) from None


def save_demands(demands: DemandSet, path, net: Network | None = None) -> None:
    def label(i):
        return net.name_of(i) if net is not None else str(i)

    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"horizon {demands.horizon_hours}\n")
        for e in demands.entries:
            vols = ",".join(repr(v) for v in e.volumes)
            fh.write(f"{label(e.origin)} {label(e.destination)} {vols}\n")
