"""Power and time bookkeeping of the relay energy-harvesting protocols.

The transmission block is normalised to T = 1. Source power is scaled so that
every protocol consumes the same total energy.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

__all__ = [
    "BETA_MAX",
    "ConstellationWeights",
    "DerivedPower",
    "EhKind",
    "EhProtocol",
    "PowerAllocation",
    "consumed_energy",
    "constellation_weights",
    "derive_power",
    "harvested_energy",
    "relay_power",
]

BETA_MAX = 0.99
DEFAULT_ETA = 0.95


class EhKind(str, enum.Enum):
    NO_EH = "no_eh"
    PS = "ps"
    TS = "ts"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class EhProtocol:
    """Relay harvesting protocol.

    ``rho`` is the power-splitting factor (PS, hybrid), ``beta`` the
    time-switching factor (TS, hybrid) and ``eta`` the conversion efficiency.
    Inapplicable factors are stored as None.
    """

    kind: EhKind
    beta: float | None = None
    rho: float | None = None
    eta: float = DEFAULT_ETA

    def __post_init__(self):
        kind = EhKind(self.kind)
        object.__setattr__(self, "kind", kind)
        needs_beta = kind in (EhKind.TS, EhKind.HYBRID)
        needs_rho = kind in (EhKind.PS, EhKind.HYBRID)
        if needs_beta != (self.beta is not None) or needs_rho != (self.rho is not None):
            raise ValueError(f"{kind.value} takes beta={needs_beta}, rho={needs_rho}")
        if self.beta is not None and not 0.0 <= self.beta <= BETA_MAX:
            raise ValueError(f"beta must be in [0, {BETA_MAX}], got {self.beta!r}")
        if self.rho is not None:
            if not 0.0 <= self.rho <= 1.0:
                raise ValueError(f"rho must be in [0, 1], got {self.rho!r}")
            if self.rho == 1.0:
                warnings.warn("rho = 1 leaves no power for information decoding", stacklevel=3)
        if not 0.0 < self.eta < 1.0:
            raise ValueError(f"eta must be in (0, 1), got {self.eta!r}")

    @classmethod
    def no_eh(cls) -> "EhProtocol":
        return cls(EhKind.NO_EH)

    @classmethod
    def ps(cls, rho: float, eta: float = DEFAULT_ETA) -> "EhProtocol":
        return cls(EhKind.PS, rho=rho, eta=eta)

    @classmethod
    def ts(cls, beta: float, eta: float = DEFAULT_ETA) -> "EhProtocol":
        return cls(EhKind.TS, beta=beta, eta=eta)

    @classmethod
    def hybrid(cls, beta: float, rho: float, eta: float = DEFAULT_ETA) -> "EhProtocol":
        return cls(EhKind.HYBRID, beta=beta, rho=rho, eta=eta)

    @property
    def harvests(self) -> bool:
        return self.kind is not EhKind.NO_EH

    @property
    def label(self) -> str:
        return self.kind.value


@dataclass(frozen=True)
class DerivedPower:
    """Source power factor ``phi``, information fraction ``varpi``, harvest gain
    ``psi`` (None without harvesting) and the three block fractions."""

    phi: float
    varpi: float
    psi: float | None
    t_harvest: float
    t_phase1: float
    t_phase2: float


def derive_power(protocol: EhProtocol) -> DerivedPower:
    kind = protocol.kind
    eta = protocol.eta
    if kind is EhKind.NO_EH:
        return DerivedPower(1.0, 1.0, None, 0.0, 0.5, 0.5)
    if kind is EhKind.PS:
        rho = protocol.rho
        return DerivedPower(2.0, 1.0 - rho, eta * rho, 0.0, 0.5, 0.5)

    beta = protocol.beta
    if beta >= 1.0:
        raise ValueError("beta = 1 leaves no time for information transfer")
    half = (1.0 - beta) / 2.0
    phi = 2.0 / (beta + 1.0)
    ts_gain = 2.0 * beta / (1.0 - beta)
    if kind is EhKind.TS:
        return DerivedPower(phi, 1.0, eta * ts_gain, beta, half, half)
    rho = protocol.rho
    return DerivedPower(phi, 1.0 - rho, eta * (rho + ts_gain), beta, half, half)


def harvested_energy(protocol: EhProtocol, ps: float, g_r: float) -> float:
    """Energy collected at the relay over one block (T = 1)."""
    eta = protocol.eta
    kind = protocol.kind
    if kind is EhKind.NO_EH:
        raise ValueError("no energy is harvested without an EH protocol")
    if kind is EhKind.PS:
        return eta * ps * protocol.rho * 0.5 * g_r
    if kind is EhKind.TS:
        return eta * ps * protocol.beta * g_r
    beta, rho = protocol.beta, protocol.rho
    return eta * ps * (2.0 * beta + rho * (1.0 - beta)) / 2.0 * g_r


def relay_power(ps, g_r, dp: DerivedPower):
    """Relay transmit power: harvested energy spread over the forwarding slot,
    or the source power when the relay runs from its own supply."""
    if dp.psi is None:
        return ps
    return ps * g_r * dp.psi


def consumed_energy(protocol: EhProtocol, p_total: float) -> float:
    """Total energy spent by source and relay in one block."""
    dp = derive_power(protocol)
    ps = dp.phi * p_total
    if not protocol.harvests:
        return ps * dp.t_phase1 + ps * dp.t_phase2
    return ps * (dp.t_harvest + dp.t_phase1)


@dataclass(frozen=True)
class PowerAllocation:
    """Superposition power shares; the first (far) user gets the larger share."""

    alpha1: float
    alpha2: float

    def __post_init__(self):
        if abs(self.alpha1 + self.alpha2 - 1.0) > 1e-12:
            raise ValueError("power shares must sum to 1")
        if not 0.0 < self.alpha2 <= self.alpha1:
            raise ValueError(f"need 0 < alpha2 <= alpha1, got {self.alpha1}, {self.alpha2}")

    @classmethod
    def from_alpha2(cls, alpha2: float) -> "PowerAllocation":
        return cls(1.0 - alpha2, alpha2)


@dataclass(frozen=True)
class ConstellationWeights:
    """Squared decision distances of the superposed BPSK constellation.

    ``zeta_i`` enters the strong-symbol error probability with unit weights;
    ``zeta_j`` with signed weights ``nu_j`` enters the SIC-detected weak symbol.
    """

    zeta_i: tuple[float, float]
    zeta_j: tuple[float, float, float, float, float]
    nu_j: tuple[int, int, int, int, int] = (2, -1, 1, 1, -1)


def constellation_weights(pa: PowerAllocation) -> ConstellationWeights:
    a1 = math.sqrt(pa.alpha1)
    a2 = math.sqrt(pa.alpha2)
    # a wrong first decision leaves a residual of 2*sqrt(alpha1) around the weak symbol
    return ConstellationWeights(
        zeta_i=((a1 + a2) ** 2, (a1 - a2) ** 2),
        zeta_j=(pa.alpha2, (a1 + a2) ** 2, (2 * a1 + a2) ** 2, (a1 - a2) ** 2, (2 * a1 - a2) ** 2),
    )
