"""Closed-form average BER of the two-hop cooperative NOMA link, and the
quadrature oracles that check it.

Conventions: ``total_snr_db`` is the total transmit SNR P_T/N_0; each protocol
turns it into the source SNR gamma = phi * P_T/N_0. Conditional bit error
probabilities are Q(sqrt(k * g)) with k the product of SNR, power fractions
and constellation distance, and g the relevant power gain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .channel import FadingParams, Scenario
from .protocol import EhProtocol, PowerAllocation, constellation_weights, derive_power
from .specfun import (
    ContourError,
    ConvergenceError,
    gauss_laguerre,
    hyp2f1,
    ln_gamma,
    meijer_g_3345,
)

__all__ = [
    "AberBreakdown",
    "AnalyticCoefficients",
    "aber_phase2_no_eh",
    "aber_phase2_u1",
    "aber_phase2_u2",
    "aber_relay_s1",
    "aber_relay_s2",
    "analytic_coefficients",
    "combine_e2e",
    "e2e_aber",
    "nakagami_q_average",
    "oracle_product_hop",
    "oracle_single_hop",
    "product_q_average",
    "source_snr",
]

SQRT_PI = math.sqrt(math.pi)


def source_snr(protocol: EhProtocol, total_snr_db: float) -> float:
    """gamma = P_s / sigma^2 for the given protocol at total SNR P_T/N_0."""
    return derive_power(protocol).phi * 10.0 ** (total_snr_db / 10.0)


# ---------------------------------------------------------------------------
# single Nakagami hop
# ---------------------------------------------------------------------------

def nakagami_q_average(k: float, fading: FadingParams) -> float:
    """E[Q(sqrt(k g))] for g ~ Gamma(m, omega/m), via the 2F1 closed form."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if k == 0:
        return 0.5
    m, omega = fading.m, fading.omega
    c = k * omega / (2.0 * m)
    if c < 1e-14:
        # 2F1 argument rounds to 1; Q(t) = 1/2 - t/sqrt(2 pi) + O(t^3) averaged over g
        return 0.5 - math.sqrt(c / math.pi) * math.exp(ln_gamma(m + 0.5) - ln_gamma(m))
    log_pref = (
        ln_gamma(m + 0.5) - ln_gamma(m + 1.0) - math.log(2.0 * SQRT_PI)
        + 0.5 * math.log(c) - (m + 0.5) * math.log1p(c)
    )
    z = 1.0 / (1.0 + c)
    return math.exp(log_pref) * hyp2f1(1.0, m + 0.5, m + 1.0, z, one_minus_z=c / (1.0 + c))


def _signed_average(weights, zetas, scale, fading):
    return 0.5 * sum(w * nakagami_q_average(scale * z, fading) for w, z in zip(weights, zetas))


def aber_relay_s1(scenario: Scenario, protocol: EhProtocol, pa: PowerAllocation, total_snr_db: float) -> float:
    """Strong-user symbol error rate at the relay (detection with the weak
    symbol treated as noise)."""
    dp = derive_power(protocol)
    cw = constellation_weights(pa)
    scale = dp.varpi * source_snr(protocol, total_snr_db)
    return _signed_average((1, 1), cw.zeta_i, scale, scenario.relay_link)


def aber_relay_s2(scenario: Scenario, protocol: EhProtocol, pa: PowerAllocation, total_snr_db: float) -> float:
    """Weak-user symbol error rate at the relay after SIC, including the error
    propagated from a wrong first decision."""
    dp = derive_power(protocol)
    cw = constellation_weights(pa)
    scale = dp.varpi * source_snr(protocol, total_snr_db)
    return _signed_average(cw.nu_j, cw.zeta_j, scale, scenario.relay_link)


def aber_phase2_no_eh(scenario: Scenario, user: int, pa: PowerAllocation, total_snr_db: float) -> float:
    """Second-hop error rate when the relay forwards with its own power P_s = P_T."""
    cw = constellation_weights(pa)
    gamma = 10.0 ** (total_snr_db / 10.0)
    link = scenario.user_link(user)
    if user == 1:
        return _signed_average((1, 1), cw.zeta_i, gamma, link)
    return _signed_average(cw.nu_j, cw.zeta_j, gamma, link)


# ---------------------------------------------------------------------------
# product of two Nakagami power gains (relay powered by harvested energy)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnalyticCoefficients:
    """Shape offsets and prefactors of the Meijer-G form for one (user, zeta) term.

    ``u_diff`` = m_r - m_k and ``u_mean`` = (m_r + m_k)/2; ``norm`` is
    (m_r/Omega_r)^m_r (m_k/Omega_k)^m_k / (Gamma(m_r) Gamma(m_k));
    ``prefactor`` = norm * (m_k Omega_r / (m_r Omega_k))^(u_diff/2) * k^(-u_mean);
    ``root_arg`` = 2 sqrt(m_k m_r / (Omega_k Omega_r k)). ``delta`` is Omega_r.
    """

    u_diff: float
    u_mean: float
    norm: float
    prefactor: float
    root_arg: float
    delta: float

    @property
    def g_top(self) -> list[float]:
        u = self.u_mean
        return [0.0, 1.0 - u, 0.5 - u, 1.0 - u]

    @property
    def g_bottom(self) -> list[float]:
        u, d = self.u_mean, self.u_diff
        return [0.5 * d, -0.5 * d, 1.0 - u, -u, 0.0]

    @property
    def g_argument(self) -> float:
        return 0.5 * self.root_arg**2

    @property
    def g_scale(self) -> float:
        """Multiplier of the G-function giving E[Q(sqrt(k g_r g_k))]."""
        return self.prefactor * 2.0**self.u_mean / (2.0 * SQRT_PI)


def analytic_coefficients(k: float, fading_r: FadingParams, fading_k: FadingParams) -> AnalyticCoefficients:
    m_r, om_r = fading_r.m, fading_r.omega
    m_k, om_k = fading_k.m, fading_k.omega
    u_diff = m_r - m_k
    u_mean = 0.5 * (m_r + m_k)
    log_norm = (
        m_r * math.log(m_r / om_r) + m_k * math.log(m_k / om_k) - ln_gamma(m_r) - ln_gamma(m_k)
    )
    log_pref = log_norm + 0.5 * u_diff * math.log(m_k * om_r / (m_r * om_k)) - u_mean * math.log(k)
    root_arg = 2.0 * math.sqrt(m_k * m_r / (om_k * om_r * k))
    return AnalyticCoefficients(u_diff, u_mean, math.exp(log_norm), math.exp(log_pref), root_arg, om_r)


def product_q_average(k: float, fading_r: FadingParams, fading_k: FadingParams) -> tuple[float, str]:
    """E[Q(sqrt(k g_r g_k))] with independent Gamma gains.

    Returns (value, provenance); provenance is "closed_form" normally and
    "oracle" when the Mellin-Barnes evaluation could not be carried out.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if k == 0:
        return 0.5, "closed_form"
    co = analytic_coefficients(k, fading_r, fading_k)
    try:
        g = meijer_g_3345(co.g_top, co.g_bottom, co.g_argument)
    except (ContourError, ConvergenceError):
        return oracle_product_hop([(1.0, 1.0)], k, fading_r, fading_k), "oracle"
    return co.g_scale * g, "closed_form"


def _phase2(weights, zetas, scale, fading_r, fading_k):
    total = 0.0
    provenance = "closed_form"
    for w, z in zip(weights, zetas):
        val, prov = product_q_average(scale * z, fading_r, fading_k)
        total += w * val
        if prov != "closed_form":
            provenance = prov
    return 0.5 * total, provenance


def _harvest_scale(protocol, total_snr_db):
    dp = derive_power(protocol)
    if dp.psi is None:
        raise ValueError("second-hop product-channel analysis needs an EH protocol")
    return source_snr(protocol, total_snr_db) * dp.psi


def aber_phase2_u1(scenario, protocol, pa, total_snr_db, *, with_provenance=False):
    """First user's second-hop error rate (vs the relay's symbols), relay
    powered by harvested energy."""
    cw = constellation_weights(pa)
    val, prov = _phase2(
        (1, 1), cw.zeta_i, _harvest_scale(protocol, total_snr_db), scenario.relay_link, scenario.user1_link
    )
    return (val, prov) if with_provenance else val


def aber_phase2_u2(scenario, protocol, pa, total_snr_db, *, with_provenance=False):
    cw = constellation_weights(pa)
    val, prov = _phase2(
        cw.nu_j, cw.zeta_j, _harvest_scale(protocol, total_snr_db), scenario.relay_link, scenario.user2_link
    )
    return (val, prov) if with_provenance else val


# ---------------------------------------------------------------------------
# end to end
# ---------------------------------------------------------------------------

def combine_e2e(p_relay: float, p_hop: float) -> float:
    """Error in either hop, hops treated as independent."""
    return 1.0 - (1.0 - p_relay) * (1.0 - p_hop)


@dataclass(frozen=True)
class AberBreakdown:
    relay_s1: float
    relay_s2: float
    phase2_u1: float
    phase2_u2: float
    e2e_u1: float
    e2e_u2: float
    provenance: str = field(default="closed_form", compare=False)

    def get(self, stage: str, user: int) -> float:
        if stage == "relay":
            return self.relay_s1 if user == 1 else self.relay_s2
        if stage == "phase2":
            return self.phase2_u1 if user == 1 else self.phase2_u2
        if stage == "e2e":
            return self.e2e_u1 if user == 1 else self.e2e_u2
        raise ValueError(f"unknown stage {stage!r}")


def e2e_aber(scenario: Scenario, protocol: EhProtocol, pa: PowerAllocation, total_snr_db: float) -> AberBreakdown:
    r1 = aber_relay_s1(scenario, protocol, pa, total_snr_db)
    r2 = aber_relay_s2(scenario, protocol, pa, total_snr_db)
    if protocol.harvests:
        p1, prov1 = aber_phase2_u1(scenario, protocol, pa, total_snr_db, with_provenance=True)
        p2, prov2 = aber_phase2_u2(scenario, protocol, pa, total_snr_db, with_provenance=True)
        provenance = "oracle" if "oracle" in (prov1, prov2) else "closed_form"
    else:
        p1 = aber_phase2_no_eh(scenario, 1, pa, total_snr_db)
        p2 = aber_phase2_no_eh(scenario, 2, pa, total_snr_db)
        provenance = "closed_form"
    return AberBreakdown(r1, r2, p1, p2, combine_e2e(r1, p1), combine_e2e(r2, p2), provenance)


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------

def _single_q_average_quadrature(kappa: float, m: float, order: int) -> float:
    # E[Q(sqrt(k g))] = 1/2 P(X < kappa W), X ~ Gamma(m, 1), W ~ Gamma(1/2, 1),
    # kappa = 2m / (k omega). Both branches integrate a smooth function against
    # x^(m - 1/2) e^(-x); the branch is chosen by where that function varies.
    rule = gauss_laguerre(order, m - 0.5)
    x = rule.nodes
    if kappa <= 1.0:
        # average over W of the regularised lower incomplete gamma, written as
        # z^m * gamma*(m, z) with gamma* entire
        z = kappa * x
        tricomi = special.gammainc(m, z) / z**m
        return kappa**m / (2.0 * SQRT_PI) * float(np.dot(rule.weights, tricomi))
    # average over X of erfc(sqrt(X / kappa)), with erf(sqrt y) = sqrt(y) S(y), S entire
    y = x / kappa
    s = special.erf(np.sqrt(y)) / np.sqrt(y)
    return 0.5 - float(np.dot(rule.weights, s)) / (2.0 * math.sqrt(kappa) * math.gamma(m))


def oracle_single_hop(conditional_coeffs, c_scale: float, fading: FadingParams, order: int = 128) -> float:
    """Sum of weight * E[Q(sqrt(c_scale * zeta * g))] over (weight, zeta) pairs,
    by generalised Gauss-Laguerre quadrature over the Gamma-distributed gain."""
    if order < 64:
        raise ValueError("oracle order must be at least 64")
    total = 0.0
    for weight, zeta in conditional_coeffs:
        k = c_scale * zeta
        if k == 0:
            total += 0.5 * weight
            continue
        kappa = 2.0 * fading.m / (k * fading.omega)
        total += weight * _single_q_average_quadrature(kappa, fading.m, order)
    return total


def _product_q_average_quadrature(kappa: float, m_r: float, m_k: float, step: float) -> float:
    # E[Q(sqrt(k g_r g_k))] = 1/2 P(Y < kappa W / X) with unit-scale Gamma X (m_r),
    # Y (m_k), W (1/2), kappa = 2 m_r m_k / (k Omega_r Omega_k). In t = ln(W/X) the
    # ratio has a logistic-type density and P(Y < .) is analytic, so the
    # trapezoidal rule on the real line converges geometrically.
    centre = -math.log(kappa)
    lo = min(0.0, centre) - 45.0 / (0.5 + m_k)
    hi = max(0.0, centre) + 45.0 / m_r
    t = np.arange(lo, hi + step, step)
    log_density = 0.5 * t - (0.5 + m_r) * np.logaddexp(0.0, t) - special.betaln(0.5, m_r)
    vals = np.exp(log_density) * special.gammainc(m_k, kappa * np.exp(t))
    return 0.5 * step * float(vals.sum())


def oracle_product_hop(conditional_coeffs, c_scale: float, fading_r: FadingParams, fading_k: FadingParams,
                       step: float = 0.05) -> float:
    """Sum of weight * E[Q(sqrt(c_scale * zeta * g_r * g_k))] by quadrature.

    Independent of the Meijer-G route: the average is rewritten as a single
    integral over the log of a Gamma ratio and summed with the trapezoidal rule
    of spacing ``step``.
    """
    total = 0.0
    for weight, zeta in conditional_coeffs:
        k = c_scale * zeta
        if k == 0:
            total += 0.5 * weight
            continue
        kappa = 2.0 * fading_r.m * fading_k.m / (k * fading_r.omega * fading_k.omega)
        total += weight * _product_q_average_quadrature(kappa, fading_r.m, fading_k.m, step)
    return total
