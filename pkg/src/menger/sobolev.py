"""Fractional Sobolev-Slobodeckij seminorms and Hoelder diagnostics.

Two structurally independent discretizations: the first-difference
seminorm acts on edgewise unit tangents at edge midpoints, the
second-difference seminorm on vertex positions, so their equivalence
ratio is a genuine cross-check rather than a tautology.  The admissible
ratio interval on W^{1,rho} is [2^(-1-2/s), 2/(1+s*rho)].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .energy import EnergyParams, energy_decomposed
from .errors import BadParams, BadRegime, NotArclength, ZeroSeminorm
from .geometry import ClosedCurve, circle_distance


@dataclass(frozen=True)
class SeminormSpec:
    """Differentiability s in (0,1), integrability rho >= 1, and variant."""

    s: float
    rho: float = 2.0
    variant: str = "first_difference"

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise BadParams(f"s must lie in (0, 1), got {self.s}")
        if self.rho < 1.0:
            raise BadParams(f"rho must be >= 1, got {self.rho}")
        if self.variant not in ("first_difference", "second_difference"):
            raise BadParams(f"unknown variant {self.variant!r}")


@dataclass(frozen=True)
class HoelderReport:
    alpha: float
    seminorm: float
    pair: tuple[float, float]


@dataclass(frozen=True)
class EquivalenceReport:
    ratio: float
    lower: float
    upper: float
    slack: float
    within_slack: bool


@dataclass(frozen=True)
class EnergySpaceReport:
    energy: float
    seminorm: float
    norm: float
    energy_over_norm_q: float
    seminorm_q_over_energy: float


def seminorm_first(curve: ClosedCurve, spec: SeminormSpec) -> float:
    """First-difference seminorm of the tangent: sum over the midpoint grid of

        |t(u+w) - t(u)|^rho / |w|^(1 + rho s) * (1/N^2),  w = j/N,

    for j = +-1 .. +-floor(N/2), all to the power 1/rho.
    """
    if spec.variant != "first_difference":
        raise BadParams("spec.variant must be 'first_difference'")
    if not curve.is_arclength:
        raise NotArclength("tangent seminorm needs an arc-length curve")
    t = curve.tangents
    N = curve.N
    acc = 0.0
    for j in range(1, N // 2 + 1):
        diff = np.linalg.norm(np.roll(t, -j, axis=0) - t, axis=1)
        # +j and -j contribute equally after summing the periodic u-grid
        acc += 2.0 * float(np.sum(diff**spec.rho)) * (j / N) ** (-1.0 - spec.rho * spec.s)
    return (acc / N**2) ** (1.0 / spec.rho)


def seminorm_second(curve: ClosedCurve, spec: SeminormSpec) -> float:
    """Second-difference seminorm of the positions over |w| <= 1/4:

        |f(u+w) - 2 f(u) + f(u-w)|^rho / |w|^(1 + rho (1+s)) * (1/N^2),

    to the power 1/rho.  Second differences annihilate affine functions.
    """
    if spec.variant != "second_difference":
        raise BadParams("spec.variant must be 'second_difference'")
    X = curve.vertices
    N = curve.N
    acc = 0.0
    for j in range(1, N // 4 + 1):
        d2 = np.linalg.norm(np.roll(X, -j, axis=0) - 2.0 * X + np.roll(X, j, axis=0), axis=1)
        acc += 2.0 * float(np.sum(d2**spec.rho)) * (j / N) ** (-1.0 - spec.rho * (1.0 + spec.s))
    return (acc / N**2) ** (1.0 / spec.rho)


def equivalence_interval(s: float, rho: float) -> tuple[float, float]:
    return 2.0 ** (-1.0 - 2.0 / s), 2.0 / (1.0 + s * rho)


def equivalence_check(curve: ClosedCurve, spec: SeminormSpec, slack: float = 0.10) -> EquivalenceReport:
    """Ratio of the two seminorms against its admissible interval.

    The interval holds in the continuum; ``slack`` widens both endpoints
    to absorb discretization error.
    """
    first = seminorm_first(curve, SeminormSpec(spec.s, spec.rho, "first_difference"))
    second = seminorm_second(curve, SeminormSpec(spec.s, spec.rho, "second_difference"))
    if first == 0.0 or second == 0.0:
        raise ZeroSeminorm("degenerate curve: a seminorm vanished")
    lower, upper = equivalence_interval(spec.s, spec.rho)
    ratio = second / first
    ok = lower * (1.0 - slack) <= ratio <= upper * (1.0 + slack)
    return EquivalenceReport(ratio, lower, upper, slack, ok)


def hoelder_estimate(curve: ClosedCurve, alpha: float) -> HoelderReport:
    """Largest tangent Hoelder quotient max |t(u) - t(v)| / d(u, v)^alpha."""
    if not 0.0 < alpha < 1.0:
        raise BadParams(f"alpha must lie in (0, 1), got {alpha}")
    t = curve.tangents
    N = curve.N
    best = 0.0
    best_pair = (0.0, 0.0)
    for j in range(1, N // 2 + 1):
        diff = np.linalg.norm(np.roll(t, -j, axis=0) - t, axis=1)
        d = float(circle_distance(j / N))
        quotients = diff / d**alpha
        i = int(np.argmax(quotients))
        if quotients[i] > best:
            best = float(quotients[i])
            best_pair = ((i + 0.5) / N, (i + j + 0.5) / N % 1.0)
    return HoelderReport(alpha, best, best_pair)


def energy_space_ratios(curve: ClosedCurve, params: EnergyParams) -> EnergySpaceReport:
    """Energy against the fractional norm it is equivalent to.

    Uses s = (3p - 2q - 2)/q and rho = q; the norm is the tangent
    seminorm plus the sup of the tangent magnitude.  Only family-level
    boundedness of the two ratios is meaningful (the equivalence constants
    are not computed), so callers compare across curve families.
    """
    if not params.is_subcritical():
        raise BadRegime(
            f"energy-space ratios need sub-critical (p, q); got {params.range_class.label.value}"
        )
    spec = SeminormSpec(params.s, params.q, "first_difference")
    semi = seminorm_first(curve, spec)
    sup_tangent = float(np.max(np.linalg.norm(curve.tangents, axis=1)))
    norm = semi + sup_tangent
    energy = energy_decomposed(curve, params).value
    if energy <= 0.0 or semi <= 0.0:
        raise ZeroSeminorm("degenerate configuration for ratio diagnostics")
    return EnergySpaceReport(
        energy=energy,
        seminorm=semi,
        norm=norm,
        energy_over_norm_q=energy / norm**params.q,
        seminorm_q_over_energy=semi**params.q / energy,
    )
