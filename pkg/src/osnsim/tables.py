"""Closed-form scaling orders for the broadcast and multicast models.

Each predictor maps exponents to an :class:`AsymptoticOrder`
``Theta(n^poly * (log n)^logpow)``.  Inputs are converted to exact rationals
(via their shortest decimal repr) so regime boundaries such as ``beta == 3/2``
or ``gamma == 3 - phi`` are matched exactly.

Known irregularities in the reference tables, kept as given:

* G, ``phi < 1``, ``1 < beta < 2``, ``gamma >= 2``: printed without the
  ``n``; read as ``n^(2 - beta/2)``.
* G, ``phi == 2``: the non-``beta > 2`` columns give a single entry
  labelled for ``gamma < 1`` only; it is applied to every ``gamma``.
* W is printed under the header ``M``; same object.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

F = Fraction
HALF = F(1, 2)
THREE_HALVES = F(3, 2)


def exact(x) -> Fraction:
    """Exact rational for a user-supplied exponent (``0.1`` -> ``1/10``)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return F(x)
    return F(repr(float(x)))


def _nonneg(name: str, x) -> Fraction:
    v = exact(x)
    if v < 0:
        raise ValueError(f"{name} must be >= 0, got {x!r}")
    return v


@dataclass(frozen=True, order=True)
class AsymptoticOrder:
    """``Theta(n^poly * (log n)^logpow)``; ordering is lexicographic."""

    poly: Fraction
    logpow: Fraction = F(0)
    source: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "poly", exact(self.poly))
        object.__setattr__(self, "logpow", exact(self.logpow))

    def times(self, other: "AsymptoticOrder", source: str | None = None) -> "AsymptoticOrder":
        return AsymptoticOrder(self.poly + other.poly, self.logpow + other.logpow, source or self.source)

    def value(self, n: float) -> float:
        return n ** float(self.poly) * math.log(n) ** float(self.logpow)

    def to_dict(self) -> dict:
        return {"poly": float(self.poly), "logpow": float(self.logpow), "source_table": self.source}

    def __str__(self) -> str:
        parts = [f"n^{_fmt(self.poly)}"]
        if self.logpow:
            parts.append(f"(log n)^{_fmt(self.logpow)}")
        return "Theta(" + " * ".join(parts) + ")"


def _fmt(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _o(poly, logpow=0, source=""):
    return AsymptoticOrder(F(poly), F(logpow), source)


# --- single-exponent laws ------------------------------------------------------


def predicted_mean_anchor_distance(beta) -> AsymptoticOrder:
    """Expected source-to-anchor distance."""
    b = _nonneg("beta", beta)
    src = "mean anchor distance"
    if b > THREE_HALVES:
        return _o(0, 0, src)
    if b == THREE_HALVES:
        return _o(0, 1, src)
    if b > 1:
        return _o(THREE_HALVES - b, 0, src)
    if b == 1:
        return _o(HALF, -1, src)
    return _o(HALF, 0, src)


def predicted_LP(beta) -> AsymptoticOrder:
    """n-dependent factor of one session's anchor EMST; multiply by sqrt(q)."""
    b = _nonneg("beta", beta)
    src = "session anchor EMST"
    if b > 2:
        return _o(0, 0, src)
    if b == 2:
        return _o(0, 1, src)
    if b > 1:
        return _o(1 - b / 2, 0, src)
    if b == 1:
        return _o(HALF, -HALF, src)
    return _o(HALF, 0, src)


def predicted_Q(gamma) -> AsymptoticOrder:
    """Total friend count over all nodes."""
    g = _nonneg("gamma", gamma)
    src = "degree sum Q"
    if g > 2:
        return _o(1, 0, src)
    if g == 2:
        return _o(1, 1, src)
    if g > 1:
        return _o(3 - g, 0, src)
    if g == 1:
        return _o(2, -1, src)
    return _o(2, 0, src)


def predicted_W(gamma, phi) -> AsymptoticOrder:
    """Total multicast destination count."""
    g = _nonneg("gamma", gamma)
    p = _nonneg("phi", phi)
    src = "destination sum W"
    if p > 2:
        return _o(1, 0, src)
    if p == 2:
        return _o(1, 0, src) if g > 1 else _o(1, 1, src)
    if p > 1:
        return _tail_3mphi(g, p, src)
    if p == 1:
        if g >= 2:
            return _o(1, 0, src)
        if g > 1:
            return _o(3 - g, -1, src)
        if g == 1:
            return _o(2, -2, src)
        return _o(2, -1, src)
    return predicted_Q(g).times(_o(0), src)


def _tail_3mphi(g: Fraction, p: Fraction, src: str) -> AsymptoticOrder:
    """Shared five-way split on gamma around ``3 - phi`` for ``1 < phi < 2``."""
    t = 3 - p
    if g > t:
        return _o(1, 0, src)
    if g == t:
        return _o(1, 1, src)
    if g > 1:
        return _o(4 - g - p, 0, src)
    if g == 1:
        return _o(t, -1, src)
    return _o(t, 0, src)


# --- broadcast ------------------------------------------------------------------


def _beta_columns(b: Fraction, src: str) -> AsymptoticOrder:
    """The recurring light-tail column pattern in beta."""
    if b > 2:
        return _o(1, 0, src)
    if b == 2:
        return _o(1, 1, src)
    if b > 1:
        return _o(2 - b / 2, 0, src)
    if b == 1:
        return _o(THREE_HALVES, -HALF, src)
    return _o(THREE_HALVES, 0, src)


def predicted_H(gamma, beta) -> AsymptoticOrder:
    """Broadcast transport complexity."""
    g = _nonneg("gamma", gamma)
    b = _nonneg("beta", beta)
    src = "H broadcast"
    if g > 2:
        return _beta_columns(b, src)
    if g == 2:
        return _o(1, 1, src) if b >= 2 else _beta_columns(b, src)
    if g > THREE_HALVES:
        if b >= 2 * g - 2:
            return _o(3 - g, 0, src)
        return _beta_columns(b, src)
    if g == THREE_HALVES:
        if b > 1:
            return _o(THREE_HALVES, 0, src)
        if b == 1:
            return _o(THREE_HALVES, HALF, src)
        return _o(THREE_HALVES, 1, src)
    if g > 1:
        return _o(3 - g, 0, src)
    if g == 1:
        return _o(2, -1, src)
    return _o(2, 0, src)


def _broadcast_emst_lower(g: Fraction, b: Fraction, src: str) -> AsymptoticOrder:
    if g > THREE_HALVES:
        return _beta_columns(b, src)
    shift, lshift = _beta_shift(b)
    if g == THREE_HALVES:
        poly, logpow = F(1), F(1)
    elif g > 1:
        poly, logpow = F(5, 2) - g, F(0)
    elif g == 1:
        poly, logpow = THREE_HALVES, F(-1)
    else:
        poly, logpow = THREE_HALVES, F(0)
    return _o(poly + shift, logpow + lshift, src)


# --- multicast ------------------------------------------------------------------


def predicted_G(beta, gamma, phi) -> AsymptoticOrder:
    """Multicast transport complexity."""
    b = _nonneg("beta", beta)
    g = _nonneg("gamma", gamma)
    p = _nonneg("phi", phi)
    src = "G multicast"

    if p > 2:
        return _beta_columns(b, src)

    if p == 2:
        if b > 2:
            return _o(1, 0, src) if g > 1 else _o(1, 1, src)
        if b == 2:
            return _o(1, 1, src)
        if b > 1:
            return _o(2 - b / 2, 0, src)
        if b == 1:
            return _o(THREE_HALVES, HALF, src)
        return _o(THREE_HALVES, 0, src)

    if THREE_HALVES < p < 2:
        t = 3 - p
        if b > 2:
            return _tail_3mphi(g, p, src)
        if b == 2:
            return _o(1, 1, src) if g >= t else _tail_3mphi(g, p, src)
        if b > 1:
            if g >= t:
                return _o(2 - b / 2, 0, src)
            if g > 1:
                return _o(4 - g - p, 0, src)
            if g == 1:
                return _o(2 - b / 2, 0, src)
            return _o(t, 0, src)
        if b == 1:
            return _o(THREE_HALVES, -HALF, src)
        return _o(THREE_HALVES, 0, src)

    if p == THREE_HALVES:
        if b > 1:
            if g >= THREE_HALVES and b <= 2:
                return _o(1, 1, src) if b == 2 else _o(2 - b / 2, 0, src)
            if g > THREE_HALVES:
                return _o(1, 0, src)
            if g == THREE_HALVES:
                return _o(1, 1, src)
            if g > 1:
                return _o(F(5, 2) - g, 0, src)
            if g == 1:
                return _o(THREE_HALVES, -1, src)
            return _o(THREE_HALVES, 0, src)
        if b == 1:
            return _o(THREE_HALVES, -HALF, src) if g > 1 else _o(THREE_HALVES, HALF, src)
        return _o(THREE_HALVES, 0, src) if g > 1 else _o(THREE_HALVES, 1, src)

    if 1 < p < THREE_HALVES:
        t = 3 - p
        if b > 1:
            if g >= t and b <= 2:
                return _o(1, 1, src) if b == 2 else _o(2 - b / 2, 0, src)
            return _tail_3mphi(g, p, src)
        s = F(5, 2) - p
        top = _o(THREE_HALVES, -HALF, src) if b == 1 else _o(THREE_HALVES, 0, src)
        edge = _o(THREE_HALVES, HALF, src) if b == 1 else _o(THREE_HALVES, 1, src)
        if g > s:
            return top
        if g == s:
            return edge
        if g > 1:
            return _o(4 - g - p, 0, src)
        if g == 1:
            return _o(t, -1, src)
        return _o(t, 0, src)

    if p == 1:
        if g >= 2:
            return _beta_columns(b, src)
        if g > 1:
            return _o(3 - g, -1, src)
        if g == 1:
            return _o(2, -2, src)
        return _o(2, -1, src)

    # phi < 1
    if b > 1:
        if g >= 2 and b <= 2:
            return _o(1, 1, src) if b == 2 else _o(2 - b / 2, 0, src)
        return predicted_Q(g).times(_o(0), src)
    top = _o(THREE_HALVES, -HALF, src) if b == 1 else _o(THREE_HALVES, 0, src)
    edge = _o(THREE_HALVES, HALF, src) if b == 1 else _o(THREE_HALVES, 1, src)
    if g > THREE_HALVES:
        return top
    if g == THREE_HALVES:
        return edge
    if g > 1:
        return _o(3 - g, 0, src)
    if g == 1:
        return _o(2, -1, src)
    return _o(2, 0, src)


def _beta_shift(b: Fraction) -> tuple[Fraction, Fraction]:
    """Row offset of the EMST lower-bound tables relative to their beta > 2 row."""
    if b > 2:
        return F(0), F(0)
    if b == 2:
        return F(0), F(1)
    if b > 1:
        return 1 - b / 2, F(0)
    if b == 1:
        return HALF, -HALF
    return HALF, F(0)


def _multicast_emst_lower(g: Fraction, b: Fraction, p: Fraction, src: str) -> AsymptoticOrder:
    shift, lshift = _beta_shift(b)
    if p > THREE_HALVES:
        return _beta_columns(b, src)
    if p == THREE_HALVES:
        extra = 0 if g > 1 else 1
        base = _beta_columns(b, src)
        return _o(base.poly, base.logpow + extra, src)
    if 1 < p < THREE_HALVES:
        s = F(5, 2) - p
        if g > s:
            return _beta_columns(b, src)
        if g == s:
            poly, logpow = F(1), F(1)
        elif g > 1:
            poly, logpow = F(7, 2) - g - p, F(0)
        elif g == 1:
            poly, logpow = s, F(-1)
        else:
            poly, logpow = s, F(0)
        return _o(poly + shift, logpow + lshift, src)
    if p == 1:
        if g >= THREE_HALVES:
            return _beta_columns(b, src)
        if g > 1:
            poly, logpow = F(5, 2) - g, F(-1)
        elif g == 1:
            poly, logpow = THREE_HALVES, F(-2)
        else:
            poly, logpow = THREE_HALVES, F(-1)
        return _o(poly + shift, logpow + lshift, src)
    return _broadcast_emst_lower(g, b, src)


def predicted_emst_sum_lower(gamma, beta, pattern: str = "broadcast", phi=None) -> AsymptoticOrder:
    """Lower bound on the summed anchor-set EMST lengths."""
    g = _nonneg("gamma", gamma)
    b = _nonneg("beta", beta)
    if pattern == "broadcast":
        return _broadcast_emst_lower(g, b, "anchor EMST sum, broadcast")
    if pattern == "multicast":
        if phi is None:
            raise ValueError("multicast needs phi")
        return _multicast_emst_lower(g, b, _nonneg("phi", phi), "anchor EMST sum, multicast")
    raise ValueError(f"pattern must be broadcast or multicast, got {pattern!r}")


def predict(gamma, beta, pattern: str = "broadcast", phi=None) -> AsymptoticOrder:
    """Transport-complexity order for one parameter point."""
    if pattern == "broadcast":
        return predicted_H(gamma, beta)
    if pattern == "multicast":
        if phi is None:
            raise ValueError("multicast needs phi")
        return predicted_G(beta, gamma, phi)
    raise ValueError(f"pattern must be broadcast or multicast, got {pattern!r}")


def predict_measurement(measurement: str, gamma, beta, pattern: str = "broadcast", phi=None) -> AsymptoticOrder:
    """Expected growth of one sweep measurement."""
    if measurement == "total-load":
        return predict(gamma, beta, pattern, phi)
    if measurement == "anchor-emst-sum":
        return predicted_emst_sum_lower(gamma, beta, pattern, phi)
    if measurement == "degree-sum":
        return predicted_Q(gamma)
    if measurement == "destination-sum":
        if pattern == "broadcast":
            return predicted_Q(gamma)
        return predicted_W(gamma, phi)
    if measurement == "mean-anchor-distance":
        return predicted_mean_anchor_distance(beta)
    raise ValueError(f"unknown measurement {measurement!r}")


def cross_table_mismatches(gammas, betas, phi=0) -> list[dict]:
    """Grid cells where the multicast table at ``phi < 1`` disagrees with H."""
    if exact(phi) >= 1:
        raise ValueError("comparison only defined for phi < 1")
    out = []
    for g in gammas:
        for b in betas:
            h = predicted_H(g, b)
            m = predicted_G(b, g, phi)
            if (h.poly, h.logpow) != (m.poly, m.logpow):
                out.append({"gamma": g, "beta": b, "H": str(h), "G": str(m)})
    return out
