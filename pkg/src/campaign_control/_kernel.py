"""Integer kernel for the bounded-confidence update.

A sorted profile is held as ``(nums, den)``: voter ``i`` sits at
``nums[i] / den``.  Keeping one shared denominator turns every comparison and
mean into plain integer arithmetic, which is several times faster than
per-value :class:`~fractions.Fraction` objects and still exact.  The result is
always reduced (``gcd(nums..., den) == 1``).
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm

IntProfile = tuple[tuple[int, ...], int]


def from_fractions(values) -> IntProfile:
    den = 1
    for v in values:
        den = lcm(den, v.denominator)
    return tuple(v.numerator * (den // v.denominator) for v in values), den


def to_fractions(profile: IntProfile) -> tuple[Fraction, ...]:
    nums, den = profile
    return tuple(Fraction(a, den) for a in nums)


def bc_step(profile: IntProfile, eps: Fraction, control: Fraction | None = None) -> IntProfile:
    """One controlled BC update of a sorted profile (closed ``<= eps`` test)."""
    nums, den = profile
    n = len(nums)
    scale = lcm(den, eps.denominator)
    if control is not None:
        scale = lcm(scale, control.denominator)
    f = scale // den
    a = [x * f for x in nums] if f != 1 else list(nums)
    e = eps.numerator * (scale // eps.denominator)

    prefix = [0] * (n + 1)
    s = 0
    for i, x in enumerate(a):
        s += x
        prefix[i + 1] = s

    if control is not None:
        u = control.numerator * (scale // control.denominator)
    sums = [0] * n
    counts = [0] * n
    lo = hi = 0
    for i, x in enumerate(a):
        low_edge = x - e
        while a[lo] < low_edge:
            lo += 1
        high_edge = x + e
        if hi < i:
            hi = i
        while hi + 1 < n and a[hi + 1] <= high_edge:
            hi += 1
        total = prefix[hi + 1] - prefix[lo]
        count = hi - lo + 1
        if control is not None and low_edge <= u <= high_edge:
            total += u
            count += 1
        sums[i] = total
        counts[i] = count

    m = 1
    for c in set(counts):
        m = lcm(m, c)
    new = [t * (m // c) for t, c in zip(sums, counts)]
    new_den = scale * m
    g = new_den
    for x in new:
        g = gcd(g, x)
        if g == 1:
            break
    if g != 1:
        new = [x // g for x in new]
        new_den //= g
    return tuple(new), new_den


def count_in(profile: IntProfile, left: Fraction, right: Fraction) -> int:
    """Number of voters inside the closed interval ``[left, right]``."""
    nums, den = profile
    ln, ld = left.numerator, left.denominator
    rn, rd = right.numerator, right.denominator
    lo_bound = ln * den
    hi_bound = rn * den
    return sum(1 for x in nums if x * ld >= lo_bound and x * rd <= hi_bound)
