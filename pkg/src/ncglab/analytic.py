"""The exact one-parameter solution family D_c = D_sphere + c B.

B = sign(D) cos(pi D) is diagonal in the (l, m, s) basis with entries
s (-1)^(l + 1/2), so the positive eigenvalues of D_c are

    mu_lam = lam + c (-1)^lam,        lam = l + 1/2 = 1, 2, ...

The truncation boundary defect of any member is a multiple of gamma on the
top eigenspaces; its coefficient vanishes exactly at c = s(L)/2 where the
sign s(L) = (-1)^lam_max is the parity of the highest eigenvalue.
"""

from dataclasses import dataclass

import numpy as np

from .heisenberg import DefectReport, first_order_defect, sphere_defect
from .triples import build_sphere


def _check_half_integer(l):
    if l < 0.5 or abs(2 * l - round(2 * l)) > 1e-12 or round(2 * l) % 2 == 0:
        raise ValueError(f"l must be a half-integer >= 1/2, got {l!r}")
    return round(2 * l) / 2


@dataclass(frozen=True)
class RecursionCoeffs:
    l: float
    a: float        # (1+l)^2 (2l-1)
    b: float        # l^2 (3+2l)
    c: float        # (1 + 9l^2 + 6l^3) / (16 l^2 (l+1)^2)


def coeffs(l):
    l = _check_half_integer(l)
    return RecursionCoeffs(
        l=l,
        a=(1 + l) ** 2 * (2 * l - 1),
        b=l ** 2 * (3 + 2 * l),
        c=(1 + 9 * l ** 2 + 6 * l ** 3) / (16 * l ** 2 * (l + 1) ** 2),
    )


def build_B(t):
    """The bounded perturbation direction: diagonal entries s cos(pi (l+1/2))."""
    diag = [s * np.cos(np.pi * (l + 0.5)) for (l, m, s) in t.basis]
    return np.diag(np.round(np.array(diag)).astype(complex))


@dataclass(frozen=True)
class FamilyMember:
    cutoff: int
    c: float
    D: np.ndarray
    mu: tuple           # positive eigenvalues mu_lam, lam = 1..cutoff


def family_mu(cutoff, c):
    return tuple(lam + c * (-1) ** lam for lam in range(1, cutoff + 1))


def family_member(t, c):
    """D_c = D + c B on the truncated sphere carrier."""
    D = t.D + c * build_B(t)
    return FamilyMember(cutoff=t.cutoff, c=float(c), D=D,
                        mu=family_mu(t.cutoff, c))


def boundary_coefficient(mu_topminus1, mu_top, l_top):
    """Coefficient of (E_top + E_-top) gamma in the truncation defect.

    c_l mu_l^2 + (1-2l)/(16 l^2) mu_{l-1} (mu_{l-1} + 2 mu_l) - 1,
    with mu_{l-1} = 0 when l_top = 1/2.
    """
    l = _check_half_integer(l_top)
    cl = coeffs(l).c
    return (cl * mu_top ** 2
            + (1 - 2 * l) / (16 * l ** 2) * mu_topminus1 * (mu_topminus1 + 2 * mu_top)
            - 1)


def family_boundary_coefficient(cutoff, c):
    mu = family_mu(cutoff, c)
    mu_top = mu[-1]
    mu_tm1 = mu[-2] if cutoff > 1 else 0.0
    return boundary_coefficient(mu_tm1, mu_top, cutoff - 0.5)


def optimal_c(cutoff):
    """The unique c with vanishing boundary coefficient: c = (-1)^lam_max / 2,
    so the top eigenvalue of c B is +1/2."""
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    return 0.5 * (-1) ** cutoff


def recursion_residual(mu, l, transcribed=False):
    """LHS - RHS of the interior eigenvalue recursion at spinor momentum l.

    mu maps lam -> mu_lam (dict or sequence indexed from lam = 1) and must
    cover lam - 1, lam, lam + 1 for lam = l + 1/2, with mu_0 = 0.

    The derived form (default), obtained from the band matrices by imposing
    interior vanishing of the Heisenberg defect for diagonal candidates, is

        mu_l^2 - 2 a_l mu_l mu_{l-1} + 2 b_l mu_{l+1} mu_l + b_l mu_{l+1}^2
            = a_l mu_{l-1}^2 + 16 l^2 (1+l)^2.

    transcribed=True instead evaluates the variant with b_l mu_{l+1}^2 moved
    to the right-hand side (which the family mu_lam does not satisfy); it is
    kept as a diagnostic only.
    """
    l = _check_half_integer(l)
    lam = round(l + 0.5)
    try:
        if isinstance(mu, dict):
            mm1 = mu[lam - 1] if lam > 1 else mu.get(0, 0.0)
            m0, mp1 = mu[lam], mu[lam + 1]
        else:
            seq = list(mu)
            mm1 = seq[lam - 2] if lam > 1 else 0.0
            m0, mp1 = seq[lam - 1], seq[lam]
    except (KeyError, IndexError) as exc:
        raise ValueError(f"mu must cover lam-1, lam, lam+1 around lam={lam}") from exc
    cf = coeffs(l)
    lhs = m0 ** 2 - 2 * cf.a * m0 * mm1 + 2 * cf.b * mp1 * m0
    rhs = cf.a * mm1 ** 2 + cf.b * mp1 ** 2 + 16 * l ** 2 * (1 + l) ** 2
    if transcribed:
        return lhs - rhs
    return lhs - rhs + 2 * cf.b * mp1 ** 2


def family_defect_norm(t, c, kappa=1.0):
    """||delta(Y, gamma, D_c)||_2 evaluated directly."""
    member = family_member(t, c)
    return np.sqrt(sphere_defect(t, member.D, kappa).constraint)


def first_order_truncation_defect(cutoff, c, i, j, pad=2):
    """Truncation-induced part of the first-order defect [[D_c, Y_i], Y_j].

    The first-order defect of a family member splits into the compression of
    its infinite-size limit (nonzero for c != 0, since B is not an
    endomorphism of the spinor bundle) and a part produced by the cutoff
    itself.  This returns the cutoff part: the defect at this truncation
    minus the compressed defect computed at cutoff + pad.  It vanishes
    identically exactly at c = optimal_c(cutoff); for c = 0 it is the whole
    defect of the round-sphere operator (constant norm, trace norm growing
    linearly with the cutoff).

    pad >= 2 suffices: the defect couples momenta at most two steps apart.
    """
    if pad < 2:
        raise ValueError("pad must be at least 2")
    t = build_sphere(cutoff)
    tb = build_sphere(cutoff + pad)
    F = first_order_defect(t, family_member(t, c).D, i, j).defect
    Fb = first_order_defect(tb, family_member(tb, c).D, i, j).defect
    index = {lab: k for k, lab in enumerate(tb.basis)}
    sel = [index[lab] for lab in t.basis]
    rel = F - Fb[np.ix_(sel, sel)]
    return DefectReport.from_defect(rel, "sphere", cutoff,
                                    meta={"first_order": [i, j], "c": c,
                                          "pad": pad,
                                          "part": "truncation-induced"})
