"""scikit-learn style front end to classification and counting.

Profiles are passed either as :class:`CriticalPointProfile` objects or as a
2-D array with columns ``beta, b1, b2, b0, K, Re zeta1, Im zeta1, Re zeta2,
Im zeta2`` (the position columns may be omitted for classification only).
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .counting import (build_report, census_from_classifications, multiplicity_bound,
                       theorem1_gate)
from .critical import CriticalPointProfile, PointSet, check_beta, classify_point
from .errors import DomainError
from .heisenberg import NORTH, SpherePoint
from .interaction import PD_MARGIN, GreenKernelConfig
from .quadrature import compute_structural_constants

SET_CODES = {PointSet.NEITHER: 0, PointSet.K1: 1, PointSet.K2: 2}


def check_profiles(X) -> list[CriticalPointProfile]:
    """Coerce ``X`` into a list of validated profiles."""
    if isinstance(X, Sequence) and X and all(isinstance(p, CriticalPointProfile) for p in X):
        profiles = list(X)
    else:
        arr = check_array(X, dtype=float, ensure_min_features=5)
        if arr.shape[1] not in (5, 9):
            raise DomainError("expected 5 or 9 columns: beta, b1, b2, b0, K[, position]")
        profiles = []
        for i, row in enumerate(arr):
            if arr.shape[1] == 9:
                pos = SpherePoint(complex(row[5], row[6]), complex(row[7], row[8]))
            else:
                pos = NORTH
            profiles.append(CriticalPointProfile(f"xi{i}", pos, row[0], tuple(row[1:4]), row[4]))
    for p in profiles:
        check_beta(p.beta)
        if any(v == 0 for v in p.b):
            raise DomainError(f"{p.id}: coefficients b must be nonzero")
        if not p.k_value > 0:
            raise DomainError(f"{p.id}: K must be positive")
    return profiles


class ProfileClassifier(TransformerMixin, BaseEstimator):
    """Map profiles to ``[sigma, m, set]`` with set coded 0 Neither, 1 K1, 2 K2."""

    def __init__(self, tolerance: float = 1e-8):
        self.tolerance = tolerance

    def fit(self, X, y=None):
        profiles = check_profiles(X)
        self.constants_ = {b: compute_structural_constants(b, self.tolerance)
                           for b in sorted({p.beta for p in profiles})}
        self.n_features_in_ = 5
        return self

    def _constants(self, beta):
        if beta not in self.constants_:
            self.constants_[beta] = compute_structural_constants(beta, self.tolerance)
        return self.constants_[beta]

    def transform(self, X):
        check_is_fitted(self, "constants_")
        out = []
        for p in check_profiles(X):
            cl = classify_point(p, self._constants(p.beta))
            out.append([cl.sigma, cl.m, SET_CODES[cl.set]])
        return np.array(out, dtype=float)

    def predict(self, X):
        return self.transform(X)[:, 2].astype(int)


class MultiplicityCensus(BaseEstimator):
    """Census of critical points at infinity for a fixed set of profiles.

    After ``fit``: ``classes_``, ``k1_plus_``, ``indices_``, ``l_plus_``, ``L0_``.
    ``predict(k)`` gives the existence verdict for each ``k``; ``bound(k)`` the
    lower bound on the number of solutions of Morse index at most ``k``.
    """

    def __init__(self, c_G: float = 1.0, pd_margin: float = PD_MARGIN, tolerance: float = 1e-8):
        self.c_G = c_G
        self.pd_margin = pd_margin
        self.tolerance = tolerance

    def fit(self, X, y=None):
        profiles = check_profiles(X)
        betas = sorted({2.0} | {p.beta for p in profiles})
        consts = {b: compute_structural_constants(b, self.tolerance) for b in betas}
        classes = [classify_point(p, consts[p.beta]) for p in profiles]
        c2 = consts[2.0]
        census, k1plus = census_from_classifications(
            profiles, classes, c2.kappa_prime.value, c2.c.value, c2.c_prime.value,
            GreenKernelConfig(self.c_G), self.pd_margin)
        self.profiles_ = profiles
        self.classes_ = classes
        self.census_ = census
        self.k1_plus_ = [m.members for m in k1plus]
        self.indices_ = [c.index for c in census.points]
        self.l_plus_ = census.l_plus
        self.L0_ = census.L0
        self.report_ = build_report(census, k1plus)
        return self

    def predict(self, k):
        check_is_fitted(self, "census_")
        ks = np.atleast_1d(np.asarray(k, dtype=int))
        return np.array([theorem1_gate(self.census_, int(v)).verdict for v in ks])

    def bound(self, k):
        check_is_fitted(self, "census_")
        ks = np.atleast_1d(np.asarray(k, dtype=int))
        return np.array([multiplicity_bound(self.census_, int(v)) for v in ks])
