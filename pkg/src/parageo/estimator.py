"""scikit-learn style wrapper around construction and verification."""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .interval import DEFAULT_PRECISION, max_precision
from .minima import BodyFamily, L_u_certified
from .systems import MeshSequence, QuasiRegularSystem, has_mesh_at_least
from .validation import check_dimension, check_mesh_values, check_precision, to_fraction
from .verify import DEFAULT_SAMPLES, MeshTooFine, build_construction, theorem_report


def _as_rationals(q) -> list[Fraction]:
    arr = np.asarray(q, dtype=object).ravel()
    return [to_fraction(v) for v in arr]


class QuasiRegularRealizer(BaseEstimator, TransformerMixin):
    """Fit a mesh sequence X_1 < X_2 < ...; transform q into certified log minima.

    Parameters
    ----------
    n : int
        Ambient dimension.
    precision_bits : int
        Working precision of the interval computations.
    grid : int
        Uniform samples per interval used by the deviation report.
    stages : int or None
        Number of constructed points; None picks it adaptively.
    verify : bool
        Run the deviation report during ``fit``.

    Attributes
    ----------
    system_ : QuasiRegularSystem
    construction_ : ConstructionResult
    direction_ : DirectionProxy
    report_ : VerificationReport or None
    """

    def __init__(self, n: int = 2, precision_bits: int = DEFAULT_PRECISION, grid: int = DEFAULT_SAMPLES,
                 stages: Optional[int] = None, verify: bool = True):
        self.n = n
        self.precision_bits = precision_bits
        self.grid = grid
        self.stages = stages
        self.verify = verify

    def fit(self, X, y=None):
        n = check_dimension(self.n)
        prec = check_precision(self.precision_bits, max_precision())
        values = check_mesh_values(_as_rationals(X))
        if len(values) < n:
            raise ValueError(f"need at least n = {n} mesh values, got {len(values)}")
        system = QuasiRegularSystem(n, MeshSequence.explicit(values))
        if has_mesh_at_least(system.mesh, prec=prec) is not True:
            raise MeshTooFine("mesh must be certified at least log 4")
        self.system_ = system
        self.construction_ = build_construction(self.system_, prec, self.stages)
        self.direction_ = self.construction_.direction()
        self.report_ = theorem_report(self.system_, self.construction_, self.grid, prec) if self.verify else None
        self.n_features_in_ = 1
        return self

    def predict(self, q) -> np.ndarray:
        """P(q) for each q, as floats of shape (len(q), n)."""
        check_is_fitted(self, "system_")
        return np.array([[float(v) for v in self.system_.evaluate(x)] for x in _as_rationals(q)])

    def transform(self, q) -> np.ndarray:
        """Midpoints of the certified centers for L_u(q), shape (len(q), n)."""
        check_is_fitted(self, "construction_")
        body = BodyFamily.from_proxy(self.direction_)
        out = []
        for x in _as_rationals(q):
            i = self.system_.interval_index(x)
            window = [self.construction_.point(j) for j in range(i, i + self.system_.n)]
            cert = L_u_certified(x, window, body, self.construction_.precision_bits)
            out.append([float(c.mid) for c in cert.center])
        return np.array(out)

    def score(self, X=None, y=None) -> float:
        """Negative certified bound on sup ||P - L_u|| over the covered range."""
        check_is_fitted(self, "report_")
        if self.report_ is None:
            raise ValueError("fit with verify=True to score")
        return -float(self.report_.certified_upper())
