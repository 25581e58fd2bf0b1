"""Learning-ready labelled samples."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .core import SQRT_2PI
from .errors import ParameterError

DATASET_KINDS = ("ltf", "relu", "raw")
CONVENTIONS = ("rho-one", "unit-variance", "other")


@dataclass
class LabeledDataset:
    """Samples ``x`` in R^n with labels.

    ``kind`` is ``ltf``/``relu`` (labels in {+1, -1}) or ``raw`` (real
    labels). ``marginal_convention`` says how ``x`` is scaled: ``rho-one``
    means ``D_{R^n,1}`` (variance 1/(2 pi) per coordinate), ``unit-variance``
    means N(0, I). ``secret`` and ``period`` are only set for planted
    instances and are used by the verifiers.
    """

    x: np.ndarray
    labels: np.ndarray
    kind: str = "ltf"
    marginal_convention: str = "rho-one"
    provenance: list = field(default_factory=list)
    secret: Optional[np.ndarray] = None
    hypothesis: Optional[str] = None
    period: Optional[float] = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.labels = np.asarray(self.labels, dtype=float)
        if self.kind not in DATASET_KINDS:
            raise ParameterError(f"unknown dataset kind {self.kind!r}")
        if self.marginal_convention not in CONVENTIONS:
            raise ParameterError(f"unknown marginal convention {self.marginal_convention!r}")
        if self.x.ndim != 2 or self.labels.shape != (self.x.shape[0],):
            raise ParameterError("x must be (m, n) and labels must be (m,)")
        if self.kind in ("ltf", "relu") and not np.all(np.abs(self.labels) == 1):
            raise ParameterError("ltf/relu labels must be +1 or -1")
        if self.hypothesis is not None:
            self.hypothesis = str(getattr(self.hypothesis, "value", self.hypothesis))

    @property
    def m(self) -> int:
        return self.x.shape[0]

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def projection(self, direction=None) -> np.ndarray:
        v = self.secret if direction is None else direction
        if v is None:
            raise ParameterError("no direction given and no planted secret disclosed")
        return self.x @ np.asarray(v, dtype=float)

    def split(self, fraction: float = 0.5) -> tuple["LabeledDataset", "LabeledDataset"]:
        cut = int(round(self.m * fraction))
        first = replace(self, x=self.x[:cut], labels=self.labels[:cut])
        second = replace(self, x=self.x[cut:], labels=self.labels[cut:])
        return first, second

    def rescaled(self, convention: str) -> "LabeledDataset":
        """Present the same data under another marginal convention."""
        if convention == self.marginal_convention:
            return self
        pair = (self.marginal_convention, convention)
        if pair == ("rho-one", "unit-variance"):
            factor = SQRT_2PI
        elif pair == ("unit-variance", "rho-one"):
            factor = 1.0 / SQRT_2PI
        else:
            raise ParameterError(f"cannot rescale {pair[0]} data to {pair[1]}")
        stage = {"stage": "rescale", "from": pair[0], "to": pair[1]}
        period = None if self.period is None else self.period * factor
        return replace(self, x=self.x * factor, marginal_convention=convention,
                       provenance=list(self.provenance) + [stage], period=period)
