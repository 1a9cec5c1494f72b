"""Nearest counterfactual explanations for tree ensembles, linear models and
ReLU networks, computed by satisfiability with exact rational arithmetic."""

from fractions import Fraction

from ._core import (
    BackendError,
    BudgetExceeded,
    Error,
    EvaluationError,
    IoError,
    MalformedProgram,
    Model as _Model,
    OverConstrained,
    ParseError,
    SortClash,
    ValidationError,
    run_cli,
)

__all__ = [
    "BackendError",
    "BudgetExceeded",
    "Error",
    "EvaluationError",
    "IoError",
    "MalformedProgram",
    "Model",
    "OverConstrained",
    "ParseError",
    "SortClash",
    "ValidationError",
    "run_cli",
]


def _text(value):
    if isinstance(value, bool):
        return str(int(value))
    return str(value)


class Model:
    """A compiled model read from the JSON interchange format."""

    def __init__(self, core):
        self._core = core

    @classmethod
    def load(cls, path):
        return cls(_Model.load(str(path)))

    @classmethod
    def from_json(cls, text):
        return cls(_Model.from_json(text))

    @property
    def kind(self):
        return self._core.kind

    @property
    def label(self):
        return self._core.label

    @property
    def features(self):
        return list(self._core.features)

    def predict(self, values):
        return self._core.predict({k: _text(v) for k, v in values.items()})

    def smtlib(self):
        return self._core.smtlib()

    def to_json(self):
        return self._core.to_json()

    def explain(self, factual, norm="l1", epsilon=Fraction(1, 1000), constraints=None, k=1, backend="internal"):
        """Counterfactuals for `factual`, nearest first.

        Distances come back as Fractions; feature values as the strings the
        interchange format uses (category names for categorical features).
        `constraints` is a constraints document, as text or a dict.
        """
        if isinstance(constraints, dict):
            import json

            constraints = json.dumps(constraints)
        results = self._core.explain(
            {name: _text(v) for name, v in factual.items()},
            norm=norm,
            epsilon=_text(Fraction(epsilon)),
            constraints=constraints or "",
            k=k,
            backend=backend,
        )
        for r in results:
            for key in ("distance", "delta_min", "delta_max"):
                r[key] = Fraction(r[key])
        return results
