"""Classification by per-class weighted reconstruction error."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coder import J3SParams, JointDictionary, solve, solve_codes
from .errors import EmptyClass, InvalidConfig

MODES = ("per_class", "global")


@dataclass
class PredictionReport:
    sample_id: str
    predicted: object
    class_errors: dict
    per_class_iterations: dict
    true_label: object = None
    loss_traces: dict = field(default_factory=dict, repr=False)

    @property
    def correct(self) -> bool:
        return self.true_label is not None and self.predicted == self.true_label


def class_error(q_stat, q_spat, U_i, V_i, alpha_i, gamma_i, theta: float) -> float:
    """Weighted reconstruction error of one class, regularizers excluded."""
    r1 = np.asarray(q_stat) - U_i @ alpha_i
    r2 = np.asarray(q_spat) - V_i @ gamma_i
    return float(theta * (r1 @ r1) + (1.0 - theta) * (r2 @ r2))


def argmin_class(class_errors: dict):
    """Label with the smallest error; ties go to the smallest label."""
    return min(sorted(class_errors), key=lambda c: class_errors[c])


def predict(q_stat, q_spat, dictionary: JointDictionary, params: J3SParams | None = None,
            mode: str = "per_class", sample_id: str = "", true_label=None,
            keep_traces: bool = False) -> PredictionReport:
    """Predict the label of one query.

    ``per_class`` codes the query separately against each class's
    sub-dictionaries; ``global`` codes once against all columns and scores
    each class with its slice of the coefficients.
    """
    params = params or J3SParams()
    if mode not in MODES:
        raise InvalidConfig(f"unknown coding mode {mode!r}; expected one of {MODES}")
    if dictionary.n_atoms == 0 or not dictionary.class_ranges:
        raise EmptyClass("dictionary has no atoms")
    qs, qp = dictionary.project_query(q_stat, q_spat)
    errors, iters, traces = {}, {}, {}
    if mode == "global":
        code = solve(qs, qp, dictionary, params, projected=True)
        for c, (a, b) in dictionary.class_ranges.items():
            U_i, V_i = dictionary.sub_dictionary(c)
            errors[c] = class_error(qs, qp, U_i, V_i, code.alpha[a:b], code.gamma[a:b], params.theta)
            iters[c] = code.iterations_used
        if keep_traces:
            traces["global"] = list(code.loss_trace)
    else:
        for c in dictionary.class_ranges:
            U_i, V_i = dictionary.sub_dictionary(c)
            code = solve_codes(qs, qp, U_i, V_i, params)
            errors[c] = class_error(qs, qp, U_i, V_i, code.alpha, code.gamma, params.theta)
            iters[c] = code.iterations_used
            if keep_traces:
                traces[c] = list(code.loss_trace)
    return PredictionReport(
        sample_id=sample_id,
        predicted=argmin_class(errors),
        class_errors=errors,
        per_class_iterations=iters,
        true_label=true_label,
        loss_traces=traces,
    )
