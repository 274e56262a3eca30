"""Non-stationary peaks-over-threshold modeling of top running performances."""

import json
from importlib import resources

from .model import (
    DisciplineParams,
    ExceedanceSet,
    GlobalModel,
    gpd_excess_survival,
    intensity_at,
    location_at,
    log_likelihood,
    poisson_measure_above,
    scale_at,
    threshold_scale_at,
    upper_endpoint,
    upper_endpoint_time,
)
from .forecast import (
    AftMode,
    RecordRef,
    WaitingTime,
    aft_corrected_time,
    earliest_year_at_confidence,
    earliest_year_sub_threshold,
    equivalent_time,
    expected_new_record,
    expected_waiting_time,
    prob_record_before_year,
    prob_record_in_year,
    prob_sub_threshold,
    prob_sub_threshold_before_year,
    ultimate_time,
)
from .inference import FitConfig, FitResult, aic, bootstrap_ci, fit
from .simgen import SimConfig, simulate, simulate_records

__version__ = "0.1.0"


def load_reference_model():
    """The committed published-estimate model and its reference records.

    Returns (model, records) where records maps discipline -> RecordRef.
    """
    with resources.files(__package__).joinpath("data/paper_model.json").open() as fh:
        payload = json.load(fh)
    model = GlobalModel.from_dict(payload["model"])
    records = {
        d: RecordRef(discipline=d, seconds=float(r["seconds"]), year_set=int(r["year"]))
        for d, r in payload.get("records", {}).items()
    }
    return model, records
