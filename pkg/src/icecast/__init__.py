"""Sea-ice concentration series: storage, state-space forecasting, and
route risk over a gridded set of observation points."""

from .errors import (
    CorruptionError,
    DegenerateModelError,
    FetchError,
    IcecastError,
    InsufficientDataError,
    IntegrityConflictError,
    MissingModelError,
    ModelError,
    NotFoundError,
    ParseError,
    PathError,
    RangeError,
    StoreLockedError,
    TimestampError,
    UnreachableError,
)
from .estimator import KalmanForecaster
from .fixtures import fixture_observations, fixture_span, fixture_text, synthesize_fixture_span
from .grid import GridModel, GridPoint, load_grid, dump_grid, make_mesh, neighbors, paper_fixture_grid
from .ingest import (
    IceObservation,
    SeriesQuery,
    dedupe,
    fetch_series,
    parse_records,
    parse_timestamp,
    serialize_records,
    sort_by_interval,
    to_daily_array,
    validate,
)
from .kalman import (
    FilterResult,
    FilterState,
    FitResult,
    Forecast,
    PointModel,
    StateSpaceModel,
    build_model,
    fit,
    fit_point,
    forecast,
    kf_filter,
    kf_predict,
    kf_smooth,
    kf_update,
    load_model,
    model_from_text,
    model_to_text,
    save_model,
    simulate,
)
from .risk import (
    HazardAssessment,
    HazardClass,
    RiskField,
    Route,
    best_route,
    build_risk_field,
    cell_hazard,
    classify_hazard,
    dump_risk_field,
    format_route,
    load_risk_field,
    route_risk,
)
from .store import IceStore, IntegrityReport, open_store, verify_store

__version__ = "0.1.0"

__all__ = [
    "CorruptionError",
    "DegenerateModelError",
    "FetchError",
    "FilterResult",
    "FilterState",
    "FitResult",
    "Forecast",
    "GridModel",
    "GridPoint",
    "HazardAssessment",
    "HazardClass",
    "IceObservation",
    "IceStore",
    "IcecastError",
    "InsufficientDataError",
    "IntegrityConflictError",
    "IntegrityReport",
    "KalmanForecaster",
    "MissingModelError",
    "ModelError",
    "NotFoundError",
    "ParseError",
    "PathError",
    "PointModel",
    "RangeError",
    "RiskField",
    "Route",
    "SeriesQuery",
    "StateSpaceModel",
    "StoreLockedError",
    "TimestampError",
    "UnreachableError",
    "best_route",
    "build_model",
    "build_risk_field",
    "cell_hazard",
    "classify_hazard",
    "dedupe",
    "dump_grid",
    "dump_risk_field",
    "fetch_series",
    "fit",
    "fit_point",
    "fixture_observations",
    "fixture_span",
    "fixture_text",
    "forecast",
    "format_route",
    "kf_filter",
    "kf_predict",
    "kf_smooth",
    "kf_update",
    "load_grid",
    "load_model",
    "load_risk_field",
    "make_mesh",
    "model_from_text",
    "model_to_text",
    "neighbors",
    "open_store",
    "paper_fixture_grid",
    "parse_records",
    "parse_timestamp",
    "route_risk",
    "save_model",
    "serialize_records",
    "simulate",
    "sort_by_interval",
    "synthesize_fixture_span",
    "to_daily_array",
    "validate",
    "verify_store",
]
