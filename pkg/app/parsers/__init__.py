from app.parsers.adjacency import adjacency_to_frame, read_adjacency
from app.parsers.calendar import calendar_design, calendar_to_frame, read_calendar
from app.parsers.dataset import load_dataset
from app.parsers.observations import ObservationTable, observations_from_frame, observations_to_frame, read_observations

__all__ = [
    "ObservationTable",
    "adjacency_to_frame",
    "calendar_design",
    "calendar_to_frame",
    "load_dataset",
    "observations_from_frame",
    "observations_to_frame",
    "read_adjacency",
    "read_calendar",
    "read_observations",
]
