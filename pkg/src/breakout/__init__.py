"""Real-time group conversation analytics: speaking segmentation, turn-taking
statistics, live feedback frames, and a deterministic meeting simulator."""

from .core import (
    AnalyticsConfig,
    ParticipantEvent,
    SegmenterConfig,
    SpeakingSegment,
    Timestamp,
    VolumeSample,
    validate_config,
)
from .analytics import IntervalStats, TransitionMatrix, Turn, compute_interval_stats, derive_turns, transition_matrix
from .mediator import MediatorFrame, compute_frame, layout_nodes
from .segmenter import Segmenter, overlap_intervals
from .service import MeetingService, TickLoop
from .simulator import ConversationModel, drive, generate

__version__ = "0.1.0"

__all__ = [
    "AnalyticsConfig",
    "ConversationModel",
    "IntervalStats",
    "MediatorFrame",
    "MeetingService",
    "ParticipantEvent",
    "Segmenter",
    "SegmenterConfig",
    "SpeakingSegment",
    "TickLoop",
    "Timestamp",
    "TransitionMatrix",
    "Turn",
    "VolumeSample",
    "compute_frame",
    "compute_interval_stats",
    "derive_turns",
    "drive",
    "generate",
    "layout_nodes",
    "overlap_intervals",
    "transition_matrix",
    "validate_config",
]
