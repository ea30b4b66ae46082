"""earstudy: eye-aspect-ratio attention measures from facial-landmark
streams, with event-study regressions of intraday returns and realized
volatility on their log-differences."""

__version__ = "0.1.0"

from .attention import (
    AttentionConfig,
    BenchmarkVariables,
    ConferenceAttention,
    EarSeries,
    SpeakerSegments,
    benchmark_variables,
    delta_series,
    integrate_attention,
    log_attention_level,
)
from .errors import (
    ConfigError,
    CoverageError,
    DataError,
    DegenerateEyeError,
    DegenerateRegressorError,
    DomainError,
    EarStudyError,
    InsufficientDataError,
    MalformedRecordError,
    ScenarioError,
)
from .geometry import (
    EarSample,
    EyeLandmarks,
    FaceLandmarkFrame,
    Point2,
    extract_eyes,
    eye_ear,
    frame_ear,
)
from .identity import (
    FilterDiagnostics,
    Gallery,
    GalleryEntry,
    IdentityConfig,
    classify,
    embedding_distance,
    filter_speaker_frames,
    vote_vector,
)
from .market import (
    ConferenceTimeline,
    EventWindowStats,
    PriceBar,
    PriceSeries,
    build_timeline,
    event_window_stats,
    price_at,
    realized_vol,
    window_log_return,
)
from .regression import (
    RegressionInput,
    RegressionResult,
    ols_univariate,
    render_table,
    significance_stars,
    two_sided_p_value,
)

__all__ = [name for name in dir() if not name.startswith("_")]
