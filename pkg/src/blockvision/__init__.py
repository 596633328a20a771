"""blockvision: block detection and task assessment workbench.

A software re-creation of a robot-conducted block-and-box manual
dexterity task: a from-scratch geometric vision pipeline, the session
instruction protocol, assessment metrics, a synthetic scene oracle,
and an HTTP/CLI gateway tying them together.
"""

from .assessment import (
    MATCH_RADIUS_PX,
    AssessmentReport,
    ErrorMode,
    accuracy,
    build_report,
    count_perceived_errors,
    expected_multisets,
    report_json,
    reports_to_csv,
    timing_report,
)
from .blocks import (
    COLOR_ORDER,
    BlockColor,
    DetectedBlock,
    FilterCriteria,
    PipelineConfig,
    analyze_frame,
    assemble_squares,
    classify_color,
    detect_blocks,
    detection_to_dict,
    filter_segments,
    quad_overlap_fraction,
    segment_distance,
)
from .boxfind import (
    RECTIFIED_QUAD,
    RECTIFIED_SIZE,
    BoxDetection,
    detect_target_area,
    rectification_homography,
    rectify,
)
from .errors import (
    AmbiguousColor,
    BlockVisionError,
    DegenerateQuad,
    DomainError,
    IncompletePerimeter,
    InvalidConfig,
    MalformedLog,
    MismatchedLengths,
    OutOfOrderTimestamp,
    PlacementFailure,
    SingularSystem,
    TapInPhase,
)
from .geometry import (
    Homography,
    Intersection,
    LineSegment,
    Quad,
    homography_from_quads,
    is_right_angle,
    order_corners,
    segment_intersection,
    warp,
)
from .raster import CannyParams, HoughParams, canny, gaussian_blur, ppht, sobel, to_grayscale
from .rng import SplitMix64
from .sceneforge import (
    BlockSpec,
    SceneSpec,
    ground_truth,
    inject_fault,
    random_scene,
    render_scene,
    scene_from_dict,
    scene_to_dict,
    score_detections,
)
from .session import (
    EventKind,
    Instruction,
    Phase,
    ProgressEvent,
    SessionConfig,
    SessionState,
    create_session,
    current_instruction,
    finalize_session,
    log_to_jsonl,
    parse_log,
    record_tap,
    replay_log,
)
from .service import create_app, serve
from .storage import SessionStore, fill_missing_frames

__version__ = "0.1.0"
