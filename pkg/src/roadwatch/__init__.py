"""roadwatch: a deterministic two-station traffic monitoring simulator.

Synthetic roadway video is processed by a motion pipeline (frame difference,
threshold, Gaussian smoothing, blob extraction); vehicles are tracked across
two virtual lines to measure speeds and flow rates; sub stations report to a
main display station over a plain-text M2M message protocol with authed
operator interrupts and pause/resume control, all over a simulated transport.
"""

from .imaging import Frame, RgbFrame, SceneConfig, VehicleSpec, read_pgm, render_scene, to_grayscale, write_pgm
from .vision import Blob, abs_diff, extract_blobs, gaussian_blur, motion_mask, threshold
from .tracking import (
    CrossingEvent,
    LaneGeometry,
    LineCrossingTracker,
    Track,
    associate,
    average_speed,
    detect_crossing,
    instantaneous_speed,
)
from .traffic import (
    FlowSample,
    FlowWindow,
    ViolationRecord,
    ViolationStore,
    check_violation,
    close_window,
    record_passage,
)
from .m2m import (
    M2MMessage,
    WireError,
    make_flow,
    make_interrupt,
    make_pause,
    make_resume,
    parse,
    serialize,
    verify_auth,
)
from .stations import MainStation, SubStation, TransportSim, render_board
from .config import ConfigError, ScenarioConfig, emit_config, parse_config
from .runner import run_scenario

__version__ = "0.1.0"
