"""Grayscale frames, binary PGM I/O, and the synthetic roadway scene generator.

Frames are thin immutable wrappers around 2-D uint8 numpy arrays. The scene
generator draws uniform-intensity vehicle rectangles over a (optionally noisy)
flat background and is a pure function of (config, frame_index), which is what
makes every downstream measurement reproducible and checkable against analytic
ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MAX_PIXELS = 100_000_000  # parser guard against absurd PGM headers


class PgmError(ValueError):
    """Raised when PGM bytes cannot be parsed."""


class Frame:
    """A width x height grayscale raster, one 8-bit intensity per pixel.

    The pixel buffer is copied on construction and frozen, so frames can be
    shared freely between pipeline stages.
    """

    __slots__ = ("pixels",)

    def __init__(self, pixels) -> None:
        arr = np.asarray(pixels)
        if arr.ndim != 2:
            raise ValueError(f"frame pixels must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"frame dimensions must be >= 1, got {arr.shape}")
        if arr.dtype != np.uint8:
            if np.any((arr < 0) | (arr > 255)):
                raise ValueError("pixel values must lie in 0..255")
            arr = arr.astype(np.uint8)
        else:
            arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Frame is immutable")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def full(cls, width: int, height: int, value: int) -> "Frame":
        """A constant frame, mostly useful in tests and demos."""
        return cls(np.full((height, width), value, dtype=np.uint8))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Frame):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )

    __hash__ = None  # mutable-buffer semantics even though frozen

    def __repr__(self) -> str:
        return f"Frame({self.width}x{self.height})"


class RgbFrame:
    """A width x height raster of (r, g, b) byte triplets."""

    __slots__ = ("pixels",)

    def __init__(self, pixels) -> None:
        arr = np.asarray(pixels)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"rgb pixels must have shape (h, w, 3), got {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"frame dimensions must be >= 1, got {arr.shape}")
        if arr.dtype != np.uint8:
            if np.any((arr < 0) | (arr > 255)):
                raise ValueError("pixel values must lie in 0..255")
            arr = arr.astype(np.uint8)
        else:
            arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    def __setattr__(self, name, value):
        raise AttributeError("RgbFrame is immutable")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, RgbFrame):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"RgbFrame({self.width}x{self.height})"


def to_grayscale(frame: RgbFrame) -> Frame:
    """Convert RGB to 8-bit gray with BT.601 luma weights (0.299/0.587/0.114).

    Computed in integer arithmetic as (299r + 587g + 114b + 500) // 1000,
    i.e. round-half-up; the weights sum to one so no clamping is needed.
    """
    px = frame.pixels.astype(np.int32)
    gray = (299 * px[:, :, 0] + 587 * px[:, :, 1] + 114 * px[:, :, 2] + 500) // 1000
    return Frame(gray.astype(np.uint8))


def write_pgm(frame: Frame) -> bytes:
    """Serialize a frame as canonical binary PGM (P5, maxval 255).

    The output is byte-exact for a given frame: header
    ``P5\\n<width> <height>\\n255\\n`` followed by the raw row-major pixels.
    """
    header = f"P5\n{frame.width} {frame.height}\n255\n".encode("ascii")
    return header + frame.pixels.tobytes()


def _pgm_tokens(data: bytes):
    """Yield whitespace-separated header tokens, honoring '#' comments."""
    i = 0
    n = len(data)
    while i < n:
        c = data[i : i + 1]
        if c in b" \t\r\n":
            i += 1
            continue
        if c == b"#":
            j = data.find(b"\n", i)
            i = n if j < 0 else j + 1
            continue
        j = i
        while j < n and data[j : j + 1] not in b" \t\r\n":
            j += 1
        yield data[i:j], j
        i = j


def read_pgm(data: bytes) -> Frame:
    """Parse binary PGM bytes (P5, maxval 255) into a Frame.

    Accepts the standard netpbm header grammar (whitespace and '#' comments
    between tokens, a single whitespace byte after the maxval). Rejects
    anything else with a distinct error: wrong magic, non-255 maxval,
    bad or oversized dimensions, truncated or trailing pixel data.
    """
    tokens = _pgm_tokens(data)
    try:
        magic, _ = next(tokens)
    except StopIteration:
        raise PgmError("empty input") from None
    if magic != b"P5":
        raise PgmError(f"unsupported magic {magic!r} (want P5)")
    fields = []
    end = 0
    for _ in range(3):
        try:
            tok, end = next(tokens)
        except StopIteration:
            raise PgmError("incomplete header") from None
        if not tok.isdigit():
            raise PgmError(f"malformed header token {tok!r}")
        fields.append(int(tok))
    width, height, maxval = fields
    if maxval != 255:
        raise PgmError(f"unsupported maxval {maxval} (want 255)")
    if width < 1 or height < 1:
        raise PgmError(f"bad dimensions {width}x{height}")
    if width * height > MAX_PIXELS:
        raise PgmError(f"dimension overflow: {width}x{height} exceeds {MAX_PIXELS} pixels")
    if end >= len(data) or data[end : end + 1] not in b" \t\r\n":
        raise PgmError("missing whitespace after maxval")
    start = end + 1
    expected = width * height
    body = data[start:]
    if len(body) < expected:
        raise PgmError(f"truncated pixel data: want {expected} bytes, have {len(body)}")
    if len(body) > expected:
        raise PgmError(f"trailing data after pixels: {len(body) - expected} extra bytes")
    arr = np.frombuffer(body, dtype=np.uint8).reshape(height, width)
    return Frame(arr)


@dataclass(frozen=True)
class VehicleSpec:
    """One vehicle: a uniform rectangle moving straight down the lane (+y).

    Note on sizing: consecutive-frame differencing only sees the leading and
    trailing edges of a uniform body, so scenarios that need one motion blob
    per vehicle keep ``h`` no larger than the per-frame pixel step plus one.
    """

    spawn_frame: int
    speed_px_per_frame: float
    x0: int
    y0: int
    w: int
    h: int
    intensity: int

    def __post_init__(self):
        if self.spawn_frame < 0:
            raise ValueError("spawn_frame must be >= 0")
        if self.speed_px_per_frame < 0:
            raise ValueError("speed_px_per_frame must be >= 0")
        if self.w < 2 or self.h < 2:
            raise ValueError("vehicle rectangle must be at least 2x2")
        if not 0 <= self.intensity <= 255:
            raise ValueError("intensity must lie in 0..255")

    def top_y(self, frame_index: int) -> float:
        """Exact (sub-pixel) top edge at the given frame; oracle-side value."""
        return self.y0 + self.speed_px_per_frame * (frame_index - self.spawn_frame)

    def center(self, frame_index: int) -> tuple[float, float]:
        """Exact rectangle center at the given frame; oracle-side value."""
        return (self.x0 + self.w / 2.0, self.top_y(frame_index) + self.h / 2.0)


# A vehicle must stand out from the background by at least twice the default
# motion threshold so that it is always detectable.
MIN_CONTRAST = 50

DEFAULT_WIDTH = 320
DEFAULT_HEIGHT = 240
DEFAULT_FPS = 25


@dataclass(frozen=True)
class SceneConfig:
    """Synthetic camera description for one road."""

    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT
    fps: int = DEFAULT_FPS
    background_level: int = 32
    noise_amplitude: int = 0
    noise_seed: int = 0
    vehicles: tuple[VehicleSpec, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("scene dimensions must be >= 1")
        if self.fps < 1:
            raise ValueError("fps must be >= 1")
        if not 0 <= self.background_level <= 255:
            raise ValueError("background_level must lie in 0..255")
        if not 0 <= self.noise_amplitude <= 64:
            raise ValueError("noise_amplitude must lie in 0..64")
        if not 0 <= self.noise_seed < 2**64:
            raise ValueError("noise_seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "vehicles", tuple(self.vehicles))
        for v in self.vehicles:
            if abs(v.intensity - self.background_level) < MIN_CONTRAST:
                raise ValueError(
                    f"vehicle intensity {v.intensity} too close to background "
                    f"{self.background_level} (need contrast >= {MIN_CONTRAST})"
                )


def render_scene(config: SceneConfig, frame_index: int) -> Frame:
    """Render one frame of the synthetic scene.

    Pure function of (config, frame_index): background at background_level
    plus per-pixel uniform integer noise in [-amp, +amp] regenerated from
    (noise_seed, frame_index), clamped to 0..255, with every spawned vehicle
    painted as a filled rectangle. Vertical positions are rounded half-up to
    the nearest pixel; vehicles fully past the bottom edge are skipped.
    """
    if frame_index < 0:
        raise ValueError("frame_index must be >= 0")
    h, w = config.height, config.width
    if config.noise_amplitude > 0:
        rng = np.random.default_rng((config.noise_seed, frame_index))
        noise = rng.integers(
            -config.noise_amplitude, config.noise_amplitude + 1, size=(h, w), dtype=np.int32
        )
        base = np.clip(config.background_level + noise, 0, 255).astype(np.uint8)
    else:
        base = np.full((h, w), config.background_level, dtype=np.uint8)
    for v in config.vehicles:
        if frame_index < v.spawn_frame:
            continue
        top = math.floor(v.top_y(frame_index) + 0.5)
        if top >= h:  # fully below the frame
            continue
        y1, y2 = max(0, top), min(h, top + v.h)
        x1, x2 = max(0, v.x0), min(w, v.x0 + v.w)
        if y1 < y2 and x1 < x2:
            base[y1:y2, x1:x2] = v.intensity
    return Frame(base)
