"""Video frame sampling at a fixed rate (default one frame per second)."""

import math

import cv2
import numpy as np

from .formats import ExtractionError


def probe_duration(path):
    """(duration seconds, fps, frame count) from container metadata."""
    capture = cv2.VideoCapture(str(path))
    try:
        if not capture.isOpened():
            raise ExtractionError(f"cannot open video: {path}")
        fps = capture.get(cv2.CAP_PROP_FPS)
        frame_count = capture.get(cv2.CAP_PROP_FRAME_COUNT)
        if fps <= 0 or frame_count <= 0:
            raise ExtractionError(
                f"cannot determine duration of {path} "
                f"(fps={fps}, frames={frame_count})")
        return frame_count / fps, fps, int(frame_count)
    finally:
        capture.release()


def sample_frames(path, rate=1.0):
    """Decode floor(duration * rate) frames at regular timestamps.

    At the default rate of 1/s a clip of duration T yields floor(T)
    frames, sampled at t = 0, 1, ..., floor(T) - 1 seconds.  Frames come
    back as one (count, height, width, 3) uint8 RGB array.
    """
    if rate <= 0:
        raise ExtractionError(f"sampling rate must be positive, got {rate}")
    duration, fps, frame_count = probe_duration(path)
    count = math.floor(duration * rate)
    if count < 1:
        raise ExtractionError(
            f"{path}: duration {duration:.2f}s yields no samples at "
            f"rate {rate}/s")
    capture = cv2.VideoCapture(str(path))
    try:
        frames = []
        for i in range(count):
            timestamp = i / rate
            index = min(int(round(timestamp * fps)), frame_count - 1)
            capture.set(cv2.CAP_PROP_POS_FRAMES, index)
            ok, frame = capture.read()
            if not ok or frame is None:
                raise ExtractionError(
                    f"{path}: failed to decode frame {index} (t={timestamp}s)")
            frames.append(cv2.cvtColor(frame, cv2.COLOR_BGR2RGB))
    finally:
        capture.release()
    return np.stack(frames)
