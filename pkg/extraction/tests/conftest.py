import cv2
import numpy as np
import pytest

# (frames, fps) -> durations 2.2s, 3.0s, 5.8s at the chosen rates
SMOKE_SPECS = {
    "clip_a": (22, 10.0),
    "clip_b": (30, 10.0),
    "clip_c": (145, 25.0),
}
SMOKE_DURATIONS = {vid: frames / fps for vid, (frames, fps) in SMOKE_SPECS.items()}


def write_video(path, frames, fps, seed, size=(64, 48)):
    writer = cv2.VideoWriter(str(path), cv2.VideoWriter_fourcc(*"MJPG"), fps,
                             size)
    assert writer.isOpened(), f"cannot open video writer for {path}"
    rng = np.random.default_rng(seed)
    base = rng.integers(0, 255, (size[1], size[0], 3), dtype=np.uint8)
    for i in range(frames):
        frame = np.clip(base.astype(np.int16) + (i % 7) * 3, 0, 255)
        writer.write(frame.astype(np.uint8))
    writer.release()
    return path


@pytest.fixture(scope="session")
def smoke_corpus(tmp_path_factory):
    """Three tiny real videos with known durations."""
    root = tmp_path_factory.mktemp("corpus")
    videos = {}
    for seed, (vid, (frames, fps)) in enumerate(SMOKE_SPECS.items()):
        videos[vid] = write_video(root / f"{vid}.avi", frames, fps, seed)
    return videos
