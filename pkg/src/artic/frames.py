"""Articulator state layout shared by the environment, synthesizer, and I/O.

A single state frame is a length-13 float vector: (x, y) coordinates for six
vocal-tract articulators in a fixed order, followed by a loudness scalar.
Frames, actions, and observations are plain numpy arrays; this module owns
the index conventions so every consumer agrees on the layout.
"""

from __future__ import annotations

from enum import IntEnum

import numpy as np

from .errors import EmptyInputError, ShapeError


class Articulator(IntEnum):
    """Six controllable vocal-tract articulators with fixed, stable indices."""

    TD = 0  # tongue dorsum
    TB = 1  # tongue blade
    TT = 2  # tongue tip
    LI = 3  # lower incisor
    UL = 4  # upper lip
    LL = 5  # lower lip


N_ARTICULATORS = len(Articulator)
FRAME_DIM = 2 * N_ARTICULATORS + 1  # six (x, y) pairs, then loudness
LOUDNESS_INDEX = FRAME_DIM - 1
STACK_FRAMES = 15
OBS_DIM = FRAME_DIM * STACK_FRAMES
POSITION_BOUND = 3.0
VELOCITY_BOUND = 0.5

FRAME_LABELS = (
    "TD_x", "TD_y", "TB_x", "TB_y", "TT_x", "TT_y",
    "LI_x", "LI_y", "UL_x", "UL_y", "LL_x", "LL_y", "L",
)


def x_index(articulator: Articulator) -> int:
    return 2 * int(articulator)


def y_index(articulator: Articulator) -> int:
    return 2 * int(articulator) + 1


def make_frame(positions: dict | None = None, loudness: float = 0.0) -> np.ndarray:
    """Build a frame from an {articulator: (x, y)} mapping plus loudness."""
    frame = np.zeros(FRAME_DIM)
    if positions:
        for articulator, (x, y) in positions.items():
            frame[x_index(articulator)] = x
            frame[y_index(articulator)] = y
    frame[LOUDNESS_INDEX] = loudness
    return frame


def frame_xy(frame: np.ndarray, articulator: Articulator) -> tuple[float, float]:
    return float(frame[x_index(articulator)]), float(frame[y_index(articulator)])


def frame_loudness(frame: np.ndarray) -> float:
    return float(frame[LOUDNESS_INDEX])


class Trajectory:
    """Append-only sequence of completed-step frames for one episode.

    The pre-step reset frame is deliberately excluded: after n steps the
    trajectory holds exactly n frames, so decoded audio covers exactly the
    steps taken.
    """

    def __init__(self, capacity: int, target_id: str = ""):
        if capacity < 1:
            raise ShapeError("trajectory capacity must be >= 1")
        self._buf = np.zeros((capacity, FRAME_DIM))
        self._n = 0
        self.target_id = target_id

    def __len__(self) -> int:
        return self._n

    @property
    def capacity(self) -> int:
        return int(self._buf.shape[0])

    @property
    def frames(self) -> np.ndarray:
        """(n, 13) read-only view of the frames appended so far."""
        view = self._buf[: self._n]
        view.flags.writeable = False
        return view

    def append(self, frame: np.ndarray) -> None:
        frame = np.asarray(frame, dtype=float)
        if frame.shape != (FRAME_DIM,):
            raise ShapeError(f"frame must have shape ({FRAME_DIM},), got {frame.shape}")
        if self._n >= self._buf.shape[0]:
            raise ShapeError("trajectory is full")
        self._buf[self._n] = frame
        self._n += 1

    def copy(self) -> "Trajectory":
        out = Trajectory(self.capacity, self.target_id)
        out._buf[: self._n] = self._buf[: self._n]
        out._n = self._n
        return out

    @classmethod
    def from_frames(cls, frames, target_id: str = "") -> "Trajectory":
        arr = np.asarray(frames, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != FRAME_DIM:
            raise ShapeError(f"expected (n, {FRAME_DIM}) frames, got {arr.shape}")
        if arr.shape[0] == 0:
            raise EmptyInputError("cannot build a trajectory from zero frames")
        out = cls(arr.shape[0], target_id)
        out._buf[:] = arr
        out._n = arr.shape[0]
        return out
