"""Real-time factor measurement."""

from __future__ import annotations

import statistics
import time

from threadpoolctl import threadpool_limits

from ..errors import SignalError


def rtf(run, audio_seconds: float | None = None, repeats: int = 5, warmup: int = 1) -> float:
    """Median wall-clock seconds per second of synthesised audio.

    ``run()`` performs one synthesis. It may return the audio duration in
    seconds (or a :class:`~freev.dsp.Waveform`), otherwise ``audio_seconds``
    must be given. Numeric kernels are capped at one thread while timing.
    """
    if repeats < 5:
        raise ValueError("rtf needs at least 5 timed runs")
    with threadpool_limits(1):
        for _ in range(warmup):
            run()
        times = []
        out = None
        for _ in range(repeats):
            t0 = time.perf_counter()
            out = run()
            times.append(time.perf_counter() - t0)
    seconds = audio_seconds
    if seconds is None:
        seconds = getattr(out, "duration", out)
    if seconds is None or float(seconds) <= 0:
        raise SignalError("cannot compute RTF for zero-length synthesis")
    return statistics.median(times) / float(seconds)
