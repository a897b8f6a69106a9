"""Per-beacon distance smoothing: moving average, EMA and a static Kalman filter."""

from __future__ import annotations

from collections import deque


class MovingAverage:
    """Mean of the last ``n`` samples; during warm-up, the mean of what has arrived."""

    def __init__(self, n=10):
        if n < 1:
            raise ValueError("window must be >= 1")
        self.n = n
        self.buf = deque(maxlen=n)
        self.total = 0.0

    def step(self, x):
        if len(self.buf) == self.n:
            self.total -= self.buf[0]
        self.buf.append(x)
        self.total += x
        return self.total / len(self.buf)

    def reset(self):
        self.buf.clear()
        self.total = 0.0


class Ema:
    def __init__(self, alpha=0.1):
        if not 0.0 < alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        self.alpha = alpha
        self.s = None

    def step(self, y):
        if self.s is None:
            self.s = y
        else:
            self.s = self.alpha * y + (1.0 - self.alpha) * self.s
        return self.s

    def reset(self):
        self.s = None


class Kalman:
    """Scalar Kalman filter for a constant hidden value.

    ``r`` is the measurement variance and ``q`` the process variance.  The
    gain is ``P / (P + r)``.
    """

    def __init__(self, r=(8.575e-3) ** 2, q=1e-8, p0=1.0, x0=None):
        if r <= 0:
            raise ValueError("r must be positive")
        if q < 0 or p0 < 0:
            raise ValueError("q and p0 must be non-negative")
        self.r = r
        self.q = q
        self.p0 = p0
        self.x0 = x0
        self.reset()

    def reset(self):
        self.x = self.x0
        self.p = self.p0
        self.k = None

    def step(self, z):
        if self.x is None:
            # without a prior the first sample seeds the estimate
            self.x = z
        self.k = self.p / (self.p + self.r)
        self.x = self.x + self.k * (z - self.x)
        self.p = (1.0 - self.k) * self.p + self.q
        return self.x


class Passthrough:
    def step(self, x):
        return x

    def reset(self):
        pass


FILTERS = {
    "none": Passthrough,
    "moving_average": MovingAverage,
    "ema": Ema,
    "kalman": Kalman,
}


def make_filter(kind, **params):
    try:
        cls = FILTERS[kind]
    except KeyError:
        raise ValueError(f"unknown filter {kind!r}; expected one of {sorted(FILTERS)}") from None
    return cls(**params)


def run(filt, stream):
    return [filt.step(v) for v in stream]
