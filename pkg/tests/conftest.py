import pytest

from bptem import (BandSpec, IterConfig, TemParams, TimeGrid, apocs, encode,
                   gen_test_signal, measurements)


class ReferenceSetup:
    """The standard configuration: 30 Hz band at 50 Hz carrier, kappa=1,
    b=3, c=2, threshold 1/120, 8 s window."""

    def __init__(self):
        self.band = BandSpec(50.0, 30.0)
        self.grid = TimeGrid.for_band(self.band, -4.0, 4.0)
        self.x, self.iq = gen_test_signal(50.0, 10.0, 2.5, self.grid)
        self.params = TemParams(kappa=1.0, delta=1.0 / 120.0, b=3.0, c=2.0)
        self.firing = encode(self.x, self.params)
        self.y = measurements(self.firing)


class SmallSetup(ReferenceSetup):
    """Same configuration on a 2 s window for fast unit tests."""

    def __init__(self):
        self.band = BandSpec(50.0, 30.0)
        self.grid = TimeGrid.for_band(self.band, -1.0, 1.0)
        self.x, self.iq = gen_test_signal(50.0, 10.0, 2.5, self.grid)
        self.params = TemParams(kappa=1.0, delta=1.0 / 120.0, b=3.0, c=2.0)
        self.firing = encode(self.x, self.params)
        self.y = measurements(self.firing)


@pytest.fixture(scope="session")
def ref():
    return ReferenceSetup()


@pytest.fixture(scope="session")
def small():
    return SmallSetup()


@pytest.fixture(scope="session")
def ref_apocs(ref):
    """Alternating-projection decode of the reference setup with the
    default iteration budget, trajectory recorded."""
    cfg = IterConfig(max_iter=500, rel_tol=1e-9, record_trajectory=True)
    pair, signal, diag = apocs(ref.firing, ref.y, ref.band, ref.grid, cfg)
    return pair, signal, diag
