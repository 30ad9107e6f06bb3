import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mhdsim import spectral
from mhdsim.geometry import Side, harmonic_coordinate_map, sigma_strip

settings.register_profile(
    "default", max_examples=15, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture]
)
settings.load_profile("default")


def curved_strip(n, m, side, amp=0.1):
    x1, x2 = spectral.grid_points(n)
    f = amp * np.cos(x1) + 0.5 * amp * np.sin(x1 + 2 * x2)
    ref = sigma_strip(np.zeros((n, n)), side, m)
    return harmonic_coordinate_map(f, ref).geom


def node_coords(strip):
    x1, x2 = spectral.grid_points(strip.n)
    zero = np.zeros_like(strip.z)
    return x1[..., None] + zero, x2[..., None] + zero, strip.z


@pytest.fixture(params=[Side.PLASMA, Side.VACUUM], ids=["plasma", "vacuum"])
def side(request):
    return request.param
