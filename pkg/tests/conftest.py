import numpy as np
import pytest

from stentkit.sdf import StentField


def twist_polyline():
    """Four-segment synthetic axis: lengths 2.5/0.5/0.5/2.5 mm with in-plane
    joint angles -27/10/27 degrees."""
    lengths = [2.5, 0.5, 0.5, 2.5]
    angles = np.deg2rad([-27.0, 10.0, 27.0])
    pts = [np.zeros(3)]
    direction = np.array([0.0, 0.0, 1.0])
    for i, ln in enumerate(lengths):
        pts.append(pts[-1] + direction * ln)
        if i < len(angles):
            c, s = np.cos(angles[i]), np.sin(angles[i])
            direction = np.array([
                direction[0] * c + direction[2] * s,
                0.0,
                -direction[0] * s + direction[2] * c,
            ])
    return np.array(pts)


@pytest.fixture
def twist_field():
    return StentField.from_polyline(twist_polyline(), smoothing_k=0.4, nominal_radius=1.0)


@pytest.fixture
def straight_field():
    pts = np.array([[0.0, 0.0, 2.5 * i] for i in range(9)])
    return StentField.from_polyline(pts, smoothing_k=0.4, nominal_radius=3.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
