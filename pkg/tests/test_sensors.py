import numpy as np
import pytest

from auvcage.errors import ParameterError
from auvcage.sensors import AuvPose, SensorModel, covered_by_any


def test_sensor_model_validation():
    SensorModel("sphere", 1.0, 0.0)
    SensorModel("cone", 1.0, 2.0)
    for args in [("sphere", 1.0, 1.0), ("cone", 1.0, 0.0), ("box", 1.0, 0.0), ("sphere", 0.0, 0.0), ("cone", 1.0, -1.0)]:
        with pytest.raises(ParameterError):
            SensorModel(*args)
    assert SensorModel.from_height(2.0, 0.0).kind == "sphere"
    assert SensorModel.from_height(2.0, 1.0).kind == "cone"


def test_pose_orientation_must_be_unit():
    with pytest.raises(ParameterError):
        AuvPose((0, 0, 0), (0, 0, 2), SensorModel())
    p = AuvPose((0, 0, 0), (0, 0, -1), SensorModel())
    with pytest.raises(ValueError):
        p.position[0] = 1.0


def test_sphere_coverage():
    p = AuvPose((1, 1, -1), (0, 0, -1), SensorModel("sphere", 2.0))
    assert p.covers([[1, 1, -3]]).tolist() == [True]
    assert p.covers([[1, 1, -3.01]]).tolist() == [False]
    assert np.array_equal(p.disc_center, p.position)


def test_cone_coverage():
    p = AuvPose((0, 0, 0), (1, 0, 0), SensorModel("cone", 2.0, 4.0))
    pts = np.array([[4, 2, 0], [4, 2.01, 0], [2, 0.99, 0], [2, 1.01, 0], [-0.1, 0, 0], [4.01, 0, 0], [0, 0, 0]])
    assert p.covers(pts).tolist() == [True, False, True, False, False, False, True]
    assert np.allclose(p.disc_center, [4, 0, 0])


def test_covered_by_any():
    s = SensorModel("sphere", 1.0)
    poses = [AuvPose((0, 0, 0), (0, 0, -1), s), AuvPose((3, 0, 0), (0, 0, -1), s)]
    assert covered_by_any(poses, [[0.5, 0, 0], [1.5, 0, 0], [3.9, 0, 0]]).tolist() == [True, False, True]
    assert covered_by_any([], [[0, 0, 0]]).tolist() == [False]
