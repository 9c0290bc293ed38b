import math

import numpy as np
import pytest

from attsim.attitude import axis_angle_quat, identity_quat, quat_mul, quat_conjugate, quat_to_matrix
from attsim.errors import BehindImagePlane, InvalidInput
from attsim.numerics import RngStream
from attsim.startracker import (
    CameraModel,
    ImagePoint,
    StarCatalog,
    StarObservation,
    default_camera_rig,
    generate_catalog,
    is_visible,
    load_catalog,
    observe,
    pixel_to_star_vector,
    project,
    save_catalog,
)

from conftest import random_unit_quat

FOV20 = math.radians(20.0)


def _cam(fov=FOV20, f=1.0, mount=None):
    if mount is None:
        mount = identity_quat()
    return CameraModel(focal_length=f, fov_half_angle=fov, mount=mount)


class TestCatalog:
    def test_reproducible_100(self):
        a = generate_catalog(100, RngStream(1))
        b = generate_catalog(100, RngStream(1))
        assert len(a) == 100
        assert np.array_equal(a.stars, b.stars)
        assert np.allclose(np.linalg.norm(a.stars, axis=1), 1.0, atol=1e-12)

    def test_too_few_rejected(self):
        with pytest.raises(InvalidInput):
            generate_catalog(1, RngStream(1))

    def test_uniformity(self):
        # mean of n uniform sphere points is within ~3/sqrt(n) of zero
        cat = generate_catalog(10_000, RngStream(7))
        assert np.linalg.norm(cat.stars.mean(axis=0)) <= 0.05

    def test_csv_round_trip(self, tmp_path):
        cat = generate_catalog(25, RngStream(3))
        path = tmp_path / "catalog.csv"
        save_catalog(cat, path)
        back = load_catalog(path)
        assert np.array_equal(back.stars, cat.stars)

    def test_load_rejects_garbage(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1.0,0.0\n")
        with pytest.raises(InvalidInput):
            load_catalog(path)

    def test_non_unit_rejected(self):
        with pytest.raises(InvalidInput):
            StarCatalog(stars=np.array([[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]]))


class TestVisibility:
    def test_boresight_visible(self):
        assert is_visible(np.array([0.0, 0.0, 1.0]), _cam())

    def test_outside_fov(self):
        v = np.array([math.sin(math.radians(25.0)), 0.0, math.cos(math.radians(25.0))])
        assert not is_visible(v, _cam())

    def test_behind_camera(self):
        assert not is_visible(np.array([0.0, 0.0, -1.0]), _cam())

    def test_boundary_counts_as_not_visible(self):
        v = np.array([math.sin(FOV20), 0.0, math.cos(FOV20)])
        assert not is_visible(v, _cam())


class TestProjection:
    def test_boresight_maps_to_origin(self):
        p = project(np.array([0.0, 0.0, 1.0]), _cam())
        assert (p.x, p.y) == (0.0, 0.0)

    def test_45_degrees_in_xz(self):
        v = np.array([math.sqrt(0.5), 0.0, math.sqrt(0.5)])
        p = project(v, _cam(fov=math.radians(60.0)))
        assert p.x == pytest.approx(1.0, abs=1e-15)
        assert p.y == 0.0

    def test_behind_plane_raises(self):
        with pytest.raises(BehindImagePlane):
            project(np.array([0.0, 0.0, -1.0]), _cam())

    def test_pixel_to_star_values(self):
        cam = _cam()
        assert np.allclose(pixel_to_star_vector(ImagePoint(0.0, 0.0), cam), [0, 0, 1])
        want = [math.sqrt(0.5), 0.0, math.sqrt(0.5)]
        assert np.allclose(pixel_to_star_vector(ImagePoint(1.0, 0.0), cam), want)

    def test_round_trip_random_in_fov(self):
        rng = RngStream(5)
        cam = _cam(fov=math.radians(30.0), f=2.5)
        for _ in range(100):
            # random point inside the field of view
            ang = rng.uniform() * math.radians(29.0)
            azi = rng.uniform() * 2 * math.pi
            v = np.array(
                [math.sin(ang) * math.cos(azi), math.sin(ang) * math.sin(azi), math.cos(ang)]
            )
            p = project(v, cam)
            assert abs(p.x) <= cam.focal_length * math.tan(cam.fov_half_angle) + 1e-12
            back = project(pixel_to_star_vector(p, cam), cam)
            assert abs(back.x - p.x) <= 1e-10 and abs(back.y - p.y) <= 1e-10


class TestCameraModel:
    def test_validation(self):
        with pytest.raises(InvalidInput):
            CameraModel(focal_length=0.0, fov_half_angle=FOV20)
        with pytest.raises(InvalidInput):
            CameraModel(focal_length=1.0, fov_half_angle=2.0)
        with pytest.raises(InvalidInput):
            CameraModel(focal_length=1.0, fov_half_angle=FOV20, mount=np.array([0.0, 0, 0, 2.0]))

    def test_default_rig_boresights(self):
        cams = default_camera_rig(6, FOV20, 1.0)
        want = [(0, 0, 1), (1, 0, 0), (0, 1, 0), (0, 0, -1), (-1, 0, 0), (0, -1, 0)]
        for cam, target in zip(cams, want):
            assert np.allclose(cam.boresight_in_body(), target, atol=1e-12)

    def test_rig_count_validation(self):
        with pytest.raises(InvalidInput):
            default_camera_rig(0, FOV20, 1.0)
        with pytest.raises(InvalidInput):
            default_camera_rig(7, FOV20, 1.0)


class TestObserve:
    def test_noiseless_oracle(self):
        rng = RngStream(11)
        cat = generate_catalog(100, rng)
        cams = default_camera_rig(3, FOV20, 1.0)
        q_true = random_unit_quat(rng)
        obs = observe(q_true, cat, cams, 0.0, rng)
        a = quat_to_matrix(q_true)
        assert len(obs) > 0
        for o in obs:
            assert np.max(np.abs(a @ o.r - o.b)) <= 1e-10
            assert o.weight == 1.0

    def test_unit_norms(self):
        rng = RngStream(12)
        cat = generate_catalog(200, rng)
        cams = default_camera_rig(2, FOV20, 1.0)
        obs = observe(random_unit_quat(rng), cat, cams, 5e-3, rng)
        for o in obs:
            assert abs(np.linalg.norm(o.b) - 1.0) <= 1e-9
            assert abs(np.linalg.norm(o.r) - 1.0) <= 1e-9

    def test_visible_count_matches_solid_angle(self):
        # expected per camera: n * (1 - cos(fov)) / 2 = about 3 for n=100
        counts = []
        for seed in range(30):
            rng = RngStream(seed)
            cat = generate_catalog(100, rng)
            counts.append(len(observe(identity_quat(), cat, [_cam()], 0.0, rng)))
        assert all(0 <= c <= 12 for c in counts)
        assert 1.0 <= float(np.mean(counts)) <= 6.0

    def test_more_cameras_see_more(self):
        rng = RngStream(13)
        cat = generate_catalog(100, rng)
        q = random_unit_quat(rng)
        one = observe(q, cat, default_camera_rig(1, FOV20, 1.0), 0.0, rng)
        six = observe(q, cat, default_camera_rig(6, FOV20, 1.0), 0.0, rng)
        assert len(six) >= len(one)

    def test_empty_camera_list_rejected(self):
        rng = RngStream(14)
        cat = generate_catalog(10, rng)
        with pytest.raises(InvalidInput):
            observe(identity_quat(), cat, [], 0.0, rng)

    def test_negative_sigma_rejected(self):
        rng = RngStream(14)
        cat = generate_catalog(10, rng)
        with pytest.raises(InvalidInput):
            observe(identity_quat(), cat, [_cam()], -1.0, rng)

    def test_rotation_consistency(self):
        # rotating the catalog and the attitude together preserves the
        # visible set size
        rng = RngStream(15)
        cat = generate_catalog(150, rng)
        cams = default_camera_rig(3, FOV20, 1.0)
        q = random_unit_quat(rng)
        n_before = len(observe(q, cat, cams, 0.0, rng))
        delta = random_unit_quat(rng)
        a_delta = quat_to_matrix(delta)
        cat2 = StarCatalog(stars=cat.stars @ a_delta.T)
        q2 = quat_mul(quat_conjugate(delta), q)
        n_after = len(observe(q2, cat2, cams, 0.0, rng))
        assert n_before == n_after

    def test_noise_scaling(self):
        # per-axis sigma maps to a Rayleigh-distributed angle; its RMS over
        # the two tangential axes is sigma * sqrt(2)
        rng = RngStream(16)
        cat = generate_catalog(2000, rng)
        cam = CameraModel(focal_length=1.0, fov_half_angle=math.radians(60.0), mount=identity_quat())
        sigma = 5e-3
        angles = []
        q = identity_quat()
        a = quat_to_matrix(q)
        while len(angles) < 10_000:
            obs = observe(q, cat, [cam], sigma, rng)
            for o in obs:
                clean = a @ o.r
                dot = min(1.0, abs(float(clean @ o.b)))
                angles.append(math.acos(dot))
        rms = math.sqrt(float(np.mean(np.square(angles))))
        assert abs(rms / math.sqrt(2.0) - sigma) <= 0.1 * sigma


class TestMountGeometry:
    def test_offset_camera_sees_offset_stars(self):
        # a camera looking along +x must see a star at body +x when the
        # attitude is identity
        rng = RngStream(17)
        star = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        cat = StarCatalog(stars=star)
        cams = default_camera_rig(2, FOV20, 1.0)  # boresights +z, +x
        obs = observe(identity_quat(), cat, cams, 0.0, rng)
        seen = sorted(tuple(np.round(o.r, 6)) for o in obs)
        assert len(obs) == 2
        assert (0.0, 0.0, 1.0) in seen and (1.0, 0.0, 0.0) in seen

    def test_attitude_moves_stars_between_cameras(self):
        rng = RngStream(18)
        cat = StarCatalog(stars=np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))
        cams = default_camera_rig(1, FOV20, 1.0)  # boresight +z only
        # rotate the body so inertial +x lands on body +z
        q = axis_angle_quat([0.0, 1.0, 0.0], math.pi / 2)
        a = quat_to_matrix(q)
        assert np.allclose(a @ np.array([1.0, 0, 0]), [0, 0, 1.0], atol=1e-12)
        obs = observe(q, cat, cams, 0.0, rng)
        assert len(obs) == 1
        assert np.allclose(obs[0].r, [1.0, 0.0, 0.0])


def test_star_observation_defaults():
    o = StarObservation(b=np.array([0.0, 0, 1]), r=np.array([0.0, 0, 1]))
    assert o.weight == 1.0
