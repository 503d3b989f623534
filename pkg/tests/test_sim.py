import numpy as np
import pytest

from semmap.geometry import Cuboid, RigidPose, overlap_volume
from semmap.sim import (
    CameraIntrinsics,
    Frame,
    PoseNoiseParams,
    Scene,
    SceneObject,
    SegNoiseParams,
    VoxelLabelGrid,
    backproject,
    confusion_map,
    extract_cloud,
    fuse_frame,
    generate_scene,
    generate_trajectory,
    look_at,
    perturb_segmentation,
    perturb_trajectory,
    ray_box_interval,
    render_frame,
)
from semmap.trajectory import associate, rpe

INTR = CameraIntrinsics()


def one_box_scene(center=(3.0, 3.0, 0.5), extent=(1.0, 1.0, 1.0), cls=5):
    return Scene([SceneObject(Cuboid(center, extent, cls), 1)])


def camera_facing_x(x=1.0, y=3.0, z=0.5):
    """Camera at (x, y, z) looking along +x."""
    return look_at([x, y, z], [x + 1.0, y, z])


def grid_for(scene, n_classes=31, voxel=0.05):
    return VoxelLabelGrid.covering(scene.room_lo, scene.room_hi, voxel, n_classes)


class TestScene:
    def test_counts_and_separation(self):
        s = generate_scene(1, (5, 5))
        assert len(s.objects) == 5
        for i, a in enumerate(s.objects):
            for b in s.objects[i + 1:]:
                assert overlap_volume(a.cuboid, b.cuboid) == 0.0

    def test_deterministic(self):
        a, b = generate_scene(7), generate_scene(7)
        for x, y in zip(a.objects, b.objects):
            np.testing.assert_array_equal(x.cuboid.centroid, y.cuboid.centroid)
            assert x.class_id == y.class_id

    def test_empty(self):
        assert generate_scene(0, (0, 0)).objects == []

    def test_crowded_fails(self):
        with pytest.raises(ValueError, match="could not place"):
            generate_scene(0, (40, 40), max_tries=200)

    def test_rejects_object_outside_room(self):
        with pytest.raises(ValueError, match="outside the room"):
            Scene([SceneObject(Cuboid([7, 1, 1], [1, 1, 1], 5), 1)])

    def test_trajectory(self):
        s = generate_scene(2)
        tr = generate_trajectory(s, 40, seed=3)
        assert len(tr) == 40
        assert np.all(tr.positions >= s.room_lo) and np.all(tr.positions <= s.room_hi)
        np.testing.assert_array_equal(tr.positions, generate_trajectory(s, 40, seed=3).positions)


class TestRender:
    def test_slab_axis_hit(self):
        t0, t1 = ray_box_interval(np.zeros(3), np.array([[0.0, 0.0, 1.0]]),
                                  np.array([-0.5, -0.5, 1.5]), np.array([0.5, 0.5, 2.5]))
        assert (t0[0], t1[0]) == (1.5, 2.5)

    def test_slab_miss_parallel(self):
        t0, t1 = ray_box_interval(np.zeros(3), np.array([[0.0, 0.0, 1.0]]),
                                  np.array([1.0, -0.5, 1.5]), np.array([2.0, 0.5, 2.5]))
        assert t0[0] > t1[0]

    def test_slab_random_against_sampling(self, rng):
        lo, hi = np.array([-1.0, -0.5, 2.0]), np.array([1.0, 0.5, 3.0])
        dirs = rng.normal(size=(200, 3)) * [0.3, 0.3, 0.0] + [0, 0, 1]
        t0, t1 = ray_box_interval(np.zeros(3), dirs, lo, hi)
        for d, a, b in zip(dirs, t0, t1):
            ts = np.linspace(0, 5, 20001)
            inside = np.all((ts[:, None] * d >= lo) & (ts[:, None] * d <= hi), axis=1)
            if inside.any():
                assert a == pytest.approx(ts[inside][0], abs=5e-4)
                assert b == pytest.approx(ts[inside][-1], abs=5e-4)
            else:
                assert a > b

    def test_empty_scene(self):
        f = render_frame(Scene([]), camera_facing_x(), INTR, walls=False)
        assert not f.depth.any() and not f.class_image.any() and not f.instance_image.any()

    def test_centre_depth(self):
        scene = one_box_scene(center=(3.0, 3.0, 0.5))
        f = render_frame(scene, camera_facing_x(x=1.0), INTR)
        rows, cols = [35, 36], [47, 48]
        np.testing.assert_allclose(f.depth[np.ix_(rows, cols)], 1.5, atol=1e-9)
        assert (f.class_image[np.ix_(rows, cols)] == 5).all()

    def test_depth_matches_plane(self):
        scene = one_box_scene(center=(3.0, 3.0, 0.5))
        f = render_frame(scene, camera_facing_x(x=1.0), INTR)
        # front face is the plane x = 2.5, i.e. z-depth 1.5 for every pixel that hits it
        hits = f.instance_image == 1
        assert hits.sum() > 50
        np.testing.assert_allclose(f.depth[hits].min(), 1.5, atol=1e-9)
        pts, valid = backproject(f, INTR)
        on_box = f.instance_image[valid] == 1
        assert np.all(scene.objects[0].cuboid.contains(pts[on_box], tol=1e-9))

    def test_occlusion(self):
        near = SceneObject(Cuboid([2.5, 3.0, 0.5], [0.4, 0.4, 0.4], 5), 1)
        far = SceneObject(Cuboid([4.0, 3.0, 0.5], [1.0, 1.0, 1.0], 6), 2)
        f = render_frame(Scene([far, near]), camera_facing_x(x=1.0), INTR)
        assert f.instance_image[35, 47] == 1 and f.instance_image[35, 33] == 2

    def test_background_labels_zero(self):
        f = render_frame(generate_scene(3), generate_trajectory(generate_scene(3), 5, 0).pose(0),
                         INTR)
        assert not f.class_image[f.depth == 0].any()
        assert np.all((f.depth == 0) | ((f.depth >= INTR.near) & (f.depth <= INTR.far)))


def labelled_frame(labels, depth=1.0):
    """Frame whose pixels all hit a plane ``depth`` ahead of an identity camera."""
    labels = np.asarray(labels)
    return Frame(np.full(labels.shape, depth), labels, (labels > 0).astype(int), RigidPose())


class TestFusion:
    def test_single_observation(self):
        g = VoxelLabelGrid(np.full(3, -5.0), 0.05, (200, 200, 200), 4)
        fuse_frame(g, labelled_frame(np.full((72, 96), 2)), INTR)
        assert np.all(np.argmax(g.probabilities(), axis=1) == 2)
        np.testing.assert_allclose(g.probabilities().sum(axis=1), 1.0, atol=1e-9)

    def test_repeated_observations_increase_mass(self):
        g = VoxelLabelGrid(np.full(3, -5.0), 0.05, (200, 200, 200), 4)
        key = None
        mass = []
        for _ in range(4):
            fuse_frame(g, labelled_frame(np.full((2, 2), 1)), CameraIntrinsics(width=2, height=2,
                                                                                 cx=0.5, cy=0.5))
            key = g.keys[0] if key is None else key
            mass.append(g.distribution(key)[1])
        assert all(b >= a for a, b in zip(mass, mass[1:]))

    def test_majority_closed_form(self):
        intr = CameraIntrinsics(width=1, height=1, cx=0.0, cy=0.0)
        g = VoxelLabelGrid(np.full(3, -5.0), 0.05, (200, 200, 200), 3, epsilon=1e-3)
        for lab in (1, 2, 1, 1):
            fuse_frame(g, labelled_frame([[lab]]), intr)
        eps, C = 1e-3, 3
        hit, miss = 1 - eps + eps / C, eps / C
        post = np.array([miss ** 4, hit ** 3 * miss, hit * miss ** 3])
        np.testing.assert_allclose(g.probabilities()[0], post / post.sum(), rtol=1e-9)
        assert g.counts[0] == 4

    def test_order_insensitive(self):
        scene = generate_scene(4)
        tr = generate_trajectory(scene, 8, seed=1)
        frames = [render_frame(scene, p, INTR) for p in tr.poses]
        noisy = [perturb_segmentation(f, SegNoiseParams(0.3, 0.2, 0), np.random.default_rng(i))
                 for i, f in enumerate(frames)]
        a, b = grid_for(scene), grid_for(scene)
        for f in noisy:
            fuse_frame(a, f, INTR)
        for f in reversed(noisy):
            fuse_frame(b, f, INTR)
        oa, ob = np.argsort(a.keys), np.argsort(b.keys)
        np.testing.assert_array_equal(a.keys[oa], b.keys[ob])
        np.testing.assert_allclose(a.probabilities()[oa], b.probabilities()[ob], atol=1e-9)

    def test_outside_points_skipped(self):
        g = VoxelLabelGrid(np.zeros(3), 0.05, (4, 4, 4), 3)
        fuse_frame(g, labelled_frame(np.ones((72, 96), int), depth=5.0), INTR)
        assert len(g) == 0 and g.skipped == 72 * 96

    def test_probs_mode(self):
        intr = CameraIntrinsics(width=1, height=1, cx=0.0, cy=0.0)
        g = VoxelLabelGrid(np.full(3, -5.0), 0.05, (200, 200, 200), 3)
        f = labelled_frame([[1]])
        f.class_probs = np.array([[[0.1, 0.2, 0.7]]])
        fuse_frame(g, f, intr, prob_mode="probs")
        assert np.argmax(g.probabilities()[0]) == 2
        with pytest.raises(ValueError):
            fuse_frame(g, labelled_frame([[1]]), intr, prob_mode="probs")


class TestExtractCloud:
    def test_empty(self):
        assert len(extract_cloud(VoxelLabelGrid(np.zeros(3), 0.1, (2, 2, 2), 3))) == 0

    def test_threshold(self):
        scene = one_box_scene()
        g = grid_for(scene)
        fuse_frame(g, render_frame(scene, camera_facing_x(), INTR), INTR)
        assert len(extract_cloud(g, min_observations=10 ** 6)) == 0

    def test_inside_object(self):
        scene = one_box_scene()
        g = grid_for(scene)
        for y in (2.0, 3.0, 4.0):
            fuse_frame(g, render_frame(scene, look_at([1.0, y, 1.5], [3, 3, 0.5]), INTR), INTR)
        cloud = extract_cloud(g)
        assert len(cloud) > 0 and set(cloud.class_ids.tolist()) == {5}
        assert scene.objects[0].cuboid.contains(cloud.positions, tol=0.05).all()


class TestSegNoise:
    def frame(self):
        scene = generate_scene(5)
        return render_frame(scene, generate_trajectory(scene, 4, 0).pose(0), INTR)

    def test_identity(self, rng):
        f = self.frame()
        out = perturb_segmentation(f, SegNoiseParams(0.0, 0.0, 0), rng)
        np.testing.assert_array_equal(out.class_image, f.class_image)
        np.testing.assert_array_equal(out.depth, f.depth)

    def test_full_dropout(self, rng):
        out = perturb_segmentation(self.frame(), SegNoiseParams(0.0, 1.0, 0), rng)
        assert not out.class_image.any() and not out.instance_image.any()

    def test_full_misclassification(self):
        f = self.frame()
        params = SegNoiseParams(1.0, 0.0, 0, confusion_seed=3)
        a = perturb_segmentation(f, params, np.random.default_rng(0))
        b = perturb_segmentation(f, params, np.random.default_rng(99))
        np.testing.assert_array_equal(a.class_image, b.class_image)
        cmap = confusion_map(31, 3)
        np.testing.assert_array_equal(a.class_image, cmap[f.class_image])

    def test_confusion_never_identity(self):
        cmap = confusion_map(31, 11)
        assert cmap[0] == 0
        assert np.all(cmap[1:] != np.arange(1, 31)) and np.all(cmap[1:] >= 1)

    def test_erode_and_dilate(self, rng):
        f = self.frame()
        shrunk = perturb_segmentation(f, SegNoiseParams(0.0, 0.0, -2), rng)
        grown = perturb_segmentation(f, SegNoiseParams(0.0, 0.0, 2), rng)
        n = np.count_nonzero(f.class_image)
        assert np.count_nonzero(shrunk.class_image) < n < np.count_nonzero(grown.class_image)
        # growth only onto background pixels that have depth
        changed = grown.class_image != f.class_image
        assert not f.class_image[changed].any() and (f.depth[changed] > 0).all()

    def test_rate_validation(self):
        with pytest.raises(ValueError):
            SegNoiseParams(misclass_rate=1.5)


class TestPoseNoise:
    def test_identity(self, rng):
        tr = generate_trajectory(generate_scene(0), 10, 0)
        out = perturb_trajectory(tr, PoseNoiseParams(0.0, 0.0), rng)
        np.testing.assert_array_equal(out.positions, tr.positions)
        np.testing.assert_array_equal(out.quaternions, tr.quaternions)

    def test_deterministic(self):
        tr = generate_trajectory(generate_scene(0), 30, 0)
        a = perturb_trajectory(tr, PoseNoiseParams(), np.random.default_rng(4))
        b = perturb_trajectory(tr, PoseNoiseParams(), np.random.default_rng(4))
        np.testing.assert_array_equal(a.positions, b.positions)

    def test_first_pose_exact_and_drift_grows(self):
        tr = generate_trajectory(generate_scene(0), 300, 0)
        out = perturb_trajectory(tr, PoseNoiseParams(0.01, 0.1), np.random.default_rng(0))
        np.testing.assert_array_equal(out.positions[0], tr.positions[0])
        err = np.linalg.norm(out.positions - tr.positions, axis=1)
        assert err[200:].mean() > err[:20].mean()

    def test_rpe_recovers_sigma(self):
        tr = generate_trajectory(generate_scene(0), 500, 0)
        out = perturb_trajectory(tr, PoseNoiseParams(0.01, 0.2), np.random.default_rng(1))
        t, r = rpe(associate(out, tr, max_dt=0.01))
        assert t == pytest.approx(0.01, rel=0.2) and r == pytest.approx(0.2, rel=0.2)
