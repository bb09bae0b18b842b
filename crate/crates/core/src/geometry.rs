//! Planar pose arithmetic, the task reward, and the localization math
//! (pinhole back-projection, rigid transforms, masked depth averaging,
//! PCA yaw) exercised on synthetic inputs.
//!
//! Units are meters and radians throughout; millimeters and degrees appear
//! only at reporting boundaries.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Planar pose: translation in meters, yaw in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanarPose<T> {
    pub x: T,
    pub y: T,
    pub psi: T,
}

impl<T: Real> PlanarPose<T> {
    pub fn new(x: T, y: T, psi: T) -> Self {
        Self { x, y, psi }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.psi.is_finite()
    }
}

/// Wraps an angle into (-pi, pi]; ties at -pi map to +pi.
pub fn wrap_angle<T: Real>(angle: T) -> T {
    let pi = T::PI();
    let two_pi = pi + pi;
    let mut a = angle % two_pi;
    if a > pi {
        a -= two_pi;
    } else if a <= -pi {
        a += two_pi;
    }
    a
}

/// Final picking pose: estimate plus the predicted adjustment, yaw wrapped.
pub fn compose_pick_pose<T: Real>(estimate: PlanarPose<T>, adjustment: PlanarPose<T>) -> PlanarPose<T> {
    PlanarPose::new(
        estimate.x + adjustment.x,
        estimate.y + adjustment.y,
        wrap_angle(estimate.psi + adjustment.psi),
    )
}

/// Euclidean distance between the translations of two poses, in meters.
pub fn translation_error<T: Real>(final_pose: PlanarPose<T>, target: PlanarPose<T>) -> T {
    let dx = final_pose.x - target.x;
    let dy = final_pose.y - target.y;
    (dx * dx + dy * dy).sqrt()
}

/// Orientation error `1 - cos(delta_yaw)`, in [0, 2].
pub fn rotation_error<T: Real>(final_pose: PlanarPose<T>, target: PlanarPose<T>) -> T {
    T::one() - (final_pose.psi - target.psi).cos()
}

/// Task reward `exp(-(e_trans + e_rot))`, in (0, 1].
pub fn reward<T: Real>(final_pose: PlanarPose<T>, target: PlanarPose<T>) -> T {
    (-(translation_error(final_pose, target) + rotation_error(final_pose, target))).exp()
}

/// Pinhole intrinsics in pixel units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics<T> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
}

impl<T: Real> CameraIntrinsics<T> {
    pub fn new(fx: T, fy: T, cx: T, cy: T) -> Result<Self> {
        if fx <= T::zero() || fy <= T::zero() {
            return Err(Error::InvalidConfig("focal lengths must be positive".into()));
        }
        Ok(Self { fx, fy, cx, cy })
    }
}

/// Back-projects a pixel at depth `z` (meters) into the camera frame.
pub fn backproject<T: Real>(u: T, v: T, z: T, k: &CameraIntrinsics<T>) -> Result<[T; 3]> {
    if z <= T::zero() {
        return Err(Error::NonPositiveDepth(z.to_f64_lossy()));
    }
    Ok([(u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z])
}

/// Projects a camera-frame point onto the pixel plane; requires z > 0.
pub fn project<T: Real>(p: [T; 3], k: &CameraIntrinsics<T>) -> Result<(T, T)> {
    let [x, y, z] = p;
    if z <= T::zero() {
        return Err(Error::NonPositiveDepth(z.to_f64_lossy()));
    }
    Ok((k.fx * x / z + k.cx, k.fy * y / z + k.cy))
}

pub type Mat3<T> = [[T; 3]; 3];
pub type Vec3<T> = [T; 3];

/// Rigid transform in 3D: orthonormal rotation with determinant +1 plus a
/// translation in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform3D<T> {
    rotation: Mat3<T>,
    translation: Vec3<T>,
}

const ROTATION_TOL: f64 = 1e-9;

fn mat_mul<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut out = [[T::zero(); 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

fn mat_vec<T: Real>(m: &Mat3<T>, v: &Vec3<T>) -> Vec3<T> {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn det3<T: Real>(m: &Mat3<T>) -> T {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

impl<T: Real> RigidTransform3D<T> {
    /// Validates orthonormality and determinant +1 within 1e-9.
    pub fn new(rotation: Mat3<T>, translation: Vec3<T>) -> Result<Self> {
        let tol = T::of(ROTATION_TOL);
        let mut rt = [[T::zero(); 3]; 3];
        for (i, row) in rt.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = rotation[j][i];
            }
        }
        let gram = mat_mul(&rt, &rotation);
        for (i, row) in gram.iter().enumerate() {
            for (j, &cell) in row.iter().enumerate() {
                let expect = if i == j { T::one() } else { T::zero() };
                if (cell - expect).abs() > tol {
                    return Err(Error::InvalidRotation);
                }
            }
        }
        if (det3(&rotation) - T::one()).abs() > tol {
            return Err(Error::InvalidRotation);
        }
        Ok(Self { rotation, translation })
    }

    pub fn identity() -> Self {
        let mut rotation = [[T::zero(); 3]; 3];
        for (i, row) in rotation.iter_mut().enumerate() {
            row[i] = T::one();
        }
        Self {
            rotation,
            translation: [T::zero(); 3],
        }
    }

    /// Rotation by `angle` about the z axis plus a translation.
    pub fn about_z(angle: T, translation: Vec3<T>) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            rotation: [
                [c, -s, T::zero()],
                [s, c, T::zero()],
                [T::zero(), T::zero(), T::one()],
            ],
            translation,
        }
    }

    pub fn rotation(&self) -> &Mat3<T> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3<T> {
        &self.translation
    }

    /// Applies the transform: `R p + t`.
    pub fn apply(&self, p: Vec3<T>) -> Vec3<T> {
        let rp = mat_vec(&self.rotation, &p);
        [
            rp[0] + self.translation[0],
            rp[1] + self.translation[1],
            rp[2] + self.translation[2],
        ]
    }

    /// Composition `self . other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Self) -> Self {
        let rotation = mat_mul(&self.rotation, &other.rotation);
        let rt = mat_vec(&self.rotation, &other.translation);
        Self {
            rotation,
            translation: [
                rt[0] + self.translation[0],
                rt[1] + self.translation[1],
                rt[2] + self.translation[2],
            ],
        }
    }
}

/// Maps a camera-frame point into the world frame.
pub fn camera_to_world<T: Real>(p_camera: Vec3<T>, transform: &RigidTransform3D<T>) -> Vec3<T> {
    transform.apply(p_camera)
}

/// Binary H x W pixel mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    /// Builds a mask by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut mask = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                mask.bits[y * width + x] = f(x, y);
            }
        }
        mask
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count_set(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Iterates over set pixel coordinates in row-major order.
    pub fn set_pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % self.width, i / self.width))
    }
}

/// Depth image (meters, 0 = invalid) paired with a same-size binary mask.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedDepthImage<T> {
    pub depth: Vec<T>,
    pub mask: BinaryMask,
}

impl<T: Real> MaskedDepthImage<T> {
    pub fn new(depth: Vec<T>, mask: BinaryMask) -> Result<Self> {
        if depth.len() != mask.width() * mask.height() {
            return Err(Error::DimensionMismatch {
                expected: mask.width() * mask.height(),
                got: depth.len(),
            });
        }
        Ok(Self { depth, mask })
    }
}

/// Mean depth over set-mask pixels with valid (positive) depth.
pub fn mask_mean_depth<T: Real>(img: &MaskedDepthImage<T>) -> Result<T> {
    let mut sum = T::zero();
    let mut count = 0usize;
    for (x, y) in img.mask.set_pixels() {
        let d = img.depth[y * img.mask.width() + x];
        if d > T::zero() {
            sum += d;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(sum / T::of(count as f64))
}

/// Yaw of the first principal axis of the set pixels, in (-pi/2, pi/2].
///
/// Errors on masks with fewer than two set pixels and on isotropic masks
/// whose principal directions are not identifiable.
pub fn pca_yaw<T: Real>(mask: &BinaryMask) -> Result<T> {
    let n = mask.count_set();
    if n < 2 {
        return Err(Error::TooFewMaskPixels);
    }
    let inv_n = T::one() / T::of(n as f64);
    let mut mean_x = T::zero();
    let mut mean_y = T::zero();
    for (x, y) in mask.set_pixels() {
        mean_x += T::of(x as f64);
        mean_y += T::of(y as f64);
    }
    mean_x *= inv_n;
    mean_y *= inv_n;

    let mut cxx = T::zero();
    let mut cyy = T::zero();
    let mut cxy = T::zero();
    for (x, y) in mask.set_pixels() {
        let dx = T::of(x as f64) - mean_x;
        let dy = T::of(y as f64) - mean_y;
        cxx += dx * dx;
        cyy += dy * dy;
        cxy += dx * dy;
    }
    cxx *= inv_n;
    cyy *= inv_n;
    cxy *= inv_n;

    // Eigenvalue gap of the 2x2 covariance; zero gap means no major axis.
    let diff = cxx - cyy;
    let two = T::of(2.0);
    let gap = (diff * diff + two * two * cxy * cxy).sqrt();
    let scale = T::one().max(cxx + cyy);
    if gap <= T::of(1e-9) * scale {
        return Err(Error::DegenerateOrientation);
    }

    let mut yaw = T::of(0.5) * (two * cxy).atan2(diff);
    if yaw <= -T::FRAC_PI_2() {
        yaw += T::PI();
    }
    Ok(yaw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pose(x: f64, y: f64, psi: f64) -> PlanarPose<f64> {
        PlanarPose::new(x, y, psi)
    }

    #[test]
    fn compose_identity() {
        let p = compose_pick_pose(pose(0.0, 0.0, 0.0), pose(0.0, 0.0, 0.0));
        assert_eq!(p, pose(0.0, 0.0, 0.0));
    }

    #[test]
    fn compose_wraps_yaw() {
        let p = compose_pick_pose(pose(0.1, 0.2, 3.0), pose(0.0, 0.0, 0.3));
        assert_eq!(p.x, 0.1);
        assert_eq!(p.y, 0.2);
        assert!((p.psi - (3.3 - std::f64::consts::TAU)).abs() < 1e-12);
        assert!((p.psi - -2.9831853071795862).abs() < 1e-10);
    }

    #[test]
    fn compose_componentwise_sum() {
        let p = compose_pick_pose(pose(0.05, -0.02, 0.1), pose(0.002, 0.004, -0.0174533));
        assert!((p.x - 0.052).abs() < 1e-12);
        assert!((p.y - -0.016).abs() < 1e-12);
        assert!((p.psi - 0.0825467).abs() < 1e-12);
    }

    #[test]
    fn wrap_angle_ties_at_pi() {
        assert_eq!(wrap_angle(std::f64::consts::PI), std::f64::consts::PI);
        assert_eq!(wrap_angle(-std::f64::consts::PI), std::f64::consts::PI);
        assert!((wrap_angle(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn translation_error_examples() {
        let p = pose(0.4, -0.2, 1.0);
        assert_eq!(translation_error(p, p), 0.0);
        assert!((translation_error(pose(0.003, 0.004, 0.7), pose(0.0, 0.0, -0.3)) - 0.005).abs() < 1e-15);
        assert!((translation_error(pose(0.0021, 0.0, 0.0), pose(0.0, 0.0, 0.0)) - 0.0021).abs() < 1e-15);
    }

    #[test]
    fn rotation_error_examples() {
        assert_eq!(rotation_error(pose(0.0, 0.0, 0.7), pose(1.0, 2.0, 0.7)), 0.0);
        assert!((rotation_error(pose(0.0, 0.0, std::f64::consts::PI), pose(0.0, 0.0, 0.0)) - 2.0).abs() < 1e-12);
        // 0.6 degrees.
        let e = rotation_error(pose(0.0, 0.0, 0.0104720), pose(0.0, 0.0, 0.0));
        assert!((e - 5.4831e-5).abs() < 1e-9);
    }

    #[test]
    fn reward_examples() {
        let p = pose(0.3, -0.1, 2.0);
        assert_eq!(reward(p, p), 1.0);

        let final_pose = pose(0.0036, 0.0, 0.58f64.to_radians());
        let r = reward(final_pose, pose(0.0, 0.0, 0.0));
        assert!((r - 0.996355).abs() < 1e-6);

        let r = reward(pose(1.0, 0.0, 0.0), pose(0.0, 0.0, 0.0));
        assert!((r - 0.3678794).abs() < 1e-7);
    }

    #[test]
    fn backproject_examples() {
        let k = CameraIntrinsics::new(600.0, 500.0, 320.0, 240.0).unwrap();
        assert_eq!(backproject(320.0, 240.0, 1.0, &k).unwrap(), [0.0, 0.0, 1.0]);
        assert_eq!(backproject(920.0, 240.0, 2.0, &k).unwrap(), [2.0, 0.0, 2.0]);
        assert!(matches!(
            backproject(0.0, 0.0, 0.0, &k),
            Err(Error::NonPositiveDepth(_))
        ));
    }

    #[test]
    fn camera_to_world_examples() {
        let id = RigidTransform3D::identity();
        assert_eq!(camera_to_world([1.0, 2.0, 3.0], &id), [1.0, 2.0, 3.0]);

        let rot = RigidTransform3D::about_z(std::f64::consts::FRAC_PI_2, [0.0, 0.0, 0.0]);
        let p = camera_to_world([1.0, 0.0, 0.0], &rot);
        assert!((p[0] - 0.0).abs() < 1e-12);
        assert!((p[1] - 1.0).abs() < 1e-12);
        assert!((p[2] - 0.0).abs() < 1e-12);
    }

    #[test]
    fn transform_chain_composition() {
        let world_from_wrist = RigidTransform3D::<f64>::about_z(0.7, [0.1, -0.2, 0.05]);
        let wrist_from_camera = RigidTransform3D::about_z(-1.3, [0.0, 0.03, 0.12]);
        let composed = world_from_wrist.compose(&wrist_from_camera);
        let p = [0.4, -0.6, 1.1];
        let stepwise = world_from_wrist.apply(wrist_from_camera.apply(p));
        let direct = composed.apply(p);
        for i in 0..3 {
            assert!((stepwise[i] - direct[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn rejects_non_orthonormal_rotation() {
        let bad = [[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(matches!(
            RigidTransform3D::new(bad, [0.0; 3]),
            Err(Error::InvalidRotation)
        ));
        // Determinant -1 (reflection).
        let refl = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]];
        assert!(matches!(
            RigidTransform3D::new(refl, [0.0; 3]),
            Err(Error::InvalidRotation)
        ));
    }

    #[test]
    fn mask_mean_depth_examples() {
        let mask = BinaryMask::from_fn(4, 3, |x, y| x == 0 && y < 2);
        let img = MaskedDepthImage::new(vec![0.75f64; 12], mask).unwrap();
        assert!((mask_mean_depth(&img).unwrap() - 0.75).abs() < 1e-15);

        let mut depth = vec![9.0f64; 12];
        depth[0] = 1.0;
        depth[4] = 2.0;
        let mask = BinaryMask::from_fn(4, 3, |x, y| x == 0 && y < 2);
        let img = MaskedDepthImage::new(depth, mask).unwrap();
        assert!((mask_mean_depth(&img).unwrap() - 1.5).abs() < 1e-15);

        let img = MaskedDepthImage::new(vec![1.0f64; 12], BinaryMask::new(4, 3)).unwrap();
        assert!(matches!(mask_mean_depth(&img), Err(Error::EmptyMask)));
    }

    #[test]
    fn mask_mean_depth_skips_invalid_pixels() {
        let mut depth = vec![0.0f64; 4];
        depth[1] = 2.0;
        let mask = BinaryMask::from_fn(2, 2, |_, y| y == 0);
        let img = MaskedDepthImage::new(depth, mask).unwrap();
        assert!((mask_mean_depth(&img).unwrap() - 2.0).abs() < 1e-15);
    }

    fn rect_mask(angle_deg: f64) -> BinaryMask {
        // 40 x 10 rectangle rotated about the center of a 80 x 80 canvas.
        let angle = angle_deg.to_radians();
        let (s, c) = angle.sin_cos();
        BinaryMask::from_fn(80, 80, |x, y| {
            let dx = x as f64 - 40.0;
            let dy = y as f64 - 40.0;
            let u = c * dx + s * dy;
            let v = -s * dx + c * dy;
            u.abs() <= 20.0 && v.abs() <= 5.0
        })
    }

    #[test]
    fn pca_yaw_axis_aligned_rectangle() {
        let yaw: f64 = pca_yaw(&rect_mask(0.0)).unwrap();
        assert!(yaw.abs() < 1e-6);
    }

    #[test]
    fn pca_yaw_recovers_rotated_rectangle() {
        let yaw: f64 = pca_yaw(&rect_mask(20.0)).unwrap();
        assert!((yaw - 0.349).abs() < 0.0175, "yaw = {yaw}");
    }

    #[test]
    fn pca_yaw_degenerate_circle() {
        let circle = BinaryMask::from_fn(64, 64, |x, y| {
            let dx = x as f64 - 32.0;
            let dy = y as f64 - 32.0;
            dx * dx + dy * dy <= 20.0 * 20.0
        });
        assert!(matches!(
            pca_yaw::<f64>(&circle),
            Err(Error::DegenerateOrientation)
        ));
    }

    #[test]
    fn pca_yaw_too_few_pixels() {
        let mut mask = BinaryMask::new(8, 8);
        mask.set(3, 4, true);
        assert!(matches!(pca_yaw::<f64>(&mask), Err(Error::TooFewMaskPixels)));
    }

    #[test]
    fn pca_yaw_rotation_equivariance() {
        for deg in [-80.0, -55.0, -30.0, -10.0, 5.0, 35.0, 60.0, 85.0] {
            let mask = rect_mask(deg);
            assert!(mask.count_set() >= 200);
            let yaw = pca_yaw::<f64>(&mask).unwrap().to_degrees();
            // Compare modulo 180 degrees: the principal axis has no sign.
            let mut diff = (yaw - deg).rem_euclid(180.0);
            if diff > 90.0 {
                diff -= 180.0;
            }
            assert!(diff.abs() <= 1.0, "deg = {deg}, yaw = {yaw}");
        }
    }

    #[test]
    fn pca_yaw_translation_invariance() {
        let base = BinaryMask::from_fn(60, 60, |x, y| {
            let dx = x as f64 - 20.0;
            let dy = y as f64 - 20.0;
            (0.9 * dx + 0.4 * dy).abs() <= 12.0 && (-0.4 * dx + 0.9 * dy).abs() <= 4.0
        });
        let shifted = BinaryMask::from_fn(60, 60, |x, y| {
            if x < 15 || y < 15 {
                false
            } else {
                base.get(x - 15, y - 15)
            }
        });
        assert_eq!(base.count_set(), shifted.count_set());
        let a: f64 = pca_yaw(&base).unwrap();
        let b: f64 = pca_yaw(&shifted).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn generic_scalar_f32() {
        let p = compose_pick_pose(
            PlanarPose::<f32>::new(0.1, 0.2, 3.0),
            PlanarPose::<f32>::new(0.0, 0.0, 0.3),
        );
        assert!((p.psi - (3.3 - std::f32::consts::TAU)).abs() < 1e-6);
        assert_eq!(reward(p, p), 1.0f32);
    }

    proptest! {
        #[test]
        fn reward_is_one_iff_equal_and_bounded(
            x in -10.0f64..10.0, y in -10.0f64..10.0, psi in -3.1f64..3.1,
            dx in -1.0f64..1.0, dy in -1.0f64..1.0, dpsi in -3.1f64..3.1,
        ) {
            let p = pose(x, y, psi);
            prop_assert_eq!(reward(p, p), 1.0);
            let q = pose(x + dx, y + dy, psi + dpsi);
            let r = reward(q, p);
            prop_assert!(r > 0.0 && r <= 1.0);
        }

        #[test]
        fn errors_symmetric_and_periodic(
            x in -5.0f64..5.0, y in -5.0f64..5.0, a in -10.0f64..10.0, b in -10.0f64..10.0,
            k in -3i32..=3,
        ) {
            let p = pose(x, y, a);
            let q = pose(y, x, b);
            prop_assert!((translation_error(p, q) - translation_error(q, p)).abs() < 1e-12);
            prop_assert!((rotation_error(p, q) - rotation_error(q, p)).abs() < 1e-12);
            prop_assert!(translation_error(p, q) >= 0.0);
            prop_assert!(rotation_error(p, q) >= 0.0);
            let shifted = pose(x, y, a + f64::from(k) * std::f64::consts::TAU);
            prop_assert!((rotation_error(shifted, q) - rotation_error(p, q)).abs() < 1e-9);
        }

        #[test]
        fn reward_strictly_decreasing_in_errors(
            e1 in 0.0f64..2.0, extra in 1e-6f64..1.0,
        ) {
            // Larger translation error at fixed rotation error lowers the reward.
            let target = pose(0.0, 0.0, 0.0);
            let r1 = reward(pose(e1, 0.0, 0.0), target);
            let r2 = reward(pose(e1 + extra, 0.0, 0.0), target);
            prop_assert!(r2 < r1);
        }

        #[test]
        fn backproject_project_round_trip(
            u in -1e4f64..1e4, v in -1e4f64..1e4, z in 0.1f64..10.0,
        ) {
            let k = CameraIntrinsics::new(525.0, 480.0, 319.5, 239.5).unwrap();
            let p = backproject(u, v, z, &k).unwrap();
            let (u2, v2) = project(p, &k).unwrap();
            prop_assert!((u - u2).abs() <= 1e-9 * u.abs().max(1.0));
            prop_assert!((v - v2).abs() <= 1e-9 * v.abs().max(1.0));
        }

        #[test]
        fn compose_keeps_yaw_in_range(
            a in -50.0f64..50.0, b in -50.0f64..50.0,
        ) {
            let p = compose_pick_pose(pose(0.0, 0.0, a), pose(0.0, 0.0, b));
            prop_assert!(p.psi > -std::f64::consts::PI && p.psi <= std::f64::consts::PI);
        }
    }
}
