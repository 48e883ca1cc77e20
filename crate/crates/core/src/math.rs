//! Small fixed-size linear algebra on `[T; 3]` / `[[T; 3]; 3]`.

use crate::scalar::Real;

pub type Vec3<T> = [T; 3];
pub type Mat3<T> = [[T; 3]; 3];

#[inline]
pub fn add<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale<T: Real>(a: Vec3<T>, s: T) -> Vec3<T> {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot<T: Real>(a: Vec3<T>, b: Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm<T: Real>(a: Vec3<T>) -> T {
    dot(a, a).sqrt()
}

pub fn normalize<T: Real>(a: Vec3<T>) -> Vec3<T> {
    let n = norm(a);
    if n > T::zero() {
        scale(a, T::one() / n)
    } else {
        [T::zero(), T::zero(), T::one()]
    }
}

pub fn cross<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn mat_vec<T: Real>(m: &Mat3<T>, v: Vec3<T>) -> Vec3<T> {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

/// `mᵀ · v`
#[inline]
pub fn mat_t_vec<T: Real>(m: &Mat3<T>, v: Vec3<T>) -> Vec3<T> {
    [
        m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
        m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
        m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
    ]
}

pub fn mat_mul<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut out = [[T::zero(); 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

pub fn transpose<T: Real>(m: &Mat3<T>) -> Mat3<T> {
    [
        [m[0][0], m[1][0], m[2][0]],
        [m[0][1], m[1][1], m[2][1]],
        [m[0][2], m[1][2], m[2][2]],
    ]
}

pub fn identity<T: Real>() -> Mat3<T> {
    let (o, z) = (T::one(), T::zero());
    [[o, z, z], [z, o, z], [z, z, o]]
}

/// Rotation matrix of a unit quaternion stored as `(w, x, y, z)`.
pub fn quat_to_mat<T: Real>(q: [T; 4]) -> Mat3<T> {
    let [w, x, y, z] = q;
    let two = T::lit(2.0);
    let one = T::one();
    [
        [
            one - two * (y * y + z * z),
            two * (x * y - w * z),
            two * (x * z + w * y),
        ],
        [
            two * (x * y + w * z),
            one - two * (x * x + z * z),
            two * (y * z - w * x),
        ],
        [
            two * (x * z - w * y),
            two * (y * z + w * x),
            one - two * (x * x + y * y),
        ],
    ]
}

pub fn normalize_quat<T: Real>(q: [T; 4]) -> [T; 4] {
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    if n > T::zero() && n.is_finite() {
        [q[0] / n, q[1] / n, q[2] / n, q[3] / n]
    } else {
        [T::one(), T::zero(), T::zero(), T::zero()]
    }
}

/// Max deviation of `m·mᵀ` from the identity.
pub fn orthonormality_error<T: Real>(m: &Mat3<T>) -> T {
    let p = mat_mul(m, &transpose(m));
    let mut err = T::zero();
    for (i, row) in p.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let target = if i == j { T::one() } else { T::zero() };
            err = err.max((*v - target).abs());
        }
    }
    err
}

/// World-to-camera rotation for a camera at `eye` looking at `target`
/// (camera +z forward, +y down, +x right).
pub fn look_at<T: Real>(eye: Vec3<T>, target: Vec3<T>, up: Vec3<T>) -> Mat3<T> {
    let forward = normalize(sub(target, eye));
    let right = normalize(cross(forward, up));
    let down = cross(forward, right);
    [right, down, forward]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quaternion_identity_is_identity_matrix() {
        let m = quat_to_mat([1.0f64, 0.0, 0.0, 0.0]);
        assert_eq!(m, identity::<f64>());
    }

    #[test]
    fn look_at_is_orthonormal_and_points_forward() {
        let r = look_at([3.0f64, 1.0, 2.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]);
        assert!(orthonormality_error(&r) < 1e-12);
        let p = mat_vec(&r, sub([0.0, 0.0, 0.0], [3.0, 1.0, 2.0]));
        assert!(p[0].abs() < 1e-12 && p[1].abs() < 1e-12 && p[2] > 0.0);
    }
}
