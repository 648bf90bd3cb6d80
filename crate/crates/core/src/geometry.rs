//! Small linear-algebra helpers shared by the feature, segmentation and
//! local-path stages.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

pub type Vec3 = Vector3<f64>;

/// Mean of a set of points. Returns the origin for an empty set.
pub fn centroid<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Vec3 {
    let mut sum = Vec3::zeros();
    let mut n = 0usize;
    for p in points {
        sum += p;
        n += 1;
    }
    if n == 0 {
        sum
    } else {
        sum / n as f64
    }
}

/// Covariance (normalized by count) of the points around their mean.
pub fn covariance<'a>(points: impl IntoIterator<Item = &'a Vec3> + Clone) -> (Vec3, Matrix3<f64>) {
    let c = centroid(points.clone());
    let mut cov = Matrix3::zeros();
    let mut n = 0usize;
    for p in points {
        let d = p - c;
        cov += d * d.transpose();
        n += 1;
    }
    if n > 0 {
        cov /= n as f64;
    }
    (c, cov)
}

/// Eigen-decomposition of a symmetric 3x3 matrix with eigenpairs sorted by
/// ascending eigenvalue.
pub struct SortedEigen {
    pub values: [f64; 3],
    pub vectors: [Vec3; 3],
}

pub fn sorted_eigen(m: &Matrix3<f64>) -> SortedEigen {
    let eig = SymmetricEigen::new(*m);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = idx.map(|i| eig.eigenvalues[i]);
    let vectors = idx.map(|i| {
        let v: Vec3 = eig.eigenvectors.column(i).into_owned();
        v.normalize()
    });
    SortedEigen { values, vectors }
}

/// Any unit vector orthogonal to `n` (which must be unit length).
pub fn any_orthogonal(n: &Vec3) -> Vec3 {
    let helper = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
        Vec3::x()
    } else if n.y.abs() <= n.z.abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    n.cross(&helper).normalize()
}

/// Angle between two vectors, robust to rounding at 0 and pi.
pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (a.dot(b) / (na * nb)).clamp(-1.0, 1.0).acos()
}

/// Flip `v` so that its largest-magnitude component is positive.
pub fn canonical_sign(v: Vec3) -> Vec3 {
    let mut best = 0;
    for i in 1..3 {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        -v
    } else {
        v
    }
}

pub fn to_array(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_ascending() {
        let m = Matrix3::from_diagonal(&Vec3::new(3.0, 1.0, 2.0));
        let e = sorted_eigen(&m);
        assert_eq!(e.values, [1.0, 2.0, 3.0]);
        assert!((e.vectors[0].y.abs() - 1.0).abs() < 1e-12);
        assert!((e.vectors[2].x.abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_is_unit_and_perpendicular() {
        for n in [Vec3::x(), Vec3::new(1.0, 2.0, -3.0).normalize(), -Vec3::z()] {
            let o = any_orthogonal(&n);
            assert!((o.norm() - 1.0).abs() < 1e-12);
            assert!(o.dot(&n).abs() < 1e-12);
        }
    }

    #[test]
    fn canonical_sign_flips_dominant_component() {
        assert_eq!(
            canonical_sign(Vec3::new(0.1, -0.9, 0.2)),
            Vec3::new(-0.1, 0.9, -0.2)
        );
        assert_eq!(
            canonical_sign(Vec3::new(0.5, 0.1, 0.0)),
            Vec3::new(0.5, 0.1, 0.0)
        );
    }
}
