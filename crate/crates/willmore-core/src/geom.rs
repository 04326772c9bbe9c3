//! Small fixed-size vector helpers over `[f64; 4]`.
//!
//! Positions are always stored as 4-vectors; meshes in R³ carry a zero
//! fourth coordinate. All operations work uniformly in both ambient
//! dimensions except [`cross3`], which is 3D only.

/// Point / vector in ambient space, fourth coordinate zero for R³.
pub type Vec4 = [f64; 4];

pub const ZERO: Vec4 = [0.0; 4];

#[inline]
pub fn add(a: Vec4, b: Vec4) -> Vec4 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

#[inline]
pub fn sub(a: Vec4, b: Vec4) -> Vec4 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

#[inline]
pub fn scale(a: Vec4, s: f64) -> Vec4 {
    [a[0] * s, a[1] * s, a[2] * s, a[3] * s]
}

#[inline]
pub fn axpy(s: f64, a: Vec4, b: Vec4) -> Vec4 {
    [s * a[0] + b[0], s * a[1] + b[1], s * a[2] + b[2], s * a[3] + b[3]]
}

#[inline]
pub fn dot(a: Vec4, b: Vec4) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

#[inline]
pub fn norm_sq(a: Vec4) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: Vec4) -> f64 {
    libm::sqrt(norm_sq(a))
}

#[inline]
pub fn dist(a: Vec4, b: Vec4) -> f64 {
    norm(sub(a, b))
}

#[inline]
pub fn normalize(a: Vec4) -> Vec4 {
    let n = norm(a);
    scale(a, 1.0 / n)
}

/// Cross product of the leading three components; fourth stays zero.
#[inline]
pub fn cross3(a: Vec4, b: Vec4) -> Vec4 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
        0.0,
    ]
}

/// Area of the triangle (a, b, c) via the Gram determinant, valid in R³ and R⁴.
pub fn triangle_area(a: Vec4, b: Vec4, c: Vec4) -> f64 {
    let u = sub(b, a);
    let v = sub(c, a);
    let g = norm_sq(u) * norm_sq(v) - dot(u, v) * dot(u, v);
    0.5 * libm::sqrt(g.max(0.0))
}

/// Interior angle at `a` of the triangle (a, b, c).
pub fn triangle_angle(a: Vec4, b: Vec4, c: Vec4) -> f64 {
    let u = sub(b, a);
    let v = sub(c, a);
    let cosv = dot(u, v);
    let sinv = 2.0 * triangle_area(a, b, c);
    libm::atan2(sinv, cosv)
}

/// Cotangent of the angle at `a` in triangle (a, b, c).
pub fn cotangent(a: Vec4, b: Vec4, c: Vec4) -> f64 {
    let u = sub(b, a);
    let v = sub(c, a);
    let cosv = dot(u, v);
    let sinv = 2.0 * triangle_area(a, b, c);
    cosv / sinv
}

/// Squared distance from point `p` to the closed triangle (a, b, c).
pub fn point_triangle_dist_sq(p: Vec4, a: Vec4, b: Vec4, c: Vec4) -> f64 {
    // Ericson-style barycentric region test, written dimension-agnostic.
    let ab = sub(b, a);
    let ac = sub(c, a);
    let ap = sub(p, a);
    let d1 = dot(ab, ap);
    let d2 = dot(ac, ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return norm_sq(ap);
    }
    let bp = sub(p, b);
    let d3 = dot(ab, bp);
    let d4 = dot(ac, bp);
    if d3 >= 0.0 && d4 <= d3 {
        return norm_sq(bp);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let t = d1 / (d1 - d3);
        return norm_sq(sub(ap, scale(ab, t)));
    }
    let cp = sub(p, c);
    let d5 = dot(ab, cp);
    let d6 = dot(ac, cp);
    if d6 >= 0.0 && d5 <= d6 {
        return norm_sq(cp);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let t = d2 / (d2 - d6);
        return norm_sq(sub(ap, scale(ac, t)));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        let bc = sub(c, b);
        return norm_sq(sub(bp, scale(bc, t)));
    }
    // Interior: project onto the triangle plane.
    let denom = va + vb + vc;
    let v = vb / denom;
    let w = vc / denom;
    let q = add(a, add(scale(ab, v), scale(ac, w)));
    norm_sq(sub(p, q))
}

/// Compensated (Neumaier) accumulator; fixed-order sums stay bit-reproducible.
#[derive(Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if libm::fabs(self.sum) >= libm::fabs(x) {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sum with compensation in iteration order.
pub fn ksum(it: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = KahanSum::new();
    for x in it {
        acc.add(x);
    }
    acc.value()
}

/// Solve the symmetric positive definite system `m x = b` (n <= 8) by Cholesky.
/// Returns None if the matrix is not positive definite.
pub fn cholesky_solve(m: &[f64], b: &[f64], n: usize, x: &mut [f64]) -> Option<()> {
    debug_assert!(m.len() == n * n && b.len() == n && x.len() >= n);
    let mut l = [0.0f64; 64];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i * n + i] = libm::sqrt(s);
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    // forward substitution
    let mut y = [0.0f64; 8];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    // back substitution
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Some(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_area_matches_cross3() {
        let a = [0.0, 0.0, 0.0, 0.0];
        let b = [1.0, 0.2, -0.3, 0.0];
        let c = [0.4, 1.1, 0.5, 0.0];
        let via_cross = 0.5 * norm(cross3(sub(b, a), sub(c, a)));
        assert!((triangle_area(a, b, c) - via_cross).abs() < 1e-14);
    }

    #[test]
    fn point_triangle_distance_regions() {
        let a = [0.0, 0.0, 0.0, 0.0];
        let b = [1.0, 0.0, 0.0, 0.0];
        let c = [0.0, 1.0, 0.0, 0.0];
        // above interior
        let d = point_triangle_dist_sq([0.2, 0.2, 2.0, 0.0], a, b, c);
        assert!((d - 4.0).abs() < 1e-13);
        // beyond vertex b
        let d = point_triangle_dist_sq([2.0, 0.0, 0.0, 0.0], a, b, c);
        assert!((d - 1.0).abs() < 1e-13);
        // beyond edge bc
        let d = point_triangle_dist_sq([1.0, 1.0, 0.0, 0.0], a, b, c);
        assert!((d - 0.5).abs() < 1e-13);
    }

    #[test]
    fn cholesky_small_system() {
        let m = [4.0, 2.0, 2.0, 3.0];
        let b = [10.0, 8.0];
        let mut x = [0.0; 2];
        cholesky_solve(&m, &b, 2, &mut x).unwrap();
        assert!((4.0 * x[0] + 2.0 * x[1] - 10.0).abs() < 1e-12);
        assert!((2.0 * x[0] + 3.0 * x[1] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn kahan_sums_many_small_terms() {
        let mut s = KahanSum::new();
        for _ in 0..1_000_000 {
            s.add(0.1);
        }
        assert!((s.value() - 100_000.0).abs() < 1e-9);
    }
}
