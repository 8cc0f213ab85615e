//! Symmetric quadrature rules on the reference triangle.

/// Barycentric points and weights normalized so that the weights sum to 1;
/// integrals over a triangle `T` are `|T| · Σ w_q f(x_q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    /// Three interior points, exact for quadratics.
    pub fn degree2() -> Self {
        let (a, b) = (1.0 / 6.0, 2.0 / 3.0);
        QuadratureRule {
            points: vec![[b, a, a], [a, b, a], [a, a, b]],
            weights: vec![1.0 / 3.0; 3],
            degree: 2,
        }
    }

    /// Six-point Dunavant rule, exact for quartics.
    pub fn degree4() -> Self {
        let a1 = 0.445_948_490_915_964_886_3;
        let w1 = 0.223_381_589_678_011_465_9;
        let a2 = 0.091_576_213_509_770_743_46;
        let w2 = 0.109_951_743_655_321_867_4;
        let (b1, b2) = (1.0 - 2.0 * a1, 1.0 - 2.0 * a2);
        QuadratureRule {
            points: vec![[a1, a1, b1], [a1, b1, a1], [b1, a1, a1], [a2, a2, b2], [a2, b2, a2], [b2, a2, a2]],
            weights: vec![w1, w1, w1, w2, w2, w2],
            degree: 4,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Physical coordinates of every point on the triangle with vertices `v`.
    pub fn map(&self, v: &[[f64; 2]; 3]) -> Vec<[f64; 2]> {
        self.points
            .iter()
            .map(|l| {
                [
                    l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0],
                    l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1],
                ]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // ∫ over the reference triangle (0,0),(1,0),(0,1) of x^i y^j = i! j! / (i+j+2)!
    fn exact_monomial(i: u32, j: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        fact(i) * fact(j) / fact(i + j + 2)
    }

    fn check(rule: &QuadratureRule) {
        let sum: f64 = rule.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-13);
        let tri = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let pts = rule.map(&tri);
        for i in 0..=rule.degree as u32 {
            for j in 0..=(rule.degree as u32 - i) {
                let q: f64 = pts
                    .iter()
                    .zip(&rule.weights)
                    .map(|(p, w)| w * p[0].powi(i as i32) * p[1].powi(j as i32))
                    .sum::<f64>()
                    * 0.5;
                assert!((q - exact_monomial(i, j)).abs() < 1e-13, "x^{i} y^{j}: {q}");
            }
        }
    }

    #[test]
    fn rules_integrate_monomials_exactly() {
        check(&QuadratureRule::degree2());
        check(&QuadratureRule::degree4());
    }

    #[test]
    fn degree2_is_not_exact_for_cubics() {
        let rule = QuadratureRule::degree2();
        let pts = rule.map(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let q: f64 = pts.iter().zip(&rule.weights).map(|(p, w)| w * p[0].powi(3)).sum::<f64>() * 0.5;
        assert!((q - exact_monomial(3, 0)).abs() > 1e-4);
    }
}
