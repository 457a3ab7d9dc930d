//! Symmetric triangle rules in barycentric coordinates and Gauss rules on
//! `[0, 1]`. Triangle weights sum to one; scale by the element area.

#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

fn orbit3(a: f64) -> [[f64; 3]; 3] {
    let b = 1.0 - 2.0 * a;
    [[a, a, b], [a, b, a], [b, a, a]]
}

fn orbit6(a: f64, b: f64, c: f64) -> [[f64; 3]; 6] {
    [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]
}

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Edge-midpoint rule, exact for degree 2.
    pub fn degree2() -> Self {
        TriangleRule {
            points: vec![[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
            weights: vec![1.0 / 3.0; 3],
            degree: 2,
        }
    }

    /// Six-point rule, exact for degree 4.
    pub fn degree4() -> Self {
        let (a, wa) = (0.445948490915964886318329253883, 0.223381589678011465944185816906);
        let (b, wb) = (0.091576213509770743459571463402, 0.109951743655321867389147516427);
        let mut points = orbit3(a).to_vec();
        points.extend(orbit3(b));
        TriangleRule {
            points,
            weights: vec![wa, wa, wa, wb, wb, wb],
            degree: 4,
        }
    }

    /// Twelve-point rule, exact for degree 6.
    pub fn degree6() -> Self {
        let (a1, w1) = (0.249286745170910421291638553107, 0.116786275726379366030690538687);
        let (a2, w2) = (0.063089014491502228340331602870, 0.050844906370206816920936809106);
        let w3 = 0.082851075618373575193553456421;
        let (p, q, r) = (
            0.053145049844816947353249671631,
            0.310352451033784405416607733956,
            0.636502499121398647230142594413,
        );
        let mut points = orbit3(a1).to_vec();
        points.extend(orbit3(a2));
        points.extend(orbit6(p, q, r));
        let mut weights = vec![w1; 3];
        weights.extend([w2; 3]);
        weights.extend([w3; 6]);
        TriangleRule {
            points,
            weights,
            degree: 6,
        }
    }
}

/// Gauss–Legendre on `[0, 1]`: `(points, weights)` with weights summing to one.
pub fn gauss_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    match n {
        1 => (vec![0.5], vec![1.0]),
        2 => {
            let d = 0.5 / 3f64.sqrt();
            (vec![0.5 - d, 0.5 + d], vec![0.5, 0.5])
        }
        3 => {
            let d = 0.5 * 0.6f64.sqrt();
            (vec![0.5 - d, 0.5, 0.5 + d], vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])
        }
        _ => panic!("gauss_unit supports 1..=3 points"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Mean over the triangle of `λ0^i λ1^j λ2^k`.
    fn exact(i: u32, j: u32, k: u32) -> f64 {
        2.0 * factorial(i) * factorial(j) * factorial(k) / factorial(i + j + k + 2)
    }

    #[test]
    fn monomials_are_integrated_exactly() {
        for rule in [TriangleRule::degree2(), TriangleRule::degree4(), TriangleRule::degree6()] {
            let d = rule.degree as u32;
            for i in 0..=d {
                for j in 0..=d - i {
                    for k in 0..=d - i - j {
                        let q: f64 = rule
                            .points
                            .iter()
                            .zip(&rule.weights)
                            .map(|(p, w)| w * p[0].powi(i as i32) * p[1].powi(j as i32) * p[2].powi(k as i32))
                            .sum();
                        assert!((q - exact(i, j, k)).abs() < 1e-14, "deg {d}: {i} {j} {k}");
                    }
                }
            }
            for p in &rule.points {
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gauss_is_exact_to_degree_2n_minus_1() {
        for n in 1..=3 {
            let (x, w) = gauss_unit(n);
            for p in 0..2 * n as i32 {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
                assert!((q - 1.0 / (p + 1) as f64).abs() < 1e-15);
            }
        }
    }
}
