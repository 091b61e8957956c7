//! Quadrature rules on triangles (barycentric) and on edges (`[0, 1]`).

/// Triangle rule: barycentric points with weights summing to one; multiply by
/// the triangle area to integrate.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

/// Edge rule on the unit parameter interval; weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRule {
    pub degree: usize,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Six-point rule, exact for degree 4.
    pub fn degree4() -> Self {
        let a1 = 0.445_948_490_915_964_886_318_329_253_883;
        let w1 = 0.223_381_589_678_011_465_695_007_008_433;
        let a2 = 0.091_576_213_509_770_743_459_571_463_402_2;
        let w2 = 0.109_951_743_655_321_867_638_326_324_900;
        let mut rule = TriangleRule { degree: 4, points: Vec::new(), weights: Vec::new() };
        rule.push_orbit3(a1, w1);
        rule.push_orbit3(a2, w2);
        rule
    }

    /// Twelve-point rule, exact for degree 6.
    pub fn degree6() -> Self {
        let a1 = 0.249_286_745_170_910_421_291_638_553_107;
        let w1 = 0.116_786_275_726_379_366_025_289_611_386;
        let a2 = 0.063_089_014_491_502_228_340_331_602_870_8;
        let w2 = 0.050_844_906_370_206_816_920_936_809_106_9;
        let (b, c) = (0.053_145_049_844_816_947_353_249_671_631_4, 0.310_352_451_033_784_405_416_607_733_957);
        let w3 = 0.082_851_075_618_373_575_193_553_456_420_4;
        let mut rule = TriangleRule { degree: 6, points: Vec::new(), weights: Vec::new() };
        rule.push_orbit3(a1, w1);
        rule.push_orbit3(a2, w2);
        let a = 1.0 - b - c;
        for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
            rule.points.push(p);
            rule.weights.push(w3);
        }
        rule
    }

    /// Orbit `(1 - 2a, a, a)` and its permutations.
    fn push_orbit3(&mut self, a: f64, w: f64) {
        let b = 1.0 - 2.0 * a;
        for p in [[b, a, a], [a, b, a], [a, a, b]] {
            self.points.push(p);
            self.weights.push(w);
        }
    }

    /// Physical points of the rule on triangle `tri`.
    pub fn map(&self, tri: &[[f64; 2]; 3]) -> Vec<[f64; 2]> {
        self.points
            .iter()
            .map(|l| {
                [
                    l[0] * tri[0][0] + l[1] * tri[1][0] + l[2] * tri[2][0],
                    l[0] * tri[0][1] + l[1] * tri[1][1] + l[2] * tri[2][1],
                ]
            })
            .collect()
    }
}

impl EdgeRule {
    pub fn gauss2() -> Self {
        let d = 0.5 / 3f64.sqrt();
        EdgeRule { degree: 3, points: vec![0.5 - d, 0.5 + d], weights: vec![0.5, 0.5] }
    }

    pub fn gauss3() -> Self {
        let d = 0.5 * (0.6f64).sqrt();
        EdgeRule { degree: 5, points: vec![0.5 - d, 0.5, 0.5 + d], weights: vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0] }
    }

    pub fn map(&self, a: [f64; 2], b: [f64; 2]) -> Vec<[f64; 2]> {
        self.points.iter().map(|&s| [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]).collect()
    }
}
