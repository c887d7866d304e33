use serde::{Deserialize, Serialize};

use super::DoeError;

/// A design factor in natural units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub low: f64,
    pub center: f64,
    pub high: f64,
}

impl Factor {
    /// `center` must sit midway between `low` and `high` (within 1e-9 relative).
    pub fn new(
        name: impl Into<String>,
        low: f64,
        center: f64,
        high: f64,
    ) -> Result<Self, DoeError> {
        let f = Factor {
            name: name.into(),
            low,
            center,
            high,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn from_range(name: impl Into<String>, low: f64, high: f64) -> Result<Self, DoeError> {
        Factor::new(name, low, 0.5 * (low + high), high)
    }

    pub fn validate(&self) -> Result<(), DoeError> {
        let fail = |reason: String| {
            Err(DoeError::Factor {
                name: self.name.clone(),
                reason,
            })
        };
        if self.name.trim().is_empty() {
            return fail("name is empty".into());
        }
        if ![self.low, self.center, self.high]
            .iter()
            .all(|v| v.is_finite())
        {
            return fail("levels must be finite".into());
        }
        if !(self.low < self.center && self.center < self.high) {
            return fail(format!(
                "need low < center < high, got {} / {} / {}",
                self.low, self.center, self.high
            ));
        }
        let mid = 0.5 * (self.low + self.high);
        let scale = self.low.abs().max(self.high.abs()).max(1.0);
        if (self.center - mid).abs() > 1e-9 * scale {
            return fail(format!("center {} is not the midpoint {mid}", self.center));
        }
        Ok(())
    }

    fn half_range(&self) -> f64 {
        0.5 * (self.high - self.low)
    }

    /// `(natural − center) / half-range`; values outside [−1, 1] are
    /// extrapolation.
    pub fn to_coded(&self, natural: f64) -> f64 {
        if natural == self.center {
            0.0
        } else {
            (natural - self.center) / self.half_range()
        }
    }

    /// Coded −1, 0 and +1 map exactly onto the stored levels.
    pub fn from_coded(&self, coded: f64) -> f64 {
        if coded == -1.0 {
            self.low
        } else if coded == 1.0 {
            self.high
        } else {
            self.center + coded * self.half_range()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRun {
    pub standard_order: usize,
    /// 1-based block label.
    pub block: usize,
    pub coded: Vec<f64>,
    pub natural: Vec<f64>,
}

impl DesignRun {
    pub fn is_center(&self) -> bool {
        self.coded.iter().all(|&c| c == 0.0)
    }
}

/// Runs are kept sorted by standard order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentDesign {
    factors: Vec<Factor>,
    runs: Vec<DesignRun>,
}

impl ExperimentDesign {
    /// Checks that every run's coded and natural levels agree under each
    /// factor's coding and that standard orders are unique.
    pub fn new(factors: Vec<Factor>, mut runs: Vec<DesignRun>) -> Result<Self, DoeError> {
        if factors.is_empty() {
            return Err(DoeError::Design("design needs at least one factor".into()));
        }
        for f in &factors {
            f.validate()?;
        }
        for (i, f) in factors.iter().enumerate() {
            if factors[..i].iter().any(|g| g.name == f.name) {
                return Err(DoeError::Design(format!("duplicate factor '{}'", f.name)));
            }
        }
        if runs.is_empty() {
            return Err(DoeError::Design("design has no runs".into()));
        }
        runs.sort_by_key(|r| r.standard_order);
        for w in runs.windows(2) {
            if w[0].standard_order == w[1].standard_order {
                return Err(DoeError::Design(format!(
                    "standard order {} appears twice",
                    w[0].standard_order
                )));
            }
        }
        for r in &runs {
            if r.coded.len() != factors.len() || r.natural.len() != factors.len() {
                return Err(DoeError::Design(format!(
                    "run {} has {} coded / {} natural levels for {} factors",
                    r.standard_order,
                    r.coded.len(),
                    r.natural.len(),
                    factors.len()
                )));
            }
            if r.block == 0 {
                return Err(DoeError::Design(format!(
                    "run {} has block 0",
                    r.standard_order
                )));
            }
            for ((f, &c), &n) in factors.iter().zip(&r.coded).zip(&r.natural) {
                let scale = n.abs().max(f.high.abs()).max(1.0);
                if (f.from_coded(c) - n).abs() > 1e-9 * scale {
                    return Err(DoeError::Design(format!(
                        "run {}: coded {c} does not map to natural {n} for '{}'",
                        r.standard_order, f.name
                    )));
                }
            }
        }
        Ok(ExperimentDesign { factors, runs })
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn runs(&self) -> &[DesignRun] {
        &self.runs
    }

    pub fn n_runs(&self) -> usize {
        self.runs.len()
    }

    pub fn n_center(&self) -> usize {
        self.runs.iter().filter(|r| r.is_center()).count()
    }

    /// Distinct block labels in ascending order.
    pub fn blocks(&self) -> Vec<usize> {
        let mut b: Vec<usize> = self.runs.iter().map(|r| r.block).collect();
        b.sort_unstable();
        b.dedup();
        b
    }
}

/// Blocked face-centered CCD for exactly three factors.
///
/// Block 1 holds the corners with x₁x₂x₃ = −1, block 2 those with +1, and
/// block 3 the six face points. Centers are dealt round-robin to blocks
/// 1, 2, 3 and numbered last within each block, so `n_center = 3` gives the
/// 17-run layout: corners 1–4, center 5, corners 6–9, center 10, faces
/// 11–16, center 17.
pub fn build_ccf_design(factors: &[Factor], n_center: usize) -> Result<ExperimentDesign, DoeError> {
    if factors.len() != 3 {
        return Err(DoeError::Design(format!(
            "the blocked face-centered layout needs exactly 3 factors, got {}",
            factors.len()
        )));
    }
    let corners: Vec<[f64; 3]> = (0..8)
        .map(|i| {
            let s = |bit: usize| if i >> bit & 1 == 1 { 1.0 } else { -1.0 };
            [s(2), s(1), s(0)]
        })
        .collect();
    let product = |c: &[f64; 3]| c[0] * c[1] * c[2];
    let mut faces = Vec::new();
    for k in 0..3 {
        for s in [-1.0, 1.0] {
            let mut p = [0.0; 3];
            p[k] = s;
            faces.push(p);
        }
    }
    let centers_in = |block: usize| (n_center + 3 - block) / 3;
    let block_points: [Vec<[f64; 3]>; 3] = [
        corners
            .iter()
            .copied()
            .filter(|c| product(c) < 0.0)
            .collect(),
        corners
            .iter()
            .copied()
            .filter(|c| product(c) > 0.0)
            .collect(),
        faces,
    ];

    let mut runs = Vec::with_capacity(14 + n_center);
    for (b, points) in block_points.iter().enumerate() {
        let block = b + 1;
        let all = points
            .iter()
            .copied()
            .chain(std::iter::repeat([0.0; 3]).take(centers_in(block)));
        for coded in all {
            runs.push(DesignRun {
                standard_order: runs.len() + 1,
                block,
                natural: factors
                    .iter()
                    .zip(&coded)
                    .map(|(f, &c)| f.from_coded(c))
                    .collect(),
                coded: coded.to_vec(),
            });
        }
    }
    ExperimentDesign::new(factors.to_vec(), runs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doe::testutil::table5;
    use proptest::prelude::*;

    #[test]
    fn seventeen_run_layout() {
        let d = build_ccf_design(&table5(), 3).unwrap();
        assert_eq!(d.n_runs(), 17);
        assert_eq!(d.n_center(), 3);
        let centers: Vec<usize> = d
            .runs()
            .iter()
            .filter(|r| r.is_center())
            .map(|r| r.standard_order)
            .collect();
        assert_eq!(centers, vec![5, 10, 17]);
        for r in d.runs() {
            let nonzero = r.coded.iter().filter(|&&c| c != 0.0).count();
            let expected_block = match (nonzero, r.coded.iter().product::<f64>()) {
                (3, p) if p < 0.0 => 1,
                (3, _) => 2,
                (1, _) => 3,
                _ => continue,
            };
            assert_eq!(r.block, expected_block, "run {}", r.standard_order);
        }
        let run8 = &d.runs()[7];
        assert_eq!(
            (run8.block, run8.natural.clone()),
            (2, vec![1.0, 0.45, 1500.0])
        );
        let first: Vec<Vec<f64>> = d.runs()[..4].iter().map(|r| r.coded.clone()).collect();
        assert_eq!(
            first,
            vec![
                vec![-1.0, -1.0, -1.0],
                vec![-1.0, 1.0, 1.0],
                vec![1.0, -1.0, 1.0],
                vec![1.0, 1.0, -1.0]
            ]
        );
    }

    #[test]
    fn center_count_and_blocks() {
        let d = build_ccf_design(&table5(), 6).unwrap();
        assert_eq!(d.n_runs(), 20);
        assert_eq!(d.n_center(), 6);
        let d0 = build_ccf_design(&table5(), 0).unwrap();
        assert_eq!(d0.n_runs(), 14);
        assert_eq!(d0.blocks(), vec![1, 2, 3]);
        assert!(build_ccf_design(&table5()[..2], 3).is_err());
    }

    #[test]
    fn factor_validation() {
        assert!(Factor::new("x", 1.0, 0.5, 2.0).is_err());
        assert!(Factor::new("x", 0.0, 0.6, 1.0).is_err());
        assert!(Factor::new("", 0.0, 0.5, 1.0).is_err());
        let pw = &table5()[2];
        assert_eq!(pw.to_coded(2729.0), 1.0);
        assert_eq!(pw.to_coded(1500.0), -1.0);
        for f in table5() {
            assert_eq!(f.to_coded(f.center), 0.0);
        }
    }

    #[test]
    fn rejects_inconsistent_runs() {
        let f = table5();
        let run = DesignRun {
            standard_order: 1,
            block: 1,
            coded: vec![1.0, 0.0, 0.0],
            natural: vec![0.75, 0.69, 2114.5],
        };
        assert!(matches!(
            ExperimentDesign::new(f, vec![run]),
            Err(DoeError::Design(_))
        ));
    }

    proptest! {
        #[test]
        fn coding_round_trip(x in -5000.0f64..5000.0, k in 0usize..3) {
            let f = &table5()[k];
            let back = f.from_coded(f.to_coded(x));
            prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }
}
