use serde::{Deserialize, Serialize};

/// Factor settings for the fixed linear quality-score equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlrLevels {
    pub pigment_fastness: f64,
    pub machine_productivity: f64,
    pub pile_weight: f64,
}

pub const MLR_INTERCEPT: f64 = 0.896502;
pub const MLR_PIGMENT_FASTNESS: f64 = 0.067231;
pub const MLR_MACHINE_PRODUCTIVITY: f64 = -0.1482945;
pub const MLR_PILE_WEIGHT: f64 = 0.000005;

/// Published linear estimate of the textile quality score:
/// `0.896502 + 0.067231·PF − 0.1482945·MP + 0.000005·PW`.
pub fn predict_mlr(levels: MlrLevels) -> f64 {
    MLR_INTERCEPT
        + MLR_PIGMENT_FASTNESS * levels.pigment_fastness
        + MLR_MACHINE_PRODUCTIVITY * levels.machine_productivity
        + MLR_PILE_WEIGHT * levels.pile_weight
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(pf: f64, mp: f64, pw: f64) -> f64 {
        predict_mlr(MlrLevels {
            pigment_fastness: pf,
            machine_productivity: mp,
            pile_weight: pw,
        })
    }

    #[test]
    fn spot_values() {
        // 0.896502 + 0.067231 − 0.066732525 + 0.0075
        assert!((at(1.0, 0.45, 1500.0) - 0.904500475).abs() < 1e-12);
        // 0.896502 + 0.05042325 − 0.066732525 + 0.0075
        assert!((at(0.75, 0.45, 1500.0) - 0.887692725).abs() < 1e-12);
        assert_eq!(at(0.0, 0.0, 0.0), 0.896502);
    }
}
