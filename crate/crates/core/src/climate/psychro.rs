use alloc::format;

use crate::{Error, Result};

/// Pressure assumed when none was measured, in hPa.
pub const STANDARD_PRESSURE_HPA: f64 = 1013.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClimateSample {
    pub t_celsius: f64,
    pub rh_percent: f64,
    pub pressure_hpa: f64,
}

impl ClimateSample {
    /// A reading at standard pressure.
    pub fn new(t_celsius: f64, rh_percent: f64) -> Self {
        Self { t_celsius, rh_percent, pressure_hpa: STANDARD_PRESSURE_HPA }
    }

    pub fn with_pressure(self, pressure_hpa: f64) -> Self {
        Self { pressure_hpa, ..self }
    }
}

/// Humidity mixing ratio in g of water vapour per kg of dry air:
///
/// `MR = 38.015 · E·RH / (p − 0.06112 · E·RH)` with
/// `E = 10^(7.65 t / (243.12 + t))`.
pub fn mixing_ratio(s: &ClimateSample) -> Result<f64> {
    let ClimateSample { t_celsius: t, rh_percent: rh, pressure_hpa: p } = *s;
    if !(0.0..=100.0).contains(&rh) {
        return Err(Error::NonPhysical(format!("relative humidity {rh}% is outside [0, 100]")));
    }
    if !(p > 0.0) || !t.is_finite() || !p.is_finite() {
        return Err(Error::NonPhysical(format!("t = {t} °C, p = {p} hPa")));
    }
    let e = libm::pow(10.0, 7.65 * t / (243.12 + t));
    let denominator = p - 0.06112 * e * rh;
    if !(denominator > 0.0) || !e.is_finite() {
        return Err(Error::NonPhysical(format!(
            "vapour pressure exceeds total pressure at t = {t} °C, RH = {rh}%, p = {p} hPa"
        )));
    }
    Ok(38.015 * e * rh / denominator)
}

/// Lowest isopleth for mould on substrate category I: the RH (in %) above
/// which growth risk is elevated at temperature `t_celsius`.
pub fn lim1(t_celsius: f64) -> f64 {
    libm::cosh(0.128324 * (30.0 - t_celsius)) + 75.0
}

#[cfg(test)]
mod tests {
    use super::*;

    // reference values evaluated at 40 significant digits
    const MR_20_50: f64 = 7.241465268838114;
    const LIM_20: f64 = 76.942_724_827_057_3;
    const LIM_0: f64 = 98.500_596_355_714_7;

    #[test]
    fn mixing_ratio_reference_values() {
        assert_eq!(mixing_ratio(&ClimateSample::new(20.0, 0.0)).unwrap(), 0.0);
        let mr = mixing_ratio(&ClimateSample::new(20.0, 50.0)).unwrap();
        assert!((mr - MR_20_50).abs() < 1e-12, "{mr}");
        assert_eq!(ClimateSample::new(1.0, 2.0).pressure_hpa, 1013.0);
    }

    #[test]
    fn mixing_ratio_rejects_non_physical_inputs() {
        assert!(mixing_ratio(&ClimateSample::new(20.0, 101.0)).is_err());
        assert!(mixing_ratio(&ClimateSample::new(20.0, 50.0).with_pressure(0.0)).is_err());
        // saturation vapour pressure above the ambient pressure
        assert!(mixing_ratio(&ClimateSample::new(20.0, 100.0).with_pressure(2.0)).is_err());
    }

    #[test]
    fn lim1_reference_values() {
        assert_eq!(lim1(30.0), 76.0);
        assert!((lim1(20.0) - LIM_20).abs() < 1e-12);
        assert!((lim1(0.0) - LIM_0).abs() < 1e-12);
    }

    #[test]
    fn monotonicity_and_symmetry() {
        let mut prev = 0.0;
        for i in 1..=100 {
            let mr = mixing_ratio(&ClimateSample::new(18.0, f64::from(i))).unwrap();
            assert!(mr > prev);
            prev = mr;
        }
        let mut prev = 0.0;
        for i in -20..=40 {
            let mr = mixing_ratio(&ClimateSample::new(f64::from(i), 60.0)).unwrap();
            assert!(mr > prev);
            prev = mr;
        }
        for i in 0..60 {
            let t = f64::from(i) * 0.5;
            assert!(lim1(t) > lim1(t + 0.5) || t + 0.5 > 30.0);
            assert!((lim1(30.0 - t) - lim1(30.0 + t)).abs() < 1e-12);
            assert!(lim1(t) >= 76.0);
        }
    }
}
