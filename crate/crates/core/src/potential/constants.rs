use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use super::EtaMeasure;
use crate::error::{domain, Result};
use crate::stable::StableLaw;

/// λV_λ1(x)/|x|^{α−1} → A as x → 0, with the constant carried through from
/// u_λ(0) = λ^{1/α−1}/(α sin(π/α)).
pub fn a_const(lambda: f64, law: &StableLaw) -> f64 {
    let a = law.alpha();
    a * (PI / a).sin() * gamma(2.0 - a) * (PI * a / 2.0).sin() * lambda.powf(1.0 - 1.0 / a)
        / (PI * (a - 1.0))
}

/// The A constant as typeset, with sin(πα) in place of sin(π/α). Negative on
/// (1, 2); kept only for the constants report.
pub fn a_const_printed(lambda: f64, law: &StableLaw) -> f64 {
    let a = law.alpha();
    a * gamma(2.0 - a) * (PI * a).sin() * (PI * a / 2.0).sin() * lambda.powf(1.0 - 1.0 / a)
        / (PI * (a - 1.0))
}

/// P¹(σ > y) ~ B y^{−1+1/α}, B as typeset.
pub fn b_const(law: &StableLaw) -> f64 {
    let a = law.alpha();
    (PI * a).sin() * (PI * a / 2.0).sin() * gamma(1.0 - a) / (PI * gamma(1.0 - 1.0 / a))
}

/// The tail constant obtained from the small-λ expansion
/// E¹(1 − e^{−λσ}) ~ A(1,α) λ^{1−1/α} and the Tauberian theorem: A(1,α)/Γ(1/α).
pub fn b_const_tauberian(law: &StableLaw) -> f64 {
    a_const(1.0, law) / gamma(1.0 / law.alpha())
}

/// C = β sin(π(β+1)/α) / ((c₋+c₊) Γ(1−β) cos(πβ/2) sin(π/α)).
pub fn c_const(law: &StableLaw, eta: &EtaMeasure) -> Result<f64> {
    let a = law.alpha();
    let b = eta.beta;
    if !(b > 0.0 && b < a - 1.0) {
        return Err(domain("beta", format!("{b} is outside (0, α−1)")));
    }
    Ok(b * (PI * (b + 1.0) / a).sin()
        / ((eta.c_minus + eta.c_plus) * gamma(1.0 - b) * (PI * b / 2.0).cos() * (PI / a).sin()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Normalization;

    #[test]
    fn reference_values() {
        let law = StableLaw::new(1.5).unwrap();
        assert!((a_const(1.0, &law) - 1.036_482_448_414_006_44).abs() < 1e-13);
        assert!((b_const(&law) - 0.297_836_083_383_640_848).abs() < 1e-13);
        assert!((b_const_tauberian(&law) - 0.765_429_966_058_242_126).abs() < 1e-13);
        let eta = EtaMeasure::new(0.25, 0.5, 0.5, Normalization::Star).unwrap();
        let c = c_const(&law, &eta).unwrap();
        assert!((1.0 / c - 7.843_678_062_498_382_85).abs() < 1e-11);
        assert!(a_const_printed(1.0, &law) < 0.0);
    }
}
