//! Class and energy specifications on the command line.

use calabi_core::energy::energy_threshold_b;
use calabi_core::rational::{parse_fraction, q, qi};
use calabi_core::{CohomologyClass, EnergyQuantity, SurfaceModel};

/// `x=p/q` for `3H − (p/q)(E₁+E₂+E₃)`, or `h:<h> e:<e1>,<e2>,<e3>`.
pub fn parse_class(spec: &str) -> Result<CohomologyClass, String> {
    let spec = spec.trim();
    let model = SurfaceModel::three_point_blowup();
    if let Some(x) = spec.strip_prefix("x=") {
        let x = parse_fraction(x).map_err(|e| e.to_string())?;
        return Ok(CohomologyClass::symmetric(model, qi(3), x));
    }
    let mut h = None;
    let mut e = None;
    for tok in spec.split_whitespace() {
        if let Some(v) = tok.strip_prefix("h:") {
            h = Some(parse_fraction(v).map_err(|e| e.to_string())?);
        } else if let Some(v) = tok.strip_prefix("e:") {
            let coeffs = v
                .split(',')
                .map(parse_fraction)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| e.to_string())?;
            e = Some(coeffs);
        } else {
            return Err(format!("unexpected token {tok:?} in class spec"));
        }
    }
    match (h, e) {
        (Some(h), Some(e)) if e.len() == 3 => Ok(CohomologyClass::new(h, e)),
        (Some(_), Some(e)) => Err(format!(
            "expected 3 exceptional coefficients, got {}",
            e.len()
        )),
        _ => Err(format!(
            "cannot parse class {spec:?}; use x=p/q or \"h:3 e:1/2,1/2,1/2\""
        )),
    }
}

/// An exact multiple of `π²`, or `B-` for `ℬ − 10⁻⁶π²`.
pub fn parse_energy(
    spec: &str,
    class: &CohomologyClass,
    futaki: &EnergyQuantity,
) -> Result<EnergyQuantity, String> {
    let spec = spec.trim();
    if spec == "B-" {
        let b = energy_threshold_b(class, futaki).map_err(|e| e.to_string())?;
        return Ok(&b - &EnergyQuantity::from_pi2(q(1, 1_000_000)));
    }
    EnergyQuantity::parse(spec).map_err(|e| e.to_string())
}

pub fn parse_quantity(spec: &str) -> Result<EnergyQuantity, String> {
    let e = EnergyQuantity::parse(spec).map_err(|e| e.to_string())?;
    if e.is_negative() {
        return Err(format!("{spec} must be nonnegative"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classes() {
        let w = parse_class("x=1/2").unwrap();
        assert_eq!(w, CohomologyClass::new(qi(3), vec![q(1, 2); 3]));
        let v = parse_class("h:3 e:1/2,1/2,1/2").unwrap();
        assert_eq!(v, w);
        let u = parse_class("h:5/2 e:1,1/3,1/4").unwrap();
        assert_eq!(u.e, vec![qi(1), q(1, 3), q(1, 4)]);
        for bad in ["x=0.5", "h:3", "h:3 e:1,2", "y=1", "h:3 e:1,1,1 z:2", ""] {
            assert!(parse_class(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn energies() {
        let w = parse_class("x=1/2").unwrap();
        let zero = EnergyQuantity::from_int(0);
        assert_eq!(
            parse_energy("B-", &w, &zero).unwrap(),
            EnergyQuantity::from_pi2(q(2912, 11) - q(1, 1_000_000))
        );
        assert_eq!(
            parse_energy("1000", &w, &zero).unwrap(),
            EnergyQuantity::from_int(1000)
        );
        assert_eq!(
            parse_energy("2400/11 pi^2", &w, &zero).unwrap(),
            EnergyQuantity::from_pi2(q(2400, 11))
        );
        assert!(parse_energy("B+", &w, &zero).is_err());
        assert!(parse_quantity("-1").is_err());
    }
}
