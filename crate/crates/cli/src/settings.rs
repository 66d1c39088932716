//! Tolerances from the environment.
//!
//! `RESIDUA_TOL` is either a single number, applied to all four tolerances,
//! or a comma-separated list of `name=value` pairs, e.g.
//! `check_tol=1e-8,rank_tol=1e-11`. Document-level overrides apply on top.

use residua_core::Tolerances;

pub const TOL_ENV: &str = "RESIDUA_TOL";

pub fn parse_tolerances(spec: &str) -> Result<Tolerances, String> {
    let spec = spec.trim();
    if let Ok(x) = spec.parse::<f64>() {
        return Tolerances::new(x, x, x, x).map_err(|e| e.to_string());
    }
    let mut t = Tolerances::default();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, value) = part.split_once('=').ok_or_else(|| format!("expected name=value, found {part:?}"))?;
        let value: f64 = value.trim().parse().map_err(|_| format!("{name}: cannot parse {value:?} as a number"))?;
        match name.trim() {
            "rank_tol" => t.rank_tol = value,
            "kernel_tol" => t.kernel_tol = value,
            "conv_tol" => t.conv_tol = value,
            "check_tol" => t.check_tol = value,
            other => return Err(format!("unknown tolerance {other:?}")),
        }
    }
    t.validate().map_err(|e| e.to_string())?;
    Ok(t)
}

/// Defaults, overridden by `RESIDUA_TOL` when it is set.
pub fn base_tolerances() -> Result<Tolerances, String> {
    match std::env::var(TOL_ENV) {
        Ok(s) => parse_tolerances(&s).map_err(|e| format!("{TOL_ENV}: {e}")),
        Err(std::env::VarError::NotPresent) => Ok(Tolerances::default()),
        Err(e) => Err(format!("{TOL_ENV}: {e}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms() {
        let t = parse_tolerances("1e-8").unwrap();
        assert_eq!(t.check_tol, 1e-8);
        assert_eq!(t.rank_tol, 1e-8);
        let t = parse_tolerances("check_tol=1e-7, rank_tol=1e-11").unwrap();
        assert_eq!((t.check_tol, t.rank_tol, t.kernel_tol), (1e-7, 1e-11, Tolerances::default().kernel_tol));
        assert!(parse_tolerances("bogus=1").is_err());
        assert!(parse_tolerances("check_tol=-1").is_err());
        assert!(parse_tolerances("check_tol").is_err());
    }
}
