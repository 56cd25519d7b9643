//! Conversion of trajectory CSVs to Casimir–Darboux or plane coordinates.

use serde::{Deserialize, Serialize};

use crate::casimir_darboux::{integrate_angle, lift_to_plane, to_darboux};
use crate::dynamics::fmt_num;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformTarget {
    Darboux,
    Plane,
}

impl std::str::FromStr for TransformTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "darboux" => Ok(TransformTarget::Darboux),
            "plane" => Ok(TransformTarget::Plane),
            other => Err(Error::InvalidParameter(format!(
                "unknown transform target {other:?}, expected darboux or plane"
            ))),
        }
    }
}

fn column(header: &[&str], name: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::InvalidParameter(format!("input CSV has no column {name}")))
}

/// Rewrite a trajectory CSV (columns `t`, `Delta_q2`, `Delta_qp`,
/// `Delta_p2` at least) as `t,s,p_s,C` or `t,X,Y,p_X,p_Y,p_phi`.
///
/// The plane angle starts at 0 and follows `φ̇ = √C/(m s²)` by the
/// trapezoid rule over the samples.
pub fn transform_csv(input: &str, target: TransformTarget, mass: f64) -> Result<String> {
    let mut lines = input.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::InvalidParameter("empty input CSV".into()))?
        .split(',')
        .collect();
    let cols = [
        column(&header, "t")?,
        column(&header, "Delta_q2")?,
        column(&header, "Delta_qp")?,
        column(&header, "Delta_p2")?,
    ];
    let mut times = Vec::new();
    let mut second = Vec::new();
    for (n, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        let mut v = [0.0; 4];
        for (k, &c) in cols.iter().enumerate() {
            let cell = cells.get(c).ok_or_else(|| {
                Error::InvalidParameter(format!("row {} has {} cells", n + 2, cells.len()))
            })?;
            v[k] = cell.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!("row {}: cannot parse {cell:?}", n + 2))
            })?;
        }
        times.push(v[0]);
        second.push((v[1], v[2], v[3]));
    }

    let mut out = String::new();
    match target {
        TransformTarget::Darboux => {
            out.push_str("t,s,p_s,C\n");
            for (t, &(a, b, c)) in times.iter().zip(&second) {
                let d = to_darboux(a, b, c)?;
                let row = [*t, d.s, d.p_s, d.c].map(fmt_num);
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
        TransformTarget::Plane => {
            let phi = integrate_angle(&times, &second, mass, 0.0);
            out.push_str("t,X,Y,p_X,p_Y,p_phi\n");
            for ((t, &(a, b, c)), phi) in times.iter().zip(&second).zip(phi) {
                let d = to_darboux(a, b, c)?;
                let p = lift_to_plane(&d, phi)?;
                let row = [*t, p.x, p.y, p.p_x, p.p_y, p.angular_momentum()].map(fmt_num);
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn darboux_rows() {
        let csv = "t,q,p,Delta_q2,Delta_qp,Delta_p2\n0,0,0,4,2,2\n";
        let out = transform_csv(csv, TransformTarget::Darboux, 1.0).unwrap();
        let row: Vec<f64> = out.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(row, vec![0.0, 2.0, 1.0, 4.0]);
    }

    #[test]
    fn plane_rows() {
        let csv = "t,Delta_q2,Delta_qp,Delta_p2\n0,1,0,0.25\n";
        let out = transform_csv(csv, TransformTarget::Plane, 1.0).unwrap();
        let row: Vec<f64> = out.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(row, vec![0.0, 1.0, 0.0, 0.0, 0.5, 0.5]);
    }

    #[test]
    fn missing_column() {
        assert!(transform_csv("t,q\n0,1\n", TransformTarget::Darboux, 1.0).is_err());
        assert!("sphere".parse::<TransformTarget>().is_err());
    }
}
