use super::{doubling_index_for_bits, solve_lfp, solve_lfp_quadratic};
use crate::error::Result;
use crate::numerics::{Dyadic, Rational};
use crate::pps::{size_measure, to_snf, Pps};
use crate::qualitative::{classify, eliminate_trivial, Tag};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoordinateValue {
    Zero,
    One,
    /// Rounded mode: `v <= q*_i <= v + 2^-j`.
    Certified(Dyadic),
    /// Exact mode: an exact Newton iterate, below `q*_i` by at most `2^-j`.
    Iterate(Rational),
}

/// How the Interior residual is solved.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMode {
    Rounded,
    Exact { budget_bits: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PpsSolution {
    pub names: Vec<String>,
    pub tags: Vec<Tag>,
    pub values: Vec<CoordinateValue>,
    pub bits: u64,
    /// `|P|` of the SNF system and of the Interior residual actually iterated.
    pub snf_size: u64,
    pub residual_size: u64,
    pub residual_len: usize,
    pub iterations: u64,
}

/// Classifies every variable and approximates the Interior ones to within
/// `2^-j` from below.
pub fn solve_pps(p: &Pps, j: u64, mode: SolveMode) -> Result<PpsSolution> {
    let (snf, projection) = to_snf(p);
    let class = classify(&snf)?;
    let reduced = eliminate_trivial(&snf, &class);
    let residual_size = size_measure(&reduced.residual).value;

    let (residual_values, iterations): (Vec<CoordinateValue>, u64) = if reduced.residual.is_empty() {
        (Vec::new(), 0)
    } else {
        match mode {
            SolveMode::Rounded => {
                let v = solve_lfp(&reduced.residual, j)?;
                let it = v.iterations;
                (v.values.into_iter().map(CoordinateValue::Certified).collect(), it)
            }
            SolveMode::Exact { budget_bits } => {
                let i = doubling_index_for_bits(j);
                let x = solve_lfp_quadratic(&reduced.residual, i, budget_bits)?;
                (
                    x.into_iter().map(CoordinateValue::Iterate).collect(),
                    32 * residual_size + 2 + 2 * i,
                )
            }
        }
    };

    let mut snf_values: Vec<Option<CoordinateValue>> = class
        .tags
        .iter()
        .map(|t| match t {
            Tag::Zero => Some(CoordinateValue::Zero),
            Tag::One => Some(CoordinateValue::One),
            Tag::Interior => None,
        })
        .collect();
    for (r, v) in residual_values.into_iter().enumerate() {
        snf_values[reduced.original_index[r]] = Some(v);
    }

    Ok(PpsSolution {
        names: p.names().to_vec(),
        tags: projection.iter().map(|&i| class.tags[i]).collect(),
        values: projection
            .iter()
            .map(|&i| snf_values[i].clone().expect("every coordinate valued"))
            .collect(),
        bits: j,
        snf_size: size_measure(&snf).value,
        residual_size,
        residual_len: reduced.residual.len(),
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{pow2, rat};
    use crate::pps::parse_pps;

    #[test]
    fn mixed_system() {
        let p = parse_pps("x = 1/2 x^2 + 1/2\ny = 2/3 y^2 + 1/3\nz = z^2\nw = 1/2 y + 1/2 x").unwrap();
        let s = solve_pps(&p, 30, SolveMode::Rounded).unwrap();
        assert_eq!(s.tags, vec![Tag::One, Tag::Interior, Tag::Zero, Tag::Interior]);
        assert_eq!(s.values[0], CoordinateValue::One);
        assert_eq!(s.values[2], CoordinateValue::Zero);
        let CoordinateValue::Certified(y) = &s.values[1] else {
            panic!()
        };
        let y = y.to_rational();
        assert!(y <= rat(1, 2) && rat(1, 2) - &y <= pow2(-30));
        let CoordinateValue::Certified(w) = &s.values[3] else {
            panic!()
        };
        let w = w.to_rational();
        assert!(w <= rat(3, 4) && rat(3, 4) - &w <= pow2(-30));
    }

    #[test]
    fn all_one_runs_no_newton() {
        let p = parse_pps("x = 1\ny = 1/2 x + 1/2 y").unwrap();
        let s = solve_pps(&p, 10, SolveMode::Rounded).unwrap();
        assert_eq!(s.values, vec![CoordinateValue::One, CoordinateValue::One]);
        assert_eq!(s.iterations, 0);
    }
}
