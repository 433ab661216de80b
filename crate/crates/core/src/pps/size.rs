use num_traits::Zero;

use super::{Pps, SnfSystem};
use crate::numerics::{exponent_bits, rational_bits};

/// `|P|`: variable count plus bits of every nonzero coefficient, constant
/// and exponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SizeMeasure {
    pub value: u64,
    pub variables: u64,
    pub coefficient_bits: u64,
    pub exponent_bits: u64,
}

pub trait Measurable {
    fn size_measure(&self) -> SizeMeasure;
}

pub fn size_measure<T: Measurable + ?Sized>(p: &T) -> SizeMeasure {
    p.size_measure()
}

impl Measurable for Pps {
    fn size_measure(&self) -> SizeMeasure {
        let mut coefficient_bits = 0;
        let mut exp_bits = 0;
        for eq in self.equations() {
            if !eq.constant.is_zero() {
                coefficient_bits += rational_bits(&eq.constant);
            }
            for t in &eq.terms {
                coefficient_bits += rational_bits(&t.coeff);
                exp_bits += t.monomial.powers().map(|(_, e)| exponent_bits(e)).sum::<u64>();
            }
        }
        let variables = self.len() as u64;
        SizeMeasure {
            value: variables + coefficient_bits + exp_bits,
            variables,
            coefficient_bits,
            exponent_bits: exp_bits,
        }
    }
}

impl Measurable for SnfSystem {
    fn size_measure(&self) -> SizeMeasure {
        self.to_pps().size_measure()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pps::parse_pps;

    fn size(text: &str) -> u64 {
        size_measure(&parse_pps(text).unwrap()).value
    }

    #[test]
    fn documented_convention() {
        // 1 + bits(1/2) + bits(1/4) + bits(2) = 1 + 3 + 4 + 2
        assert_eq!(size("x = 1/2 x^2 + 1/4"), 10);
        assert_eq!(size("x = x"), 4);
        assert_eq!(size("x = 0"), 1);
    }

    #[test]
    fn breakdown_adds_up() {
        let m = size_measure(&parse_pps("x = 1/3 x y + 1/3\ny = 1/2 x^3").unwrap());
        assert_eq!(m.variables, 2);
        assert_eq!(m.value, m.variables + m.coefficient_bits + m.exponent_bits);
        assert_eq!(m.exponent_bits, 1 + 1 + 2);
    }
}
