use rand::Rng;

use crate::bits::Bits;
use crate::tol;

/// An exact probability distribution over n-bit strings.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    n: usize,
    probs: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn new(n: usize, probs: Vec<f64>) -> Self {
        assert_eq!(probs.len(), 1 << n);
        let d = OutcomeDistribution { n, probs };
        debug_assert!(
            (d.total_mass() - 1.0).abs() <= tol::EXACT,
            "distribution mass {} off unity",
            d.total_mass()
        );
        d
    }

    /// Build from unnormalized accumulation, checking the mass afterwards.
    pub fn zeroed(n: usize) -> Self {
        OutcomeDistribution { n, probs: vec![0.0; 1 << n] }
    }

    pub fn add_mass(&mut self, outcome: &Bits, p: f64) {
        assert_eq!(outcome.len(), self.n);
        self.probs[outcome.index()] += p;
    }

    pub fn point(n: usize, outcome: &Bits) -> Self {
        let mut d = OutcomeDistribution::zeroed(n);
        d.add_mass(outcome, 1.0);
        d
    }

    pub fn bit_len(&self) -> usize {
        self.n
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn prob(&self, outcome: &Bits) -> f64 {
        assert_eq!(outcome.len(), self.n);
        self.probs[outcome.index()]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn support(&self) -> impl Iterator<Item = (Bits, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(move |(i, &p)| (Bits::new(i as u32, self.n), p))
    }

    /// Total-variation distance; both distributions must share a support size.
    pub fn tv_distance(&self, other: &OutcomeDistribution) -> f64 {
        assert_eq!(self.n, other.n, "support mismatch");
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(p, q)| (p - q).abs())
            .sum::<f64>()
    }

    /// Marginal over the listed bit positions (in the given order).
    pub fn marginal(&self, keep: &[usize]) -> OutcomeDistribution {
        let m = keep.len();
        let mut probs = vec![0.0f64; 1 << m];
        for (i, &p) in self.probs.iter().enumerate() {
            let mut v = 0usize;
            for (t, &b) in keep.iter().enumerate() {
                v |= ((i >> b) & 1) << t;
            }
            probs[v] += p;
        }
        OutcomeDistribution { n: m, probs }
    }

    /// Pointwise convex mixture.
    pub fn mix(&self, other: &OutcomeDistribution, w: f64) -> OutcomeDistribution {
        assert_eq!(self.n, other.n);
        let probs = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(p, q)| w * p + (1.0 - w) * q)
            .collect();
        OutcomeDistribution { n: self.n, probs }
    }

    pub fn max_pointwise_deviation(&self, other: &OutcomeDistribution) -> f64 {
        assert_eq!(self.n, other.n);
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Bits {
        let mut r: f64 = rng.gen::<f64>() * self.total_mass();
        for (i, &p) in self.probs.iter().enumerate() {
            if r < p {
                return Bits::new(i as u32, self.n);
            }
            r -= p;
        }
        // fall through only on rounding at the far tail
        Bits::new((self.probs.len() - 1) as u32, self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tv_extremes() {
        let a = OutcomeDistribution::point(1, &Bits::parse("0"));
        let b = OutcomeDistribution::point(1, &Bits::parse("1"));
        assert_eq!(a.tv_distance(&a), 0.0);
        assert_eq!(a.tv_distance(&b), 1.0);
    }

    #[test]
    fn marginal_sums_rows() {
        let d = OutcomeDistribution::new(2, vec![0.1, 0.2, 0.3, 0.4]);
        let m = d.marginal(&[0]);
        assert!((m.prob(&Bits::parse("0")) - 0.4).abs() < 1e-12);
        assert!((m.prob(&Bits::parse("1")) - 0.6).abs() < 1e-12);
    }
}
