use serde::Serialize;
use statrs::distribution::{Binomial, Discrete};

/// Exact binomial test against p₀ = 0.5.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinomialTest {
    pub k: u64,
    pub n: u64,
    /// Sum of the probabilities of all outcomes no more likely than `k`.
    pub two_sided: f64,
    /// P(X ≥ k).
    pub one_sided: f64,
}

// Relative slack when comparing outcome probabilities, so that outcomes tied
// with P(k) up to rounding are counted.
const TIE_SLACK: f64 = 1e-7;

pub fn binomial_test(k: u64, n: u64) -> BinomialTest {
    assert!(k <= n, "binomial_test needs k <= n ({k} > {n})");
    let dist = Binomial::new(0.5, n).expect("p = 0.5 is a valid probability");
    let pk = dist.pmf(k);
    let cutoff = pk * (1.0 + TIE_SLACK);
    let mut two_sided = 0.0;
    let mut one_sided = 0.0;
    for x in 0..=n {
        let p = dist.pmf(x);
        if p <= cutoff {
            two_sided += p;
        }
        if x >= k {
            one_sided += p;
        }
    }
    BinomialTest {
        k,
        n,
        two_sided: two_sided.min(1.0),
        one_sided: one_sided.min(1.0),
    }
}
