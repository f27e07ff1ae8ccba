//! Reference computations shared by the oracle and acceptance suites. They
//! deliberately avoid the library's series helpers.

#![allow(dead_code)]

pub fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

pub fn poisson_term(mu: f64, n: usize) -> f64 {
    (n as f64 * mu.ln() - mu - ln_factorial(n)).exp()
}

pub fn choose(n: usize, k: usize) -> f64 {
    (ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)).exp()
}

pub fn binom(n: usize, l: usize, eta: f64) -> f64 {
    choose(n, l) * eta.powi(l as i32) * (1.0 - eta).powi((n - l) as i32)
}

/// `(q_m_B, total, pnr numerator)` by literal double summation over n ≤ 30.
pub fn brute_force(mu: f64, eta: f64) -> (f64, f64, f64) {
    let mut q = 0.0;
    let mut all = 0.0;
    for n in 2..=30 {
        let p = poisson_term(mu, n);
        q += p * (1..=n).map(|l| binom(n, l, eta)).sum::<f64>();
        all += p * eta.powi(n as i32);
    }
    (q, poisson_term(mu, 1) * eta + q, q - all)
}

/// Enumerates Alice's basis and bit and Eve's basis; Bob measures in Alice's
/// basis (the sifted case). Returns the error probability of an intercepted
/// sifted single photon.
pub fn intercept_resend_error_oracle() -> f64 {
    let mut errors = 0.0;
    let mut cases = 0.0;
    for alice_basis in [false, true] {
        for alice_bit in [false, true] {
            for eve_basis in [false, true] {
                cases += 1.0;
                // Eve's outcome: deterministic on a basis match, a fair coin otherwise.
                let eve_outcomes: Vec<(bool, f64)> = if eve_basis == alice_basis {
                    vec![(alice_bit, 1.0)]
                } else {
                    vec![(false, 0.5), (true, 0.5)]
                };
                for (eve_bit, p_eve) in eve_outcomes {
                    // Bob's basis equals Alice's; he reads Eve's state.
                    let p_bob_wrong = if eve_basis == alice_basis {
                        (eve_bit != alice_bit) as u8 as f64
                    } else {
                        0.5
                    };
                    errors += p_eve * p_bob_wrong;
                }
            }
        }
    }
    errors / cases
}
