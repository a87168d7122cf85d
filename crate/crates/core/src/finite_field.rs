//! Linear codes over prime fields.

use rand::Rng;

use crate::error::{Error, Result};

/// Resample cap for [`random_code`] with `require_full_rank`.
pub const FULL_RANK_ATTEMPTS: u32 = 1000;

/// Deterministic primality test for the moduli used here.
pub fn is_prime(q: u64) -> bool {
    if q < 2 {
        return false;
    }
    if q < 4 {
        return true;
    }
    if q.is_multiple_of(2) {
        return false;
    }
    let mut d = 3;
    while d * d <= q {
        if q.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Smallest prime `≥ x`.
pub fn next_prime_at_least(x: f64) -> u64 {
    let mut q = x.ceil().max(2.0) as u64;
    while !is_prime(q) {
        q += 1;
    }
    q
}

fn pow_mod(mut b: u64, mut e: u64, q: u64) -> u64 {
    let mut acc = 1 % q;
    b %= q;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % q;
        }
        b = b * b % q;
        e >>= 1;
    }
    acc
}

/// Multiplicative inverse in F_q, `q` prime and `a ≠ 0 mod q`.
pub fn inv_mod(a: u64, q: u64) -> u64 {
    pow_mod(a, q - 2, q)
}

/// Reduced row echelon form over F_q, in place.  Returns the pivot columns.
pub fn rref_mod(rows: &mut [Vec<u64>], q: u64) -> Vec<usize> {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut top = 0;
    for col in 0..ncols {
        let Some(p) = (top..rows.len()).find(|&i| !rows[i][col].is_multiple_of(q)) else {
            continue;
        };
        rows.swap(top, p);
        let inv = inv_mod(rows[top][col], q);
        for x in rows[top].iter_mut() {
            *x = *x * inv % q;
        }
        let pivot = rows[top].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            let f = row[col];
            if i != top && f != 0 {
                for (x, &p) in row.iter_mut().zip(&pivot) {
                    *x = (*x + (q - f) * p) % q;
                }
            }
        }
        pivots.push(col);
        top += 1;
        if top == rows.len() {
            break;
        }
    }
    pivots
}

/// Rank over F_q of a row-major matrix.
pub fn rank_mod(rows: &[Vec<u64>], q: u64) -> usize {
    let mut m: Vec<Vec<u64>> = rows
        .iter()
        .map(|r| r.iter().map(|x| x % q).collect())
        .collect();
    rref_mod(&mut m, q).len()
}

/// Linear code `{G·m mod q : m ∈ F_q^κ}` with an `n × κ` generator.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCodeFq {
    q: u64,
    n: usize,
    kappa: usize,
    /// Row-major `n × κ`.
    g: Vec<Vec<u64>>,
    rank: usize,
    /// Draws needed to obtain this generator (1 unless resampled).
    pub attempts: u32,
}

impl LinearCodeFq {
    /// Code from an explicit `n × κ` generator matrix (rows are coordinates).
    pub fn new(q: u64, n: usize, kappa: usize, g: Vec<Vec<u64>>) -> Result<Self> {
        if !is_prime(q) {
            return Err(Error::domain(format!("q = {q} is not prime")));
        }
        if q > u32::MAX as u64 {
            return Err(Error::domain(format!("q = {q} too large")));
        }
        if kappa > n {
            return Err(Error::domain(format!(
                "dimension {kappa} exceeds length {n}"
            )));
        }
        if g.len() != n || g.iter().any(|r| r.len() != kappa) {
            return Err(Error::precondition(format!(
                "generator must be {n} x {kappa}"
            )));
        }
        if g.iter().flatten().any(|&x| x >= q) {
            return Err(Error::domain(format!(
                "generator entries must lie in 0..{q}"
            )));
        }
        let rank = rank_mod(&transpose(&g, kappa), q);
        Ok(LinearCodeFq {
            q,
            n,
            kappa,
            g,
            rank,
            attempts: 1,
        })
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn generator(&self) -> &[Vec<u64>] {
        &self.g
    }

    /// `G·m mod q`.
    pub fn encode(&self, m: &[u64]) -> Result<Vec<u64>> {
        if m.len() != self.kappa {
            return Err(Error::domain(format!(
                "message has {} symbols, expected {}",
                m.len(),
                self.kappa
            )));
        }
        if let Some(&bad) = m.iter().find(|&&x| x >= self.q) {
            return Err(Error::domain(format!("symbol {bad} outside F_{}", self.q)));
        }
        Ok(self
            .g
            .iter()
            .map(|row| {
                row.iter()
                    .zip(m)
                    .fold(0, |acc, (a, b)| (acc + a * b) % self.q)
            })
            .collect())
    }

    /// Every message of F_q^κ in lexicographic order.
    pub fn messages(&self) -> Result<Vec<Vec<u64>>> {
        let count = (self.q as f64).powi(self.kappa as i32);
        if count > 1e7 {
            return Err(Error::budget("message enumeration", 10_000_000));
        }
        let mut out = vec![Vec::new()];
        for _ in 0..self.kappa {
            out = out
                .into_iter()
                .flat_map(|p: Vec<u64>| {
                    (0..self.q).map(move |s| {
                        let mut v = p.clone();
                        v.push(s);
                        v
                    })
                })
                .collect();
        }
        Ok(out)
    }

    /// Distinct codewords, sorted.
    pub fn enumerate_codewords(&self) -> Result<Vec<Vec<u64>>> {
        let mut words: Vec<Vec<u64>> = self
            .messages()?
            .iter()
            .map(|m| self.encode(m))
            .collect::<Result<_>>()?;
        words.sort_unstable();
        words.dedup();
        Ok(words)
    }

    /// A basis of the code in reduced row echelon form (one row per basis
    /// vector, length `n`) together with its pivot coordinates.
    pub fn systematic_basis(&self) -> (Vec<Vec<u64>>, Vec<usize>) {
        let mut rows = transpose(&self.g, self.kappa);
        let pivots = rref_mod(&mut rows, self.q);
        rows.truncate(pivots.len());
        (rows, pivots)
    }

    /// Whether `v` (entries reduced mod q) is a codeword.
    pub fn contains(&self, v: &[u64]) -> bool {
        if v.len() != self.n {
            return false;
        }
        let (mut rows, _) = self.systematic_basis();
        rows.push(v.iter().map(|x| x % self.q).collect());
        rank_mod(&rows, self.q) == self.rank
    }
}

fn transpose(g: &[Vec<u64>], cols: usize) -> Vec<Vec<u64>> {
    (0..cols)
        .map(|j| g.iter().map(|r| r[j]).collect())
        .collect()
}

/// Generator with i.i.d. uniform entries in F_q.  With `require_full_rank`
/// the draw is repeated until the rank is κ.
pub fn random_code<R: Rng + ?Sized>(
    q: u64,
    n: usize,
    kappa: usize,
    rng: &mut R,
    require_full_rank: bool,
) -> Result<LinearCodeFq> {
    if kappa > n {
        return Err(Error::domain(format!(
            "dimension {kappa} exceeds length {n}"
        )));
    }
    if !is_prime(q) {
        return Err(Error::domain(format!("q = {q} is not prime")));
    }
    for attempt in 1..=FULL_RANK_ATTEMPTS {
        let g: Vec<Vec<u64>> = (0..n)
            .map(|_| (0..kappa).map(|_| rng.random_range(0..q)).collect())
            .collect();
        let mut code = LinearCodeFq::new(q, n, kappa, g)?;
        if !require_full_rank || code.rank == kappa {
            code.attempts = attempt;
            return Ok(code);
        }
    }
    Err(Error::budget(
        "full-rank generator resampling",
        FULL_RANK_ATTEMPTS as u64,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop, prop_assert, prop_assert_eq, prop_assume, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Rank by brute force: log_q of the size of the span.
    fn span_rank(rows: &[Vec<u64>], q: u64) -> usize {
        let len = rows.first().map_or(0, |r| r.len());
        let mut span = std::collections::BTreeSet::new();
        span.insert(vec![0u64; len]);
        for r in rows {
            let mut next = span.clone();
            for v in &span {
                for c in 1..q {
                    next.insert(v.iter().zip(r).map(|(a, b)| (a + c * b) % q).collect());
                }
            }
            span = next;
        }
        let mut k = 0;
        let mut size = 1;
        while size < span.len() {
            size *= q as usize;
            k += 1;
        }
        assert_eq!(size, span.len());
        k
    }

    #[test]
    fn primes() {
        let small: Vec<u64> = (0..30).filter(|&q| is_prime(q)).collect();
        assert_eq!(small, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert_eq!(next_prime_at_least(27.87), 29);
        assert_eq!(next_prime_at_least(0.3), 2);
        assert_eq!(next_prime_at_least(7.0), 7);
    }

    #[test]
    fn zero_dimensional_code() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = random_code(2, 2, 0, &mut rng, true).unwrap();
        assert_eq!(c.enumerate_codewords().unwrap(), vec![vec![0, 0]]);
        assert_eq!(c.rank(), 0);
    }

    #[test]
    fn full_rank_code_has_q_pow_kappa_words() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = random_code(3, 4, 2, &mut rng, true).unwrap();
        assert_eq!(c.rank(), 2);
        assert_eq!(c.enumerate_codewords().unwrap().len(), 9);
    }

    #[test]
    fn sampled_rank_matches_span_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let c = random_code(3, 4, 2, &mut rng, false).unwrap();
            assert_eq!(c.rank(), span_rank(&transpose(c.generator(), 2), 3));
        }
    }

    #[test]
    fn explicit_codes() {
        let rep = LinearCodeFq::new(2, 2, 1, vec![vec![1], vec![1]]).unwrap();
        assert_eq!(rep.encode(&[1]).unwrap(), vec![1, 1]);
        assert_eq!(rep.encode(&[0]).unwrap(), vec![0, 0]);
        assert!(rep.encode(&[2]).is_err());
        assert!(rep.encode(&[1, 0]).is_err());
        let c = LinearCodeFq::new(2, 3, 2, vec![vec![1, 0], vec![0, 1], vec![1, 1]]).unwrap();
        assert_eq!(c.enumerate_codewords().unwrap().len(), 4);
        assert!(c.contains(&[1, 1, 0]));
        assert!(!c.contains(&[1, 1, 1]));
        assert!(LinearCodeFq::new(4, 2, 1, vec![vec![1], vec![1]]).is_err());
        assert!(LinearCodeFq::new(2, 2, 1, vec![vec![2], vec![1]]).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(random_code(2, 2, 3, &mut rng, true).is_err());
    }

    #[test]
    fn rank_deficient_code_has_fewer_words() {
        let c = LinearCodeFq::new(3, 3, 2, vec![vec![1, 2], vec![2, 1], vec![0, 0]]).unwrap();
        assert_eq!(c.rank(), 1);
        assert_eq!(c.enumerate_codewords().unwrap().len(), 3);
    }

    /// Any `s` distinct vectors of F_q^κ contain ⌈log_q s⌉ independent ones,
    /// because a rank-k set spans only q^k vectors.
    fn check_all_subsets(q: u64, kappa: usize) {
        let space = LinearCodeFq::new(
            q,
            kappa,
            kappa,
            (0..kappa)
                .map(|i| (0..kappa).map(|j| u64::from(i == j)).collect())
                .collect(),
        )
        .unwrap()
        .messages()
        .unwrap();
        let total = space.len();
        for mask in 1u64..(1 << total) {
            let subset: Vec<Vec<u64>> = (0..total)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| space[i].clone())
                .collect();
            let s = subset.len() as f64;
            let need = (s.ln() / (q as f64).ln() - 1e-12).ceil().max(0.0) as usize;
            assert!(
                rank_mod(&subset, q) >= need,
                "q={q} kappa={kappa} mask={mask:b}"
            );
        }
    }

    #[test]
    fn distinct_messages_contain_independent_subsets() {
        check_all_subsets(2, 1);
        check_all_subsets(2, 2);
        check_all_subsets(2, 3);
        check_all_subsets(2, 4);
        check_all_subsets(3, 1);
        check_all_subsets(3, 2);
    }

    proptest! {
        #[test]
        fn encoding_is_linear(seed in any::<u64>(), q in prop::sample::select(vec![2u64, 3, 5, 7]),
                              n in 1usize..7, k in 0usize..4) {
            prop_assume!(k <= n);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = random_code(q, n, k, &mut rng, false).unwrap();
            let m1: Vec<u64> = (0..k).map(|_| rng.random_range(0..q)).collect();
            let m2: Vec<u64> = (0..k).map(|_| rng.random_range(0..q)).collect();
            let sum: Vec<u64> = m1.iter().zip(&m2).map(|(a, b)| (a + b) % q).collect();
            let lhs: Vec<u64> = c.encode(&m1).unwrap().iter().zip(c.encode(&m2).unwrap())
                .map(|(a, b)| (a + b) % q).collect();
            prop_assert_eq!(lhs, c.encode(&sum).unwrap());
            prop_assert_eq!(c.enumerate_codewords().unwrap().len(), (q as usize).pow(c.rank() as u32));
        }

        #[test]
        fn random_subsets_of_larger_spaces(seed in any::<u64>(), size in 1usize..40) {
            let q = 3u64;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut set = std::collections::BTreeSet::new();
            while set.len() < size {
                set.insert((0..4).map(|_| rng.random_range(0..q)).collect::<Vec<u64>>());
            }
            let rows: Vec<Vec<u64>> = set.into_iter().collect();
            let need = ((size as f64).ln() / 3f64.ln() - 1e-12).ceil() as usize;
            prop_assert!(rank_mod(&rows, q) >= need);
        }
    }
}
