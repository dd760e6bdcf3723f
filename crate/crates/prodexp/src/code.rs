//! Linear codes over GF(2^t) in canonical form.
//!
//! A code is stored with both its generator and a parity basis, each in
//! reduced row echelon form, so structural equality of `LinearCode` values is
//! equality of the codes themselves.

use crate::field::Field;
use crate::matrix::Mat;
use crate::{Caps, Error, Result};
use rand::Rng;

#[derive(Clone, PartialEq, Eq)]
pub struct LinearCode {
    field: Field,
    n: usize,
    k: usize,
    gen: Mat,
    par: Mat,
}

impl std::fmt::Debug for LinearCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{},{}] code over GF(2^{})", self.n, self.k, self.field.t())
    }
}

impl LinearCode {
    pub fn from_generator(gen: Mat) -> Result<LinearCode> {
        let n = gen.cols();
        if n == 0 {
            return Err(Error::InvalidArgument("code length must be positive".into()));
        }
        let gen = gen.row_space_canonical();
        let par = gen.kernel_basis();
        Ok(LinearCode { field: gen.field(), n, k: gen.rows(), gen, par })
    }

    pub fn from_parity(par: Mat) -> Result<LinearCode> {
        let n = par.cols();
        if n == 0 {
            return Err(Error::InvalidArgument("code length must be positive".into()));
        }
        let gen = par.kernel_basis();
        let par = par.row_space_canonical();
        Ok(LinearCode { field: par.field(), n, k: gen.rows(), gen, par })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn generator(&self) -> &Mat {
        &self.gen
    }

    pub fn parity(&self) -> &Mat {
        &self.par
    }

    pub fn dual(&self) -> LinearCode {
        LinearCode {
            field: self.field,
            n: self.n,
            k: self.n - self.k,
            gen: self.par.clone(),
            par: self.gen.clone(),
        }
    }

    pub fn contains(&self, word: &[u64]) -> bool {
        assert_eq!(word.len(), self.n);
        self.par.mul_vec(word).iter().all(|&v| v == 0)
    }

    pub fn is_full(&self) -> bool {
        self.k == self.n
    }

    pub fn is_zero(&self) -> bool {
        self.k == 0
    }

    /// Exact minimum distance by enumerating all q^k codewords.
    pub fn min_distance(&self, caps: &Caps) -> Result<usize> {
        if self.k == 0 {
            return Err(Error::InvalidArgument(
                "minimum distance of the zero code is undefined".into(),
            ));
        }
        let q = self.field.order();
        Caps::check("min-distance codeword enumeration", q.pow(self.k as u32), caps.distance)?;
        let mut word = vec![0u64; self.n];
        let mut weight = 0usize;
        let mut best = usize::MAX;
        self.distance_dfs(0, &mut word, &mut weight, &mut best);
        Ok(best)
    }

    fn distance_dfs(&self, depth: usize, word: &mut Vec<u64>, weight: &mut usize, best: &mut usize) {
        if depth == self.k {
            if *weight > 0 {
                *best = (*best).min(*weight);
            }
            return;
        }
        let f = self.field;
        let mut current = 0u64;
        for v in 0..self.field.order() as u64 {
            let delta = f.sub(v, current);
            if delta != 0 {
                for j in 0..self.n {
                    let g = self.gen.get(depth, j);
                    if g != 0 {
                        let old = word[j];
                        let new = f.add(old, f.mul(delta, g));
                        if old == 0 && new != 0 {
                            *weight += 1;
                        } else if old != 0 && new == 0 {
                            *weight -= 1;
                        }
                        word[j] = new;
                    }
                }
                current = v;
            }
            self.distance_dfs(depth + 1, word, weight, best);
        }
        // Undo this digit before returning to the caller.
        if current != 0 {
            for j in 0..self.n {
                let g = self.gen.get(depth, j);
                if g != 0 {
                    let old = word[j];
                    let new = f.sub(old, f.mul(current, g));
                    if old == 0 && new != 0 {
                        *weight += 1;
                    } else if old != 0 && new == 0 {
                        *weight -= 1;
                    }
                    word[j] = new;
                }
            }
        }
    }

    pub fn rep_code(field: Field, n: usize) -> LinearCode {
        let gen = Mat::from_fn(field, 1, n, |_, _| 1);
        LinearCode::from_generator(gen).expect("repetition code")
    }

    pub fn zero_code(field: Field, n: usize) -> LinearCode {
        LinearCode::from_generator(Mat::zero(field, 0, n)).expect("zero code")
    }

    pub fn full_code(field: Field, n: usize) -> LinearCode {
        LinearCode::from_generator(Mat::identity(field, n)).expect("full code")
    }

    /// Uniform k-dimensional subspace of F_q^n: the row space of a uniform
    /// full-row-rank matrix, which weights every subspace equally.
    pub fn random_code(field: Field, n: usize, k: usize, rng: &mut impl Rng) -> Result<LinearCode> {
        if k > n {
            return Err(Error::Dimension(format!("dimension {k} exceeds length {n}")));
        }
        let gen = Mat::random_full_rank(field, k, n, rng)?;
        LinearCode::from_generator(gen)
    }

    /// Uniform k2-dimensional subcode.
    pub fn random_subcode(&self, k2: usize, rng: &mut impl Rng) -> Result<LinearCode> {
        if k2 > self.k {
            return Err(Error::Dimension(format!(
                "subcode dimension {k2} exceeds code dimension {}",
                self.k
            )));
        }
        let coeff = Mat::random_full_rank(self.field, k2, self.k, rng)?;
        LinearCode::from_generator(coeff.mul(&self.gen)?)
    }

    /// True when `other`'s words all lie in this code.
    pub fn has_subcode(&self, other: &LinearCode) -> bool {
        self.field == other.field
            && self.n == other.n
            && (0..other.k).all(|r| self.contains(other.gen.row(r)))
    }
}

pub fn hamming_weight(word: &[u64]) -> usize {
    word.iter().filter(|&&v| v != 0).count()
}
