//! Local testability: exact soundness ranges of check matrices, locality
//! bounds, and the length-adapting constructions (tensor extension by an
//! identity, zero padding, and rate adaptation over a pluggable base
//! family).

use crate::code::LinearCode;
use crate::matrix::Mat;
use crate::{Caps, Error, Rat, Result};

/// Exact two-sided soundness of a check matrix H: for every x,
/// alpha_l * d(x, ker H) <= |Hx| <= alpha_h * d(x, ker H).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SoundnessRange {
    pub alpha_l: Rat,
    pub alpha_h: Rat,
}

/// Claimed local-testability parameters of a bundle: Delta-limited checks
/// and (1/m)|Hx| >= (s/n) d(x, C) for all x.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LtcParams {
    pub locality: usize,
    pub s: Rat,
    pub m: usize,
    pub n: usize,
}

/// A code together with the explicit (possibly overcomplete) check matrix
/// its testability claim refers to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LtcBundle {
    pub code: LinearCode,
    pub parity: Mat,
    pub params: LtcParams,
}

impl LtcBundle {
    /// Structural and, caps permitting, semantic validation: the matrix
    /// checks exactly this code, stays within the claimed locality, and
    /// meets the claimed soundness.
    pub fn validate(&self, caps: &Caps) -> Result<()> {
        if self.parity.cols() != self.code.len() {
            return Err(Error::Dimension("check width differs from code length".into()));
        }
        if self.parity.kernel_basis() != *self.code.generator() {
            return Err(Error::InvalidArgument("check matrix does not cut out the code".into()));
        }
        if delta_limited(&self.parity) > self.params.locality {
            return Err(Error::PropertyViolation("locality above the claimed bound".into()));
        }
        if self.params.m != self.parity.rows() || self.params.n != self.code.len() {
            return Err(Error::Dimension("parameter shape mismatch".into()));
        }
        // The full code is tested vacuously by any matrix.
        if !self.code.is_full() {
            match soundness_exact(&self.parity, caps) {
                Ok(s) => {
                    if s < self.params.s {
                        return Err(Error::PropertyViolation(format!(
                            "soundness {s} below the claimed {}",
                            self.params.s
                        )));
                    }
                }
                Err(Error::CapExceeded { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }
}

/// Largest row or column support size.
pub fn delta_limited(h: &Mat) -> usize {
    let rows = (0..h.rows())
        .map(|r| h.row(r).iter().filter(|&&v| v != 0).count())
        .max()
        .unwrap_or(0);
    let cols = (0..h.cols())
        .map(|c| (0..h.rows()).filter(|&r| h.get(r, c) != 0).count())
        .max()
        .unwrap_or(0);
    rows.max(cols)
}

/// Per-coset data: |Hx| and d(x, ker H) are both constant on cosets of
/// ker H, so one pass over coset leaders determines the soundness range.
struct CosetTable {
    /// Minimal weight of a preimage of each syndrome.
    leader: Vec<u32>,
    /// Hamming weight of the syndrome itself.
    syn_weight: Vec<u32>,
}

fn syndrome_index(syndrome: &[u64], pivots: &[usize], q: u64) -> usize {
    pivots.iter().fold(0usize, |acc, &p| acc * q as usize + syndrome[p] as usize)
}

fn range_from_table(table: &CosetTable) -> Result<SoundnessRange> {
    let mut alpha_l: Option<Rat> = None;
    let mut alpha_h: Option<Rat> = None;
    for idx in 1..table.leader.len() {
        debug_assert_ne!(table.leader[idx], u32::MAX, "syndrome never reached");
        let ratio = Rat::new(table.syn_weight[idx] as u64, table.leader[idx] as u64);
        alpha_l = Some(alpha_l.map_or(ratio, |a| a.min(ratio)));
        alpha_h = Some(alpha_h.map_or(ratio, |a| a.max(ratio)));
    }
    match (alpha_l, alpha_h) {
        (Some(alpha_l), Some(alpha_h)) => Ok(SoundnessRange { alpha_l, alpha_h }),
        _ => Err(Error::InvalidArgument(
            "a map with no nonzero syndromes has no soundness range".into(),
        )),
    }
}

fn coset_scaffolding(h: &Mat, caps: &Caps) -> Result<(Vec<usize>, usize)> {
    let q = h.field().order();
    let im = h.transpose().row_space_canonical();
    let (_, pivots) = im.rref();
    if pivots.is_empty() {
        return Err(Error::InvalidArgument(
            "a map with no nonzero syndromes has no soundness range".into(),
        ));
    }
    let table = q.checked_pow(pivots.len() as u32).unwrap_or(u128::MAX);
    Caps::check("syndrome table", table, caps.cosets)?;
    Caps::check(
        "coset leader search",
        q.checked_pow(h.cols() as u32).unwrap_or(u128::MAX),
        caps.sweep,
    )?;
    Ok((pivots, table as usize))
}

/// Coset leaders found by enumerating inputs in increasing Hamming weight,
/// stopping once every syndrome has appeared.
fn fill_by_weight(h: &Mat, pivots: &[usize], size: usize) -> CosetTable {
    let field = h.field();
    let q = field.order() as u64;
    let (m, n) = (h.rows(), h.cols());
    let mut table = CosetTable { leader: vec![u32::MAX; size], syn_weight: vec![0; size] };
    table.leader[0] = 0;
    let mut found = 1usize;
    let mut syndrome = vec![0u64; m];
    #[allow(clippy::too_many_arguments)]
    fn rec(
        h: &Mat,
        pivots: &[usize],
        q: u64,
        w: u32,
        start: usize,
        left: u32,
        syndrome: &mut Vec<u64>,
        table: &mut CosetTable,
        found: &mut usize,
    ) {
        if left == 0 {
            let idx = syndrome_index(syndrome, pivots, q);
            if table.leader[idx] == u32::MAX {
                table.leader[idx] = w;
                table.syn_weight[idx] =
                    syndrome.iter().filter(|&&v| v != 0).count() as u32;
                *found += 1;
            }
            return;
        }
        let field = h.field();
        let n = h.cols();
        for pos in start..=n - left as usize {
            for v in 1..q {
                for r in 0..h.rows() {
                    let hv = h.get(r, pos);
                    if hv != 0 {
                        syndrome[r] = field.add(syndrome[r], field.mul(v, hv));
                    }
                }
                rec(h, pivots, q, w, pos + 1, left - 1, syndrome, table, found);
                for r in 0..h.rows() {
                    let hv = h.get(r, pos);
                    if hv != 0 {
                        syndrome[r] = field.add(syndrome[r], field.mul(v, hv));
                    }
                }
                if *found == table.leader.len() {
                    return;
                }
            }
        }
    }
    for w in 1..=n as u32 {
        if found == size {
            break;
        }
        rec(h, pivots, q, w, 0, w, &mut syndrome, &mut table, &mut found);
    }
    table
}

/// Coset leaders from a complete scan of the input space.
fn fill_by_scan(h: &Mat, pivots: &[usize], size: usize) -> CosetTable {
    let field = h.field();
    let q = field.order() as u64;
    let m = h.rows();
    let mut table = CosetTable { leader: vec![u32::MAX; size], syn_weight: vec![0; size] };
    let mut syndrome = vec![0u64; m];
    let mut digits = vec![0u64; h.cols()];
    fn rec(
        h: &Mat,
        pivots: &[usize],
        q: u64,
        depth: usize,
        weight: u32,
        digits: &mut Vec<u64>,
        syndrome: &mut Vec<u64>,
        table: &mut CosetTable,
    ) {
        if depth == h.cols() {
            let idx = syndrome_index(syndrome, pivots, q);
            if weight < table.leader[idx] {
                table.leader[idx] = weight;
                table.syn_weight[idx] =
                    syndrome.iter().filter(|&&v| v != 0).count() as u32;
            }
            return;
        }
        let field = h.field();
        for v in 0..q {
            let delta = field.add(digits[depth], v);
            if delta != 0 {
                for r in 0..h.rows() {
                    let hv = h.get(r, depth);
                    if hv != 0 {
                        syndrome[r] = field.add(syndrome[r], field.mul(delta, hv));
                    }
                }
                digits[depth] = v;
            }
            let w = weight + (v != 0) as u32;
            rec(h, pivots, q, depth + 1, w, digits, syndrome, table);
        }
        let delta = digits[depth];
        if delta != 0 {
            for r in 0..h.rows() {
                let hv = h.get(r, depth);
                if hv != 0 {
                    syndrome[r] = field.add(syndrome[r], field.mul(delta, hv));
                }
            }
            digits[depth] = 0;
        }
    }
    rec(h, pivots, q, 0, 0, &mut digits, &mut syndrome, &mut table);
    table
}

/// Exact soundness range via coset leaders. Small instances are re-derived
/// by a full input scan as an internal consistency check.
pub fn soundness_range(h: &Mat, caps: &Caps) -> Result<SoundnessRange> {
    let (pivots, size) = coset_scaffolding(h, caps)?;
    let table = fill_by_weight(h, &pivots, size);
    let range = range_from_table(&table)?;
    let q = h.field().order();
    let full = q.checked_pow(h.cols() as u32).unwrap_or(u128::MAX);
    if full <= 1 << 16 {
        let scanned = range_from_table(&fill_by_scan(h, &pivots, size))?;
        if scanned != range {
            return Err(Error::PropertyViolation(
                "coset-leader and full-scan soundness ranges disagree".into(),
            ));
        }
    }
    Ok(range)
}

/// The full-scan route alone, as an externally callable reference path.
pub fn soundness_range_by_scan(h: &Mat, caps: &Caps) -> Result<SoundnessRange> {
    let (pivots, size) = coset_scaffolding(h, caps)?;
    range_from_table(&fill_by_scan(h, &pivots, size))
}

/// Largest s with (1/m)|Hx| >= (s/n) d(x, ker H) for all x: (n/m) alpha_l.
pub fn soundness_exact(h: &Mat, caps: &Caps) -> Result<Rat> {
    let range = soundness_range(h, caps)?;
    Ok(Rat::new(h.cols() as u64, h.rows() as u64) * range.alpha_l)
}

fn soundness_exact_if_feasible(h: &Mat, caps: &Caps) -> Result<Option<Rat>> {
    match soundness_exact(h, caps) {
        Ok(s) => Ok(Some(s)),
        Err(Error::CapExceeded { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn check_cuts_out(code: &LinearCode, h: &Mat) -> Result<()> {
    if h.cols() != code.len() || h.kernel_basis() != *code.generator() {
        return Err(Error::InvalidArgument("check matrix does not cut out the code".into()));
    }
    Ok(())
}

/// t interleaved copies: the code becomes C tensor F_q^t with checks
/// H kron I_t; locality and exact soundness are unchanged.
pub fn tensor_extend(bundle: &LtcBundle, t: usize, caps: &Caps) -> Result<LtcBundle> {
    if t == 0 {
        return Err(Error::InvalidArgument("tensor extension needs t >= 1".into()));
    }
    check_cuts_out(&bundle.code, &bundle.parity)?;
    let field = bundle.code.field();
    let ident = Mat::identity(field, t);
    let parity = bundle.parity.kron(&ident)?;
    let code = LinearCode::from_generator(bundle.code.generator().kron(&ident)?)?;
    debug_assert_eq!(parity.kernel_basis(), *code.generator());
    let locality = delta_limited(&parity);
    debug_assert_eq!(locality, delta_limited(&bundle.parity));
    if !bundle.code.is_full() {
        if let (Some(before), Some(after)) = (
            soundness_exact_if_feasible(&bundle.parity, caps)?,
            soundness_exact_if_feasible(&parity, caps)?,
        ) {
            if before != after {
                return Err(Error::PropertyViolation(format!(
                    "tensor extension changed exact soundness: {before} to {after}"
                )));
            }
        }
    }
    Ok(LtcBundle {
        code,
        parity,
        params: LtcParams {
            locality,
            s: bundle.params.s,
            m: t * bundle.params.m,
            n: t * bundle.params.n,
        },
    })
}

/// Appends u always-zero coordinates, each with its own unit check. The
/// soundness claim drops to min(s/2, 1); that bound is asserted only when
/// the row-count window n/2 <= m <= n holds, and is left unverified (the
/// construction still returned) otherwise.
pub fn pad_zero(bundle: &LtcBundle, u: usize, caps: &Caps) -> Result<LtcBundle> {
    check_cuts_out(&bundle.code, &bundle.parity)?;
    if u == 0 {
        return Ok(bundle.clone());
    }
    let field = bundle.code.field();
    let (m, n) = (bundle.parity.rows(), bundle.parity.cols());
    let parity = Mat::from_fn(field, m + u, n + u, |r, c| {
        if r < m && c < n {
            bundle.parity.get(r, c)
        } else if r >= m && c >= n && r - m == c - n {
            1
        } else {
            0
        }
    });
    let gen = Mat::from_fn(field, bundle.code.dim(), n + u, |r, c| {
        if c < n {
            bundle.code.generator().get(r, c)
        } else {
            0
        }
    });
    let code = LinearCode::from_generator(gen)?;
    let s_claim = (bundle.params.s / Rat::new(2, 1)).min(Rat::new(1, 1));
    let window = 2 * m >= n && m <= n;
    if window && !bundle.code.is_full() {
        if let Some(actual) = soundness_exact_if_feasible(&parity, caps)? {
            if actual < s_claim {
                return Err(Error::PropertyViolation(format!(
                    "padded soundness {actual} below the min(s/2, 1) bound {s_claim}"
                )));
            }
        }
    }
    let locality = delta_limited(&parity);
    Ok(LtcBundle {
        code,
        parity,
        params: LtcParams { locality, s: s_claim, m: m + u, n: n + u },
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RateTrace {
    /// Below the family threshold: the full code with an all-zero check
    /// matrix.
    Full,
    /// Member j, extended t-fold and padded by u zeros.
    Composed { j: usize, t: usize, u: usize },
}

#[derive(Clone, Debug)]
pub struct RateAdapted {
    pub bundle: LtcBundle,
    /// Distance fraction guaranteed uniformly in the target length.
    pub delta: Rat,
    /// Soundness guaranteed uniformly in the target length.
    pub s_uniform: Rat,
    pub trace: RateTrace,
}

/// Builds a length-n code of rate at least `rate` out of a base family of
/// testable codes with geometrically growing lengths: pick the longest
/// member fitting in (1-r)n with r = (1+rate)/2, repeat it by tensor
/// extension, and pad the remainder with zeros.
pub fn rate_adapt(
    family: &[LtcBundle],
    n: usize,
    rate: Rat,
    growth_bound: Rat,
    caps: &Caps,
) -> Result<RateAdapted> {
    if family.is_empty() {
        return Err(Error::FamilyExhausted("the base family is empty".into()));
    }
    if rate <= Rat::new(0, 1) || rate >= Rat::new(1, 1) {
        return Err(Error::InvalidArgument(format!("target rate {rate} outside (0, 1)")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("target length must be positive".into()));
    }
    let field = family[0].code.field();
    for (i, member) in family.iter().enumerate() {
        if member.code.field() != field {
            return Err(Error::MixedFields("rate-adaptation family"));
        }
        check_cuts_out(&member.code, &member.parity)?;
        let (mm, nn) = (member.parity.rows(), member.code.len());
        if 2 * mm < nn || mm > nn {
            return Err(Error::InvalidArgument(format!(
                "family member {i} has {mm} rows on length {nn}, outside [n/2, n]"
            )));
        }
        if i > 0 {
            let prev = family[i - 1].code.len();
            if nn <= prev {
                return Err(Error::InvalidArgument(
                    "family lengths must strictly increase".into(),
                ));
            }
            if Rat::new(nn as u64, prev as u64) > growth_bound {
                return Err(Error::InvalidArgument(format!(
                    "family growth {nn}/{prev} exceeds the allowed ratio"
                )));
            }
        }
    }
    let r = (Rat::new(1, 1) + rate) / Rat::new(2, 1);
    let slack = Rat::new(1, 1) - r;
    let n1 = family[0].code.len();
    let delta0 = family
        .iter()
        .map(|mem| {
            mem.code
                .min_distance(caps)
                .map(|d| Rat::new(d as u64, mem.code.len() as u64))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .min()
        .unwrap();
    let s0 = family.iter().map(|mem| mem.params.s).min().unwrap();
    let locality = family.iter().map(|mem| mem.params.locality).max().unwrap();
    let edge = Rat::new(1, n1 as u64) * slack;
    let delta = edge.min(delta0 * slack / growth_bound);
    let s_uniform = edge.min(s0 / Rat::new(2, 1));

    let fits = |len: usize| Rat::new(len as u64, 1) <= slack * Rat::new(n as u64, 1);
    if !fits(n1) {
        // Short targets take the full code: distance 1 exceeds delta * n
        // here, and testability is vacuous.
        let code = LinearCode::full_code(field, n);
        let parity = Mat::zero(field, n, n);
        return Ok(RateAdapted {
            bundle: LtcBundle {
                code,
                parity,
                params: LtcParams { locality, s: s_uniform, m: n, n },
            },
            delta,
            s_uniform,
            trace: RateTrace::Full,
        });
    }
    let j = (0..family.len())
        .filter(|&i| fits(family[i].code.len()))
        .next_back()
        .expect("the first member fits");
    let nj = family[j].code.len();
    let t = n / nj;
    let u = n % nj;
    let extended = tensor_extend(&family[j], t, caps)?;
    let bundle = pad_zero(&extended, u, caps)?;
    let k = bundle.code.dim();
    if Rat::new(k as u64, 1) < rate * Rat::new(n as u64, 1) {
        return Err(Error::FamilyExhausted(format!(
            "member {j} reaches only dimension {k} of the required {rate} * {n}"
        )));
    }
    Ok(RateAdapted { bundle, delta, s_uniform, trace: RateTrace::Composed { j, t, u } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn f2() -> Field {
        Field::new(1).unwrap()
    }

    fn rep2_bundle() -> LtcBundle {
        let code = LinearCode::rep_code(f2(), 2);
        let parity = code.parity().clone();
        LtcBundle {
            code,
            parity,
            params: LtcParams { locality: 2, s: Rat::new(2, 1), m: 1, n: 2 },
        }
    }

    #[test]
    fn soundness_reference_values() {
        let caps = Caps::default();
        let h = Mat::from_rows(f2(), vec![vec![1, 1]]).unwrap();
        assert_eq!(
            soundness_range(&h, &caps).unwrap(),
            SoundnessRange { alpha_l: Rat::new(1, 1), alpha_h: Rat::new(1, 1) }
        );
        assert_eq!(soundness_exact(&h, &caps).unwrap(), Rat::new(2, 1));
        for n in 1..=5 {
            let id = Mat::identity(f2(), n);
            assert_eq!(
                soundness_range(&id, &caps).unwrap(),
                SoundnessRange { alpha_l: Rat::new(1, 1), alpha_h: Rat::new(1, 1) }
            );
            assert_eq!(soundness_exact(&id, &caps).unwrap(), Rat::new(1, 1));
        }
        // Ternary repetition checks: syndrome (1,1) has leader weight 1.
        let h3 = LinearCode::rep_code(f2(), 3).parity().clone();
        assert_eq!(
            soundness_range(&h3, &caps).unwrap(),
            SoundnessRange { alpha_l: Rat::new(1, 1), alpha_h: Rat::new(2, 1) }
        );
    }

    #[test]
    fn soundness_matches_its_definition_on_random_matrices() {
        let caps = Caps::default();
        let mut rng = ChaCha12Rng::seed_from_u64(60);
        for t in [1u32, 2] {
            let field = Field::new(t).unwrap();
            for _ in 0..10 {
                let m = 1 + rng.gen::<usize>() % 3;
                let n = 2 + rng.gen::<usize>() % 3;
                let h = Mat::random_uniform(field, m, n, &mut rng);
                let range = match soundness_range(&h, &caps) {
                    Ok(r) => r,
                    Err(Error::InvalidArgument(_)) => continue,
                    Err(e) => panic!("{e}"),
                };
                assert!(range.alpha_l > Rat::new(0, 1));
                assert!(range.alpha_l <= range.alpha_h);
                // Definition check by brute force over all inputs: the
                // distance to the kernel is the coset minimum.
                let q = field.order() as u64;
                let total = q.pow(n as u32);
                let kernel: Vec<Vec<u64>> = (0..q.pow(h.kernel_basis().rows() as u32))
                    .map(|mut i| {
                        let kb = h.kernel_basis();
                        let mut coeffs = vec![0u64; kb.rows()];
                        for c in coeffs.iter_mut().rev() {
                            *c = i % q;
                            i /= q;
                        }
                        kb.vec_mul(&coeffs)
                    })
                    .collect();
                for mut i in 0..total {
                    let mut x = vec![0u64; n];
                    for v in x.iter_mut().rev() {
                        *v = i % q;
                        i /= q;
                    }
                    let syn = h.mul_vec(&x);
                    let sw = syn.iter().filter(|&&v| v != 0).count() as u64;
                    let dist = kernel
                        .iter()
                        .map(|k| {
                            x.iter()
                                .zip(k)
                                .filter(|&(&a, &b)| field.add(a, b) != 0)
                                .count() as u64
                        })
                        .min()
                        .unwrap();
                    if dist == 0 {
                        assert_eq!(sw, 0);
                        continue;
                    }
                    assert!(Rat::new(sw, dist) >= range.alpha_l);
                    assert!(Rat::new(sw, dist) <= range.alpha_h);
                }
            }
        }
    }

    #[test]
    fn scan_and_leader_paths_agree() {
        let caps = Caps::default();
        let mut rng = ChaCha12Rng::seed_from_u64(61);
        for _ in 0..20 {
            let m = 1 + rng.gen::<usize>() % 4;
            let n = 2 + rng.gen::<usize>() % 7;
            let h = Mat::random_uniform(f2(), m, n, &mut rng);
            match (soundness_range(&h, &caps), soundness_range_by_scan(&h, &caps)) {
                (Ok(a), Ok(b)) => assert_eq!(a, b),
                (Err(Error::InvalidArgument(_)), Err(Error::InvalidArgument(_))) => {}
                (a, b) => panic!("paths diverge: {a:?} vs {b:?}"),
            }
        }
    }

    #[test]
    fn zero_map_has_no_range() {
        let caps = Caps::default();
        let h = Mat::zero(f2(), 3, 3);
        assert!(matches!(soundness_range(&h, &caps), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn delta_limited_examples() {
        assert_eq!(delta_limited(&Mat::identity(f2(), 4)), 1);
        let ones = Mat::from_fn(f2(), 2, 3, |_, _| 1);
        assert_eq!(delta_limited(&ones), 3);
        let mut rng = ChaCha12Rng::seed_from_u64(62);
        for _ in 0..10 {
            let h = Mat::random_uniform(f2(), 1 + rng.gen::<usize>() % 3, 4, &mut rng);
            let ident = Mat::identity(f2(), 3);
            assert_eq!(delta_limited(&h.kron(&ident).unwrap()), delta_limited(&h));
        }
    }

    #[test]
    fn tensor_extension_preserves_the_bundle() {
        let caps = Caps::default();
        let base = rep2_bundle();
        let same = tensor_extend(&base, 1, &caps).unwrap();
        assert_eq!(same.code, base.code);
        assert_eq!(same.parity, base.parity);
        let doubled = tensor_extend(&base, 2, &caps).unwrap();
        assert_eq!((doubled.code.len(), doubled.code.dim()), (4, 2));
        assert_eq!(doubled.params.s, Rat::new(2, 1));
        assert_eq!(soundness_exact(&doubled.parity, &caps).unwrap(), Rat::new(2, 1));
        assert_eq!(doubled.params.locality, 2);
        doubled.validate(&caps).unwrap();
        // Interleaved copies: a codeword restricted to either copy repeats.
        assert!(doubled.code.contains(&[1, 0, 1, 0]));
        assert!(doubled.code.contains(&[0, 1, 0, 1]));
        assert!(!doubled.code.contains(&[1, 1, 0, 0]));
    }

    #[test]
    fn padding_keeps_half_the_soundness() {
        let caps = Caps::default();
        let base = rep2_bundle();
        let padded = pad_zero(&base, 1, &caps).unwrap();
        assert_eq!((padded.code.len(), padded.code.dim()), (3, 1));
        assert!(padded.code.contains(&[1, 1, 0]));
        assert!(!padded.code.contains(&[1, 1, 1]));
        assert_eq!(padded.params.s, Rat::new(1, 1));
        assert!(soundness_exact(&padded.parity, &caps).unwrap() >= Rat::new(1, 1));
        assert_eq!(padded.params.locality, 2);
        padded.validate(&caps).unwrap();
        let unchanged = pad_zero(&base, 0, &caps).unwrap();
        assert_eq!(unchanged.code, base.code);
    }

    #[test]
    fn soundness_window_bounds_on_small_testable_codes() {
        // Any bundle with n/2 <= m <= n obeys alpha_l >= s/2 and
        // alpha_h <= locality for its exact soundness s.
        let caps = Caps::default();
        let base = rep2_bundle();
        let mut bundles = vec![base.clone()];
        bundles.push(tensor_extend(&base, 3, &caps).unwrap());
        bundles.push(pad_zero(&base, 1, &caps).unwrap());
        bundles.push(pad_zero(&tensor_extend(&base, 2, &caps).unwrap(), 2, &caps).unwrap());
        for bundle in bundles {
            let (m, n) = (bundle.parity.rows(), bundle.parity.cols());
            assert!(2 * m >= n && m <= n);
            let s = soundness_exact(&bundle.parity, &caps).unwrap();
            let range = soundness_range(&bundle.parity, &caps).unwrap();
            assert!(range.alpha_l >= s / Rat::new(2, 1));
            assert!(range.alpha_h <= Rat::new(delta_limited(&bundle.parity) as u64, 1));
        }
    }

    fn toy_family(caps: &Caps) -> Vec<LtcBundle> {
        let base = rep2_bundle();
        vec![
            base.clone(),
            tensor_extend(&base, 3, caps).unwrap(),
            tensor_extend(&base, 9, caps).unwrap(),
        ]
    }

    #[test]
    fn rate_adaptation_on_the_toy_family() {
        let caps = Caps::default();
        let family = toy_family(&caps);
        let growth = Rat::new(3, 1);
        let adapted = rate_adapt(&family, 7, Rat::new(1, 3), growth, &caps).unwrap();
        assert_eq!(adapted.trace, RateTrace::Composed { j: 0, t: 3, u: 1 });
        assert_eq!((adapted.bundle.code.len(), adapted.bundle.code.dim()), (7, 3));
        // Rate and distance meet the uniform guarantees.
        assert!(Rat::new(3, 7) >= Rat::new(1, 3));
        let d = adapted.bundle.code.min_distance(&caps).unwrap();
        assert!(Rat::new(d as u64, 7) >= adapted.delta);
        assert!(
            soundness_exact(&adapted.bundle.parity, &caps).unwrap() >= adapted.s_uniform
        );
        adapted.bundle.validate(&caps).unwrap();

        // An exact multiple skips the padding.
        let pure = rate_adapt(&family, 6, Rat::new(1, 3), growth, &caps).unwrap();
        assert_eq!(pure.trace, RateTrace::Composed { j: 0, t: 3, u: 0 });
        assert_eq!((pure.bundle.code.len(), pure.bundle.code.dim()), (6, 3));
    }

    #[test]
    fn short_targets_take_the_full_code() {
        let caps = Caps::default();
        let family = toy_family(&caps);
        // Threshold: n_1 / (1 - r) = 2 / (1/3) = 6.
        for n in [1usize, 3, 5] {
            let adapted =
                rate_adapt(&family, n, Rat::new(1, 3), Rat::new(3, 1), &caps).unwrap();
            assert_eq!(adapted.trace, RateTrace::Full);
            assert!(adapted.bundle.code.is_full());
            assert!(adapted.bundle.parity.is_zero());
            let d = adapted.bundle.code.min_distance(&caps).unwrap();
            assert!(Rat::new(d as u64, n as u64) > adapted.delta);
        }
    }

    #[test]
    fn rate_adaptation_failure_modes() {
        let caps = Caps::default();
        assert!(matches!(
            rate_adapt(&[], 7, Rat::new(1, 3), Rat::new(3, 1), &caps),
            Err(Error::FamilyExhausted(_))
        ));
        let family = toy_family(&caps);
        assert!(matches!(
            rate_adapt(&family, 7, Rat::new(1, 3), Rat::new(2, 1), &caps),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            rate_adapt(&family, 7, Rat::new(3, 2), Rat::new(3, 1), &caps),
            Err(Error::InvalidArgument(_))
        ));
        // A single short member cannot reach rate 9/10 on long targets.
        let lone = vec![rep2_bundle()];
        assert!(matches!(
            rate_adapt(&lone, 100, Rat::new(9, 10), Rat::new(3, 1), &caps),
            Err(Error::FamilyExhausted(_))
        ));
    }

    #[test]
    fn bundle_validation_rejects_wrong_claims() {
        let caps = Caps::default();
        let mut bundle = rep2_bundle();
        bundle.params.s = Rat::new(5, 2);
        assert!(matches!(bundle.validate(&caps), Err(Error::PropertyViolation(_))));
        let mut bundle = rep2_bundle();
        bundle.params.locality = 1;
        assert!(matches!(bundle.validate(&caps), Err(Error::PropertyViolation(_))));
        let mut bundle = rep2_bundle();
        bundle.parity = Mat::identity(f2(), 2);
        assert!(matches!(bundle.validate(&caps), Err(Error::InvalidArgument(_))));
    }
}
