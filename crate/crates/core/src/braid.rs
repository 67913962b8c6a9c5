//! Two-string and four-string braids, braid words and their adjoint action.
//!
//! The four-string braid `b_j` is assembled from the two-string braids on
//! strands `2j-1 .. 2j+2` and exchanges the pair `(c_{2j-1}, c_{2j})` with
//! `(c_{2j+1}, c_{2j+2})` under `Ad(b)(x) = b x b†`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, AlgebraParams};
use crate::error::{PfError, Result};
use crate::matrix_rep::{expand, represent, Operator, EXPANSION_CUTOFF, gauss_phase};

/// Which crossing of the four two-string braids is used.
///
/// Only `Exchange` moves `c_1^a c_2^b` onto `c_3^a c_4^b` for every `d`.
/// `Opposite` agrees with it at `d = 2` and is kept to show that it breaks
/// for `d >= 3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Crossing {
    Exchange,
    Opposite,
}

/// Sequence of four-string braid letters `b_j^{±1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BraidWord {
    letters: Vec<(u32, i8)>,
}

impl BraidWord {
    pub fn new(letters: Vec<(u32, i8)>) -> Result<Self> {
        for &(j, s) in &letters {
            if j == 0 {
                return Err(PfError::Format("braid generators are numbered from 1".into()));
            }
            if s != 1 && s != -1 {
                return Err(PfError::Format(format!("braid sign must be ±1, got {s}")));
            }
        }
        Ok(BraidWord { letters })
    }

    pub fn single(j: u32) -> Result<Self> {
        Self::new(vec![(j, 1)])
    }

    /// `b_1 b_2 ... b_n`.
    pub fn ascending(n: u32) -> Result<Self> {
        Self::new((1..=n).map(|j| (j, 1)).collect())
    }

    pub fn letters(&self) -> &[(u32, i8)] {
        &self.letters
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn blocks_required(&self) -> usize {
        self.letters
            .iter()
            .map(|&(j, _)| j as usize + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn inverse(&self) -> BraidWord {
        BraidWord {
            letters: self.letters.iter().rev().map(|&(j, s)| (j, -s)).collect(),
        }
    }
}

impl std::fmt::Display for BraidWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .letters
            .iter()
            .map(|&(j, s)| if s < 0 { format!("b{j}'") } else { format!("b{j}") })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Parses whitespace-separated letters `bN` and `bN'`.
impl std::str::FromStr for BraidWord {
    type Err = PfError;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .split_whitespace()
            .map(|tok| {
                let (body, sign) = match tok.strip_suffix('\'') {
                    Some(b) => (b, -1),
                    None => (tok, 1),
                };
                body.strip_prefix('b')
                    .and_then(|n| n.parse::<u32>().ok())
                    .map(|j| (j, sign))
                    .ok_or_else(|| PfError::Format(format!("bad braid letter `{tok}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(letters)
    }
}

/// Unitary realization of a braid word at a fixed truncation.
#[derive(Clone, Debug)]
pub struct BraidUnitary {
    pub word: BraidWord,
    pub op: Operator,
}

impl BraidUnitary {
    /// Realizes `word` on `blocks` blocks; letters multiply left to right.
    pub fn realize(params: &AlgebraParams, word: &BraidWord, blocks: usize) -> Result<Self> {
        Self::realize_with(params, word, blocks, Crossing::Exchange)
    }

    pub fn realize_with(
        params: &AlgebraParams,
        word: &BraidWord,
        blocks: usize,
        crossing: Crossing,
    ) -> Result<Self> {
        for &(j, _) in word.letters() {
            check_pair(j, blocks)?;
        }
        // Each letter is built symbolically, then the word is multiplied
        // out as matrices.
        let mut op = Operator::identity(*params, blocks)?;
        let mut cache: Vec<(u32, Operator)> = Vec::new();
        for &(j, s) in word.letters() {
            let b = match cache.iter().find(|(k, _)| *k == j) {
                Some((_, b)) => b.clone(),
                None => {
                    let b = represent(&four_string_element(params, j, crossing), blocks)?;
                    cache.push((j, b.clone()));
                    b
                }
            };
            op = if s < 0 { &op * &b.adjoint() } else { &op * &b };
        }
        Ok(BraidUnitary {
            word: word.clone(),
            op,
        })
    }

    pub fn blocks(&self) -> usize {
        self.op.blocks()
    }

    /// Same braid with a global phase `e^{iθ}`.
    pub fn with_phase(&self, theta: f64) -> BraidUnitary {
        BraidUnitary {
            word: self.word.clone(),
            op: self.op.scale(Complex64::from_polar(1.0, theta)),
        }
    }

    pub fn unitarity_residual(&self) -> f64 {
        self.op.unitarity_residual()
    }
}

fn check_pair(j: u32, blocks: usize) -> Result<()> {
    if j == 0 || j as usize + 1 > blocks {
        return Err(PfError::BraidOutOfRange {
            index: j,
            blocks,
            required: j as usize + 1,
        });
    }
    Ok(())
}

/// `(ω^{1/2}/√d) Σ_i c_k^i c_{k+1}^{-i}` as an algebra element.
pub fn two_string_element(params: &AlgebraParams, k: u32) -> AlgebraElement {
    let d = params.d();
    let pref = gauss_phase(params).omega_sqrt / (d as f64).sqrt();
    let terms = (0..d as i64).map(|i| {
        let m = crate::algebra::normalize(params, &[(k, i), (k + 1, -i)], pref);
        (m.key, m.coeff)
    });
    AlgebraElement::from_terms(*params, terms)
}

pub fn two_string_braid(params: &AlgebraParams, k: u32, blocks: usize) -> Result<Operator> {
    if k == 0 || (k + 1) as usize > 2 * blocks {
        return Err(PfError::StrandOutOfRange {
            strand: k + 1,
            blocks,
            required: (k as usize + 2).div_ceil(2),
        });
    }
    represent(&two_string_element(params, k), blocks)
}

/// The four-string braid `b_j` as an element of the algebra on strands
/// `2j-1 .. 2j+2`.
pub fn four_string_element(params: &AlgebraParams, j: u32, crossing: Crossing) -> AlgebraElement {
    let b = |k: u32| two_string_element(params, k);
    let word = [b(2 * j), b(2 * j - 1), b(2 * j + 1), b(2 * j)];
    let mut acc = AlgebraElement::identity(*params);
    for f in &word {
        acc = &acc * f;
    }
    match crossing {
        Crossing::Exchange => acc.adjoint(),
        Crossing::Opposite => acc,
    }
}

pub fn four_string_braid(params: &AlgebraParams, j: u32, blocks: usize) -> Result<BraidUnitary> {
    BraidUnitary::realize(params, &BraidWord::single(j)?, blocks)
}

/// `Ad(b)(a) = b a b†`, read back in the monomial basis.
pub fn adjoint_action(b: &BraidUnitary, a: &AlgebraElement) -> Result<AlgebraElement> {
    let params = *b.op.params();
    if a.params().d() != params.d() {
        return Err(PfError::IncompatibleAlgebras {
            left: params.d(),
            right: a.params().d(),
        });
    }
    if a.blocks() > b.blocks() {
        return Err(PfError::StrandOutOfRange {
            strand: a.max_strand(),
            blocks: b.blocks(),
            required: a.blocks(),
        });
    }
    let x = represent(a, b.blocks())?;
    expand(&b.op.conjugate(&x), EXPANSION_CUTOFF)
}

/// `Ad(word)(a)` at the smallest truncation that holds both.
pub fn adjoint_word(word: &BraidWord, a: &AlgebraElement) -> Result<AlgebraElement> {
    let blocks = word.blocks_required().max(a.blocks()).max(1);
    let b = BraidUnitary::realize(a.params(), word, blocks)?;
    adjoint_action(&b, a)
}

/// `α^k`: strands `j -> j + 2k`.
pub fn shift_alpha(a: &AlgebraElement, k: u32) -> AlgebraElement {
    a.shift(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Degree, MonomialKey};
    use crate::matrix_rep::{monomial_basis, represent_generator};

    fn p(d: u32) -> AlgebraParams {
        AlgebraParams::new(d).unwrap()
    }

    #[test]
    fn word_text_round_trip() {
        let w: BraidWord = "b1 b3' b2".parse().unwrap();
        assert_eq!(w.letters(), &[(1, 1), (3, -1), (2, 1)]);
        assert_eq!(w.to_string().parse::<BraidWord>().unwrap(), w);
        assert!("b0".parse::<BraidWord>().is_err());
        assert!("c1".parse::<BraidWord>().is_err());
    }

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn two_string_unitary() {
        for d in 2..=6 {
            let b = two_string_braid(&p(d), 1, 1).unwrap();
            assert!(b.unitarity_residual() < 1e-10, "d = {d}");
        }
    }

    #[test]
    fn two_string_d2_closed_form() {
        let pr = p(2);
        let b = two_string_braid(&pr, 1, 1).unwrap();
        let c1 = represent_generator(&pr, 1, 1).unwrap();
        let c2 = represent_generator(&pr, 2, 1).unwrap();
        let id = Operator::identity(pr, 1).unwrap();
        let pref = gauss_phase(&pr).omega_sqrt / 2f64.sqrt();
        let expected = (&id + &(&c1 * &c2.adjoint())).scale(pref);
        assert!((&b - &expected).norm() < 1e-14);
    }

    #[test]
    fn distant_two_string_braids_commute() {
        for d in 2..=4 {
            let b1 = two_string_braid(&p(d), 1, 2).unwrap();
            let b3 = two_string_braid(&p(d), 3, 2).unwrap();
            assert!(b1.commutator(&b3).norm() < 1e-10);
        }
    }

    #[test]
    fn two_string_out_of_range() {
        assert!(matches!(
            two_string_braid(&p(3), 2, 1),
            Err(PfError::StrandOutOfRange { .. })
        ));
    }

    #[test]
    fn pair_exchange() {
        for d in 2..=4 {
            let pr = p(d);
            let b = four_string_braid(&pr, 1, 2).unwrap();
            assert!(b.unitarity_residual() < 1e-10);
            for a in 0..d as i64 {
                for n in 0..d as i64 {
                    let x = AlgebraElement::from_word(pr, &[(1, a), (2, n)], one());
                    let y = AlgebraElement::from_word(pr, &[(3, a), (4, n)], one());
                    let got = adjoint_action(&b, &x).unwrap();
                    assert!(got.distance(&y) < 1e-9, "d={d} a={a} n={n}: {got}");
                }
            }
        }
    }

    #[test]
    fn opposite_crossing_fails_pair_exchange_beyond_d2() {
        let worst = |d: u32| {
            let pr = p(d);
            let b = BraidUnitary::realize_with(&pr, &BraidWord::single(1).unwrap(), 2, Crossing::Opposite)
                .unwrap();
            let mut worst: f64 = 0.0;
            for a in 0..d as i64 {
                for n in 0..d as i64 {
                    let x = AlgebraElement::from_word(pr, &[(1, a), (2, n)], one());
                    let y = AlgebraElement::from_word(pr, &[(3, a), (4, n)], one());
                    worst = worst.max(adjoint_action(&b, &x).unwrap().distance(&y));
                }
            }
            worst
        };
        assert!(worst(2) < 1e-9);
        assert!(worst(3) > 1e-3);
        assert!(worst(4) > 1e-3);
    }

    #[test]
    fn braid_relations() {
        for d in [2, 3] {
            let pr = p(d);
            let w = |l: Vec<(u32, i8)>| BraidUnitary::realize(&pr, &BraidWord::new(l).unwrap(), 3).unwrap();
            let lhs = w(vec![(1, 1), (2, 1), (1, 1)]);
            let rhs = w(vec![(2, 1), (1, 1), (2, 1)]);
            assert!((&lhs.op - &rhs.op).norm() < 1e-9, "d = {d}");
        }
        let pr = p(2);
        let b1 = four_string_braid(&pr, 1, 4).unwrap();
        let b3 = four_string_braid(&pr, 3, 4).unwrap();
        assert!(b1.op.commutator(&b3.op).norm() < 1e-9);
    }

    #[test]
    fn ad_fixes_identity_and_moves_c1() {
        let pr = p(3);
        let b = four_string_braid(&pr, 1, 2).unwrap();
        let id = AlgebraElement::identity(pr);
        assert!(adjoint_action(&b, &id).unwrap().distance(&id) < 1e-12);
        let c1 = AlgebraElement::generator(pr, 1);
        let c3 = AlgebraElement::generator(pr, 3);
        assert!(adjoint_action(&b, &c1).unwrap().distance(&c3) < 1e-9);
    }

    #[test]
    fn double_braid_is_not_an_involution() {
        let pr = p(3);
        let b = four_string_braid(&pr, 1, 2).unwrap();
        let x = AlgebraElement::generator(pr, 1);
        let twice = adjoint_action(&b, &adjoint_action(&b, &x).unwrap()).unwrap();
        assert!(twice.distance(&x) > 0.5);
    }

    #[test]
    fn double_braid_squares_to_identity_action_for_majoranas() {
        let pr = p(2);
        let b = four_string_braid(&pr, 1, 2).unwrap();
        for key in monomial_basis(2, 2) {
            let x = AlgebraElement::from_key(pr, key, one());
            let twice = adjoint_action(&b, &adjoint_action(&b, &x).unwrap()).unwrap();
            assert!(twice.distance(&x) < 1e-9);
        }
    }

    #[test]
    fn braids_realize_shift() {
        for d in 2..=3 {
            let pr = p(d);
            for n in 2..=3u32 {
                let word = BraidWord::ascending(n).unwrap();
                let b = BraidUnitary::realize(&pr, &word, n as usize + 1).unwrap();
                for key in monomial_basis(d, 2).step_by(5) {
                    let x = AlgebraElement::from_key(pr, key, one());
                    let got = adjoint_action(&b, &x).unwrap();
                    assert!(got.distance(&shift_alpha(&x, 1)) < 1e-9);
                }
            }
        }
    }

    #[test]
    fn braids_preserve_degree() {
        for d in 2..=4 {
            let pr = p(d);
            let b = four_string_braid(&pr, 1, 2).unwrap();
            for s in 1..=4 {
                let x = AlgebraElement::generator(pr, s);
                let y = adjoint_action(&b, &x).unwrap();
                assert_eq!(y.degree(), Degree::Homogeneous(pr.charge(1)));
            }
        }
    }

    #[test]
    fn braid_element_support() {
        for d in 2..=4 {
            let pr = p(d);
            let j = 2;
            let op = four_string_braid(&pr, j, 3).unwrap().op;
            let e = expand(&op, 1e-10).unwrap();
            for key in e.terms().keys() {
                if let Some(lo) = key.min_strand() {
                    assert!(lo >= 2 * j - 1 && key.max_strand() <= 2 * j + 2, "{key}");
                }
            }
        }
    }

    #[test]
    fn global_phase_is_invisible() {
        let pr = p(3);
        let b = four_string_braid(&pr, 1, 2).unwrap();
        let x = AlgebraElement::from_word(pr, &[(1, 2), (3, 1)], Complex64::new(0.3, -0.7));
        let a = adjoint_action(&b, &x).unwrap();
        let c = adjoint_action(&b.with_phase(1.234), &x).unwrap();
        assert!(a.distance(&c) < 1e-12);
    }

    #[test]
    fn word_bookkeeping() {
        let w = BraidWord::new(vec![(1, 1), (3, -1)]).unwrap();
        assert_eq!(w.blocks_required(), 4);
        assert_eq!(w.to_string(), "b1 b3'");
        assert_eq!(w.inverse().letters(), &[(3, 1), (1, -1)]);
        assert!(BraidWord::new(vec![(0, 1)]).is_err());
        assert!(matches!(
            four_string_braid(&p(2), 2, 2),
            Err(PfError::BraidOutOfRange { .. })
        ));
        let _ = MonomialKey::identity();
    }
}
