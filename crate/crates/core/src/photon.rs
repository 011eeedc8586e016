//! Photon statistics from quadrature moments.
//!
//! With n = (Q^2 + P^2 - 1) / 2 per mode, the mean photon numbers need
//! degree-2 quadrature moments, the second moments need degree 4, and the
//! cross correlation needs the 2x2 cross table. The square of n is
//! expanded symbolically into antistandard order and evaluated against the
//! ordered-moment table, so no ad-hoc commutator bookkeeping happens here.

use num_complex::Complex64;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::mode_network::Mode;
use crate::moment_engine::{cross_values_on_view, ordered_values_on_view};
use crate::source::{estimate, Measured, MomentSource, MomentView};
use crate::weyl::{exact_to_complex, Exact, ExactPolynomial, OrderedMonomial};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhotonMomentSet {
    pub n1: Measured,
    pub n2: Measured,
    pub n1n2: Measured,
    pub n1_sq: Measured,
    pub n2_sq: Measured,
}

fn rat(num: i64, den: i64) -> Exact {
    Exact::new(Rational64::new(num, den), Rational64::from_integer(0))
}

/// n = (Q^2 + P^2 - 1) / 2 as an exact operator polynomial.
fn number_operator() -> ExactPolynomial {
    ExactPolynomial::monomial(OrderedMonomial::new(0, 2), rat(1, 2))
        .add(&ExactPolynomial::monomial(OrderedMonomial::new(2, 0), rat(1, 2)))
        .add(&ExactPolynomial::constant(rat(-1, 2)))
}

/// Evaluate an antistandard-ordered polynomial against a table of
/// `<P^m Q^k>` values; the result must be real.
fn eval_against(
    poly: &ExactPolynomial,
    lookup: &dyn Fn(u32, u32) -> Result<Complex64>,
) -> Result<f64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (mono, c) in poly.terms() {
        let cw = exact_to_complex::<f64>(c);
        acc += Complex64::new(cw.re, cw.im) * lookup(mono.p, mono.q)?;
    }
    if acc.im.abs() > 1e-8 {
        return Err(Error::ImaginaryResidue(acc.im.abs()));
    }
    Ok(acc.re)
}

fn mean_photon<S: MomentSource + ?Sized>(v: &MomentView<S>, mode: Mode) -> Result<f64> {
    let q2 = v.moment(mode, 0.0, 2)?;
    let p2 = v.moment(mode, std::f64::consts::FRAC_PI_2, 2)?;
    Ok(0.5 * (q2 + p2 - 1.0))
}

fn photon_square<S: MomentSource + ?Sized>(v: &MomentView<S>, mode: Mode) -> Result<f64> {
    let n = number_operator();
    let n2 = n.multiply(&n)?;
    let table = ordered_values_on_view(v, mode, 4, 0.0)?;
    eval_against(&n2, &|p, q| {
        table
            .get(&(p, q))
            .copied()
            .ok_or_else(|| Error::MissingData(format!("degree-4 entry <P^{p} Q^{q}>")))
    })
}

fn photon_cross<S: MomentSource + ?Sized>(v: &MomentView<S>) -> Result<f64> {
    // mode factors commute, so <n1 n2> is a double sum of cross entries
    let n = number_operator();
    let cross = cross_values_on_view(v, 2, 2)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (m1, c1) in n.terms() {
        for (m2, c2) in n.terms() {
            let a = exact_to_complex::<f64>(c1);
            let b = exact_to_complex::<f64>(c2);
            let entry = cross
                .get(&(m1.p, m1.q, m2.p, m2.q))
                .copied()
                .ok_or_else(|| Error::MissingData("cross entry".into()))?;
            acc += Complex64::new(a.re, a.im) * Complex64::new(b.re, b.im) * entry;
        }
    }
    if acc.im.abs() > 1e-8 {
        return Err(Error::ImaginaryResidue(acc.im.abs()));
    }
    Ok(acc.re)
}

/// `<n1 n2>` alone (needs only the joint schedule).
pub fn photon_cross_correlation<S: MomentSource>(src: &S) -> Result<Measured> {
    estimate(src, |v| photon_cross(v))
}

/// All five photon moments with bootstrap errors.
pub fn photon_moments<S: MomentSource>(src: &S) -> Result<PhotonMomentSet> {
    Ok(PhotonMomentSet {
        n1: estimate(src, |v| mean_photon(v, Mode::A))?,
        n2: estimate(src, |v| mean_photon(v, Mode::B))?,
        n1n2: photon_cross_correlation(src)?,
        n1_sq: estimate(src, |v| photon_square(v, Mode::A))?,
        n2_sq: estimate(src, |v| photon_square(v, Mode::B))?,
    })
}
