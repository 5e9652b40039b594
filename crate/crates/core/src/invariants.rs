//! Algebraic checks on the variational matrices: the symplectic relations, Siegel
//! half-space membership, the canonical square-root representatives, and
//! invariance under the right action of SU(d).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// Condition number of `A` above which the `Z`-dependent checks are skipped.
const Z_CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    /// Frobenius norm of the defining expression.
    pub absolute: f64,
    /// `absolute` over the natural size of the terms involved.
    pub relative: f64,
}

impl Residual {
    fn new(absolute: f64, scale: f64) -> Self {
        Self {
            absolute,
            relative: absolute / scale.max(f64::MIN_POSITIVE),
        }
    }
}

/// Residuals of every relation for one `(A, B)` pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationReport {
    /// `AᵀB - BᵀA`
    pub symmetry: Residual,
    /// `ĀBᵀ - AB̄ᵀ - 2iI`
    pub poisson_qp: Residual,
    /// `AĀᵀ - ĀAᵀ`
    pub poisson_qq: Residual,
    /// `BB̄ᵀ - B̄Bᵀ`
    pub poisson_pp: Residual,
    /// `A*B - B*A - 2iI`
    pub lagrange: Residual,
    /// `Im Z - (AA*)⁻¹`
    pub im_z_a: Option<Residual>,
    /// `Im Z⁻¹ + (BB*)⁻¹`
    pub im_zinv_b: Option<Residual>,
    /// `Z - Zᵀ`
    pub siegel_sym: Option<Residual>,
    /// Smallest eigenvalue of `Im Z`; positive inside the Siegel half-space.
    pub siegel_pos: Option<f64>,
    /// `| |det A|^{-1/2} - (det Im Z)^{1/4} |`
    pub det_identity: Option<f64>,
    /// Set when `A` was too ill-conditioned for the `Z` entries.
    pub z_entries_omitted: bool,
}

impl RelationReport {
    /// Named residuals (relative) for the matrix relations that were evaluated.
    pub fn relative_residuals(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![
            ("symmetry", self.symmetry.relative),
            ("poisson_qp", self.poisson_qp.relative),
            ("poisson_qq", self.poisson_qq.relative),
            ("poisson_pp", self.poisson_pp.relative),
            ("lagrange", self.lagrange.relative),
        ];
        for (name, r) in [
            ("im_z_a", self.im_z_a),
            ("im_zinv_b", self.im_zinv_b),
            ("siegel_sym", self.siegel_sym),
        ] {
            if let Some(r) = r {
                out.push((name, r.relative));
            }
        }
        out
    }

    pub fn max_relative(&self) -> f64 {
        self.relative_residuals()
            .into_iter()
            .map(|(_, v)| v)
            .fold(0.0, f64::max)
    }
}

pub fn relation_residuals(a: &CMatrix, b: &CMatrix) -> RelationReport {
    let d = a.nrows();
    let two_i = CMatrix::identity(d, d) * Complex64::new(0.0, 2.0);
    let conj = |m: &CMatrix| m.map(|z| z.conj());
    let (na, nb) = (a.norm(), b.norm());

    let symmetry = Residual::new((a.transpose() * b - b.transpose() * a).norm(), na * nb);
    let poisson_qp = Residual::new(
        (conj(a) * b.transpose() - a * conj(b).transpose() - &two_i).norm(),
        na * nb,
    );
    let poisson_qq = Residual::new(
        (a * conj(a).transpose() - conj(a) * a.transpose()).norm(),
        na * na,
    );
    let poisson_pp = Residual::new(
        (b * conj(b).transpose() - conj(b) * b.transpose()).norm(),
        nb * nb,
    );
    let lagrange = Residual::new(
        (a.adjoint() * b - b.adjoint() * a - &two_i).norm(),
        na * nb,
    );

    let mut report = RelationReport {
        symmetry,
        poisson_qp,
        poisson_qq,
        poisson_pp,
        lagrange,
        im_z_a: None,
        im_zinv_b: None,
        siegel_sym: None,
        siegel_pos: None,
        det_identity: None,
        z_entries_omitted: true,
    };

    if linalg::condition_number(a) > Z_CONDITION_LIMIT {
        return report;
    }
    let Some(z) = linalg::right_divide(b, a) else {
        return report;
    };
    let im_z = linalg::imag_part(&z);
    let Some(aa_inv) = linalg::gram(a).try_inverse() else {
        return report;
    };
    let aa_inv = linalg::real_part(&aa_inv);
    report.im_z_a = Some(Residual::new(
        (&im_z - &aa_inv).norm(),
        im_z.norm().max(aa_inv.norm()),
    ));

    if let (Some(z_inv), Some(bb_inv)) = (
        z.clone().try_inverse(),
        linalg::gram(b).try_inverse(),
    ) {
        let im_zinv = linalg::imag_part(&z_inv);
        let bb_inv = linalg::real_part(&bb_inv);
        report.im_zinv_b = Some(Residual::new(
            (&im_zinv + &bb_inv).norm(),
            im_zinv.norm().max(bb_inv.norm()),
        ));
    }

    report.siegel_sym = Some(Residual::new((&z - z.transpose()).norm(), z.norm()));
    report.siegel_pos = Some(linalg::min_symmetric_eigenvalue(&im_z));
    let det_im = im_z.determinant();
    report.det_identity = Some((a.determinant().norm().powf(-0.5) - det_im.powf(0.25)).abs());
    report.z_entries_omitted = false;
    report
}

/// `‖Im Z⁻¹ - (BB*)⁻¹‖_F`: the momentum relation with the opposite sign. It
/// does not vanish on solutions of the variational system (its value there is
/// `2‖(BB*)⁻¹‖_F`).
pub fn literal_im_zinv_residual(a: &CMatrix, b: &CMatrix) -> Option<f64> {
    let z = linalg::right_divide(b, a)?;
    let im_zinv = linalg::imag_part(&z.try_inverse()?);
    let bb_inv = linalg::real_part(&linalg::gram(b).try_inverse()?);
    Some((im_zinv - bb_inv).norm())
}

/// Canonical variational matrices for `Z`: `A = (Im Z)^{-1/2}` (the positive
/// definite root) and `B = Z A`.
pub fn square_root_correspondence(z: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let asym = (z - z.transpose()).norm() / z.norm().max(1.0);
    if asym > 1e-10 {
        return Err(Error::SiegelViolation {
            reason: format!("Z is not symmetric (relative defect {asym:.2e})"),
        });
    }
    let im = linalg::imag_part(z);
    let min_eig = linalg::min_symmetric_eigenvalue(&im);
    if !(min_eig > 0.0) {
        return Err(Error::SiegelViolation {
            reason: format!("Im Z has eigenvalue {min_eig:.3e}"),
        });
    }
    let a = linalg::to_complex(&linalg::symmetric_fn(&im, |v| v.powf(-0.5)));
    let b = z * &a;
    Ok((a, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaugeResidual {
    /// `‖Z(AU, BU) - Z(A, B)‖_F / max(1, ‖Z‖_F)`
    pub z: f64,
    /// `|(det AU)^{-1/2} - (det A)^{-1/2}|` on the same branch.
    pub amplitude: f64,
}

/// Compares `Z` and the amplitude before and after `(A, B) ↦ (AU, BU)`.
///
/// `log_det_a`, when given, selects the branch of `(det A)^{-1/2}`; otherwise the
/// principal branch is used. The transformed amplitude is taken on the branch
/// continuous with it.
pub fn gauge_orbit_check(
    a: &CMatrix,
    b: &CMatrix,
    u: &CMatrix,
    log_det_a: Option<Complex64>,
) -> Result<GaugeResidual> {
    let d = a.nrows();
    let unitary_defect = (u.adjoint() * u - CMatrix::identity(d, d)).norm();
    if unitary_defect > 1e-12 {
        return Err(Error::NotUnitary {
            reason: format!("|U*U - I| = {unitary_defect:.2e}"),
        });
    }
    let det_defect = (u.determinant() - 1.0).norm();
    if det_defect > 1e-12 {
        return Err(Error::NotUnitary {
            reason: format!("|det U - 1| = {det_defect:.2e}"),
        });
    }

    let singular = || Error::CausticProximity {
        t: f64::NAN,
        condition: f64::INFINITY,
        cap: Z_CONDITION_LIMIT,
    };
    let au = a * u;
    let bu = b * u;
    let z = linalg::right_divide(b, a).ok_or_else(singular)?;
    let zu = linalg::right_divide(&bu, &au).ok_or_else(singular)?;
    let z_res = (&zu - &z).norm() / z.norm().max(1.0);

    let direct = a.determinant().sqrt().inv();
    let a_ref = match log_det_a {
        Some(l) => {
            let hint = (-0.5 * l).exp();
            if (direct - hint).norm() <= (direct + hint).norm() {
                direct
            } else {
                -direct
            }
        }
        None => direct,
    };
    let principal = au.determinant().sqrt().inv();
    let a_gauge = if (principal - a_ref).norm() <= (principal + a_ref).norm() {
        principal
    } else {
        -principal
    };
    Ok(GaugeResidual {
        z: z_res,
        amplitude: (a_gauge - a_ref).norm(),
    })
}

/// Haar-distributed element of SU(d), deterministic per seed.
pub fn random_special_unitary(d: usize, seed: u64) -> CMatrix {
    assert!(d >= 1, "dimension must be positive");
    if d == 1 {
        return CMatrix::identity(1, 1);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = CMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re, im)
    });
    let qr = m.qr();
    let r = qr.r();
    let phases = DMatrix::from_diagonal(&r.diagonal().map(|v| {
        if v.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            v / v.norm()
        }
    }));
    let q = qr.q() * phases;
    let det = q.determinant();
    let root = Complex64::from_polar(1.0, det.arg() / d as f64);
    q / root
}
