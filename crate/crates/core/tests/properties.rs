use nalgebra::DMatrix;
use proptest::prelude::*;

use semiclassical::flow::{self, FlowOptions};
use semiclassical::invariants::{
    gauge_orbit_check, random_special_unitary, relation_residuals, square_root_correspondence,
};
use semiclassical::model::{
    DrivenOscillator, FreeParticle, HarmonicOscillator, Hamiltonian, PhasePoint, QuarticAnharmonic,
};
use semiclassical::packet::{coherent_state, AnisotropicPacket};
use semiclassical::Grid;

fn model(kind: usize, d: usize) -> Box<dyn Hamiltonian> {
    match kind {
        0 => Box::new(FreeParticle::new(d, 0.8).unwrap()),
        1 => {
            let w = DMatrix::from_fn(d, d, |i, j| if i == j { 1.5 + i as f64 } else { -0.2 });
            Box::new(HarmonicOscillator::new(w, 1.2).unwrap())
        }
        2 => Box::new(QuarticAnharmonic::new(d, 1.0, 0.1).unwrap()),
        _ => Box::new(DrivenOscillator::new(d, 0.7, 0.4, 2.0).unwrap()),
    }
}

fn point(v: &[f64], d: usize) -> PhasePoint {
    PhasePoint::from_slices(&v[..d], &v[d..2 * d]).unwrap()
}

fn symplectic_form(d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(2 * d, 2 * d, |i, j| {
        if j == i + d {
            1.0
        } else if i == j + d {
            -1.0
        } else {
            0.0
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn relations_hold_along_trajectories(
        kind in 0usize..4,
        d in 1usize..4,
        coords in prop::collection::vec(-1.5f64..1.5, 6),
        t in 0.05f64..5.0,
    ) {
        let m = model(kind, d);
        let x0 = point(&coords, d);
        let times = [t / 3.0, 2.0 * t / 3.0, t];
        let traj = flow::integrate_characteristics(m.as_ref(), &x0, 0.0, t, &times, &FlowOptions::default()).unwrap();
        for s in &traj.states {
            let r = relation_residuals(&s.a, &s.b);
            prop_assert!(r.max_relative() <= 1e-8, "{:?}", r);
            prop_assert!(r.siegel_pos.unwrap() > 0.0);

            let sigma = s.monodromy();
            let j = symplectic_form(d);
            let defect = (sigma.transpose() * &j * &sigma - &j).norm() / sigma.norm_squared();
            prop_assert!(defect <= 1e-8, "symplectic defect {}", defect);

            let a = s.amplitude();
            let branch = a * a * s.a.determinant();
            prop_assert!((branch - 1.0).norm() <= 1e-8, "a^2 det A = {}", branch);
        }
    }

    #[test]
    fn square_root_correspondence_is_a_retraction(
        kind in 0usize..4,
        d in 1usize..4,
        coords in prop::collection::vec(-1.5f64..1.5, 6),
        t in 0.05f64..4.0,
    ) {
        let m = model(kind, d);
        let s = flow::propagate_point(m.as_ref(), &point(&coords, d), 0.0, t, &FlowOptions::default()).unwrap();
        let z = s.anisotropy().unwrap();
        let (a, b) = square_root_correspondence(&z).unwrap();
        let r = relation_residuals(&a, &b);
        for (name, v) in r.relative_residuals() {
            prop_assert!(v <= 1e-12, "{} = {}", name, v);
        }
        let z_back = &b * a.clone().try_inverse().unwrap();
        prop_assert!((z_back - &z).norm() <= 1e-12 * z.norm().max(1.0));
    }

    #[test]
    fn gauge_orbit_leaves_packet_unchanged(
        d in 1usize..4,
        seed in any::<u64>(),
        coords in prop::collection::vec(-1.0f64..1.0, 6),
        t in 0.1f64..3.0,
    ) {
        let m = model(2, d);
        let s = flow::propagate_point(m.as_ref(), &point(&coords, d), 0.0, t, &FlowOptions::default()).unwrap();
        let u = random_special_unitary(d, seed);
        let r = gauge_orbit_check(&s.a, &s.b, &u, Some(s.log_det_a)).unwrap();
        prop_assert!(r.z <= 1e-12 && r.amplitude <= 1e-12, "{:?}", r);
    }

    #[test]
    fn packet_statistics(
        kind in 0usize..4,
        coords in prop::collection::vec(-1.0f64..1.0, 2),
        t in 0.1f64..3.0,
        hbar in 0.05f64..0.5,
    ) {
        let m = model(kind, 1);
        let x0 = point(&coords, 1);
        let s = flow::propagate_point(m.as_ref(), &x0, 0.0, t, &FlowOptions::default()).unwrap();
        let packet = AnisotropicPacket::from_state(&x0, &s, hbar).unwrap();
        packet.validate().unwrap();

        let grid = packet.auto_grid(512, 10.0).unwrap();
        let norm = packet.eval_on(&grid).unwrap().norm();
        prop_assert!((norm - 1.0).abs() <= 1e-6, "norm {}", norm);

        let aa = (&s.a * s.a.adjoint()).map(|z| z.re) * (hbar / 2.0);
        prop_assert!((packet.position_covariance() - aa).norm() <= 1e-8 * packet.position_covariance().norm());

        for u in packet.observables().uncertainty_products() {
            prop_assert!(u >= hbar / 2.0 - 1e-12);
        }
    }

    #[test]
    fn initial_packet_is_the_coherent_state(
        coords in prop::collection::vec(-2.0f64..2.0, 4),
        x in prop::collection::vec(-3.0f64..3.0, 2),
        hbar in 0.05f64..1.0,
    ) {
        let x0 = point(&coords, 2);
        let s = flow::CharacteristicState::initial(&x0, 0.0);
        let packet = AnisotropicPacket::from_state(&x0, &s, hbar).unwrap();
        let direct = coherent_state(&x, x0.q.as_slice(), x0.p.as_slice(), hbar);
        prop_assert!((packet.eval(&x) - direct).norm() <= 1e-14 * direct.norm().max(1e-300));
        for u in packet.observables().uncertainty_products() {
            prop_assert!((u - hbar / 2.0).abs() <= 1e-10);
        }
    }
}

#[test]
fn domain_too_small_is_reported() {
    let x0 = PhasePoint::scalar(0.0, 0.0);
    let p = AnisotropicPacket::coherent(&x0, 0.5).unwrap();
    let small = Grid::cube(1, -1.0, 1.0, 64).unwrap();
    assert!(matches!(
        p.eval_on(&small),
        Err(semiclassical::Error::DomainCoverage { .. })
    ));
}
