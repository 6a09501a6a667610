mod common;

use common::random_state;
use pinlab::fock::particle_hole_conjugate;
use pinlab::gpc::{builtin_catalog, particle_hole_dual};
use pinlab::rdm::occupation_numbers;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn hole_spectrum_is_reflected() {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    for (n, d) in [(3, 6), (3, 7), (2, 6), (3, 8)] {
        for _ in 0..10 {
            let s = random_state(n, d, &mut rng);
            let h = particle_hole_conjugate(&s).unwrap();
            assert_eq!((h.basis().n(), h.basis().d()), (d - n, d));
            assert!((h.norm_sqr() - 1.0).abs() < 1e-12);
            let lp = occupation_numbers(&s).unwrap();
            let lh = occupation_numbers(&h).unwrap();
            for i in 0..d {
                assert!((lh[i] - (1.0 - lp[d - 1 - i])).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn dual_constraints_agree_on_hole_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(201);
    for (n, d) in [(3, 6), (3, 7), (3, 8)] {
        let cat = builtin_catalog(n, d).unwrap();
        let dual = particle_hole_dual(&cat);
        assert_eq!(dual.inequalities.len(), cat.inequalities.len());
        for _ in 0..20 {
            let s = random_state(n, d, &mut rng);
            let lp = occupation_numbers(&s).unwrap();
            let lh = occupation_numbers(&particle_hole_conjugate(&s).unwrap()).unwrap();
            for (g, gd) in cat.inequalities.iter().zip(&dual.inequalities) {
                assert!((g.evaluate(&lp).unwrap() - gd.evaluate(&lh).unwrap()).abs() < 1e-10);
            }
            for (g, gd) in cat.equalities.iter().zip(&dual.equalities) {
                assert!((g.evaluate(&lp).unwrap() - gd.evaluate(&lh).unwrap()).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn borland_dennis_dual_form() {
    let g = &builtin_catalog(3, 6).unwrap().inequalities[0];
    let dual = g.particle_hole_dual();
    assert_eq!(dual.kappa0, -1);
    assert_eq!(dual.kappa, vec![0, 0, 1, 0, 1, 1]);
    assert_eq!(dual.particle_hole_dual().kappa, g.kappa);
}
