use num_complex::Complex64;
use pnls::domain::Field;
use pnls::dynamics::{conserved_quantities, orbital_distance_to};
use pnls::gss::analyze;
use pnls::operators::{assemble, inertia_negative, kernel_dim, Subspace, Which};
use pnls::profiles::make_profile;
use pnls::slope::{slope_closed, slope_fd, ProfileFamily};
use pnls::{InteractionModel, ProfileSpec, Variant};
use proptest::prelude::*;

/// An attractive ground-state profile chosen by index, at a frequency
/// `1 + t` times its window floor.
fn attractive(kind: usize, n: usize, t: f64, p: f64) -> ProfileSpec {
    let (model, variant, floor) = match kind {
        0 => (InteractionModel::line_delta(1.0), Variant::Even, 0.25),
        1 => (InteractionModel::line_delta_prime(2.0), Variant::Odd, 1.0),
        2 => (InteractionModel::graph_delta(n, -1.0), Variant::Tail, 1.0 / (n * n) as f64),
        _ => (InteractionModel::graph_delta_prime(n, -3.0), Variant::Tail, (n * n) as f64 / 9.0),
    };
    make_profile(model, floor * (1.0 + t), p, variant).unwrap()
}

fn op_counts(s: &ProfileSpec, which: Which, h: f64) -> (usize, usize, f64) {
    let dom = s.domain(h, None).unwrap();
    let op = assemble(which, s, &dom, Subspace::Full).unwrap();
    let q = op.quadratic_form(&s.sample(&dom).unwrap()).unwrap();
    (inertia_negative(&op).unwrap(), kernel_dim(&op).unwrap(), q)
}

fn field_from(dom_edges: usize, len: usize, seed: &[f64]) -> Vec<Vec<Complex64>> {
    (0..dom_edges)
        .map(|j| (0..len).map(|k| Complex64::new(seed[(j + k) % seed.len()], seed[(3 * j + k + 1) % seed.len()])).collect())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // L2 ≥ 0 with kernel spanned by the profile; L1 is negative on the
    // profile, and its negative space is at most one dimension per edge.
    #[test]
    fn linearized_inertia_bounds(kind in 0usize..4, n in 3usize..6, t in 0.5..4.0f64, p in 1.5..6.0f64) {
        let s = attractive(kind, n, t, p);
        let (n2, k2, _) = op_counts(&s, Which::L2, 0.02);
        prop_assert_eq!(n2, 0);
        prop_assert_eq!(k2, 1);
        let (n1, _, q1) = op_counts(&s, Which::L1, 0.02);
        prop_assert!(q1 < 0.0);
        prop_assert!(n1 >= 1 && n1 <= s.model.n_edges, "n(L1) = {}", n1);
    }

    #[test]
    fn closed_slope_matches_finite_differences(kind in 0usize..4, n in 2usize..6, t in 0.05..20.0f64, p in 1.5..8.0f64) {
        let s = attractive(kind, n, t, p);
        let fam = ProfileFamily::of(&s);
        let closed = slope_closed(&fam, s.omega).unwrap();
        let fd = slope_fd(&fam, s.omega).unwrap();
        prop_assert!((closed - fd).abs() <= 1e-6 * (1.0 + closed.abs()), "{} vs {}", closed, fd);
        if p < 5.0 {
            prop_assert!(closed > 0.0);
        }
    }

    #[test]
    fn phase_rotation_changes_nothing(theta in -3.2..3.2f64, seed in prop::collection::vec(-1.0..1.0f64, 7..20), p in 1.5..6.0f64) {
        let s = attractive(3, 3, 0.5, p);
        let dom = s.domain(0.1, Some(6.0)).unwrap();
        let u = Field::from_values(&dom, field_from(3, dom.nodes_per_edge(), &seed)).unwrap();
        let rot = u.scaled(Complex64::from_polar(1.0, theta));
        let phi = s.sample(&dom).unwrap();
        let (d0, d1) = (orbital_distance_to(&u, &phi).unwrap(), orbital_distance_to(&rot, &phi).unwrap());
        prop_assert!((d0 - d1).abs() <= 1e-12 * (1.0 + d0));
        let (m0, e0) = conserved_quantities(&u, &s.model, p);
        let (m1, e1) = conserved_quantities(&rot, &s.model, p);
        prop_assert!((m0 - m1).abs() <= 1e-12 * m0);
        prop_assert!((e0 - e1).abs() <= 1e-11 * (1.0 + e0.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn verdicts_are_reproducible(kind in 0usize..4, t in 0.2..4.0f64, p in 1.5..8.0f64) {
        let s = attractive(kind, 4, t, p);
        let a = analyze(&s, 0.05, None).unwrap();
        let b = analyze(&s, 0.05, None).unwrap();
        prop_assert_eq!(a.verdict, b.verdict);
    }
}
