use listlab_core::constellations::{ic_list_size, m_for_reff_ratio, sample_ic, IcSearch};
use listlab_core::construction_a::{build_nested, scale_coarse_to_power, select_params};
use listlab_core::geometry::{norm_sq, worst_case_list_size};
use listlab_core::spherical::{project_to_sphere, sample_spherical_size, spherical_list_mc};
use listlab_core::{trial_rng, Attack, ChannelParams, Lattice, SearchMode};

#[test]
fn attacks_never_beat_the_exact_search() {
    for seed in 0..10 {
        let mut rng = trial_rng(seed, "pipeline-spherical", 0);
        let code = sample_spherical_size(3, 4.0, 12, &mut rng).unwrap();
        let exact = worst_case_list_size(code.points(), 3f64.sqrt(), SearchMode::exact())
            .unwrap()
            .list_size;
        for attack in Attack::ALL {
            let found = spherical_list_mc(&code, 1.0, attack, 300, &mut rng).unwrap();
            assert!(
                found.list_size <= exact,
                "{attack:?}: {} > {exact}",
                found.list_size
            );
            assert!(found.list_size >= 1);
        }
    }
}

#[test]
fn projecting_a_spherical_code_changes_nothing() {
    let mut rng = trial_rng(1, "pipeline-project", 0);
    let code = sample_spherical_size(5, 2.0, 20, &mut rng).unwrap();
    let again = project_to_sphere(code.points(), 2.0).unwrap();
    assert_eq!(again.points(), code.points());
}

#[test]
fn net_search_bounds_the_exact_constellation_list_size() {
    for seed in 0..8 {
        let mut rng = trial_rng(seed, "pipeline-ic", 0);
        let alpha = 4.0 * 2f64.sqrt();
        let m = m_for_reff_ratio(alpha, 2, 1.0, 0.5).unwrap().max(3);
        let ic = sample_ic(alpha, m, 2, &mut rng).unwrap();
        let exact = ic_list_size(
            &ic,
            1.0,
            IcSearch::Exact {
                node_budget: 1_000_000,
            },
            None,
        )
        .unwrap();
        let net = ic_list_size(&ic, 1.0, IcSearch::Net { delta: 0.5 }, Some(0.5)).unwrap();
        assert!(net.report.list_size >= exact.report.list_size);
        assert_eq!(net.analytic_bound, Some(27));
    }
}

#[test]
fn nested_codebook_meets_the_power_constraint() {
    let ch = ChannelParams::new(4, 4.0, 1.0, 0.8).unwrap();
    let params = select_params(&ch).unwrap().with_q(3).unwrap();
    let coarse = scale_coarse_to_power(&Lattice::integer(4).unwrap(), ch.power).unwrap();
    let mut rng = trial_rng(2, "pipeline-nested", 0);
    let pair = build_nested(&params, &coarse, &mut rng).unwrap();
    let book = pair.codebook().unwrap();
    assert_eq!(book.len(), 3usize.pow(params.kappa as u32));
    let limit = ch.power_radius();
    assert!(book
        .iter()
        .all(|x| norm_sq(x).sqrt() <= limit * (1.0 + 1e-12)));
    assert!(book.iter().all(|x| pair.fine.contains(x)));
}
