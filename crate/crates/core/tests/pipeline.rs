//! The public API end to end: text in, reduced likelihood out.

use pedlump::bootstrap::{auto_generators, bootstrap_maximum_ensemble};
use pedlump::emission::{emission_partition, AlleleFrequencies, Emitter, GenotypeData};
use pedlump::ensemble::{maximum_ensemble, verify_markov};
use pedlump::hmm::{build_reduced, dense_forward, naive_forward, reduced_forward, site_thetas};
use pedlump::sim::{simulate_genotypes, simulate_pedigree, PedigreeParams};
use pedlump::{fixtures, Partition, Pedigree};

fn thetas(data: &GenotypeData, lambda: f64) -> Vec<f64> {
    let distances: Vec<f64> = data.sites.iter().map(|s| s.distance).collect();
    site_thetas(&distances, lambda).unwrap()
}

#[test]
fn text_formats_round_trip() {
    for text in [fixtures::FULL_SIBS_PED, fixtures::LINEAGE_PED, fixtures::TRIO_SIBS_PED] {
        let ped = Pedigree::parse(text).unwrap();
        assert_eq!(Pedigree::parse(&ped.to_text()).unwrap().to_text(), ped.to_text());
    }
    let p = Partition::parse(fixtures::HALF_COUSINS_ENSEMBLE).unwrap();
    assert_eq!(p.to_text(), fixtures::HALF_COUSINS_ENSEMBLE);
    let freqs = AlleleFrequencies::parse("A 0.7\nB 0.3\n").unwrap();
    assert_eq!(AlleleFrequencies::parse(&freqs.to_text()).unwrap(), freqs);
}

#[test]
fn half_cousins_from_text() {
    let ped = Pedigree::parse(fixtures::HALF_COUSINS_PED)
        .unwrap()
        .meiosis_order(Some(fixtures::HALF_COUSINS_ORDER.trim()))
        .unwrap()
        .prune_irrelevant()
        .unwrap();
    let e = emission_partition(&ped).unwrap();
    assert_eq!(e.to_text(), fixtures::HALF_COUSINS_EMISSION);
    assert!(verify_markov(&e).is_err());
    let m = maximum_ensemble(&e).unwrap();
    assert_eq!(m.to_text(), fixtures::HALF_COUSINS_ENSEMBLE);
    assert!(verify_markov(&m).is_ok());
    assert!(m.refines(&e).unwrap());
}

#[test]
fn simulated_likelihoods_agree_three_ways() {
    let freqs = AlleleFrequencies::uniform(3).unwrap();
    let params = PedigreeParams {
        generations: 3,
        per_gen_n: 2,
        offspring_mean: 2.0,
        halfsib: false,
    };
    let mut checked = 0;
    for rep in 0..10 {
        let ped = simulate_pedigree(&params, 21, rep).unwrap();
        let Ok(ped) = ped.prune_irrelevant() else { continue };
        if ped.n() > 10 {
            continue;
        }
        let distances = vec![0.05; 19];
        let (data, path) = simulate_genotypes(&ped, &distances, &freqs, 1.0, 21, rep).unwrap();
        assert_eq!(path.len(), 20);
        let data = GenotypeData::parse(&data.to_text()).unwrap();
        let emitter = Emitter::new(&ped, &data, &freqs).unwrap();
        let t = thetas(&data, 1.0);

        let e = emission_partition(&ped).unwrap();
        let full = maximum_ensemble(&e).unwrap();
        let boot = bootstrap_maximum_ensemble(&e, &auto_generators(&ped)).unwrap().result;
        assert_eq!(full.to_text(), boot.to_text());

        let model = build_reduced(&full).unwrap();
        let reduced = reduced_forward(&model, &emitter, &t).unwrap();
        let naive = naive_forward(&emitter, &t).unwrap();
        let dense = dense_forward(&emitter, &t).unwrap();
        assert!((reduced.log_likelihood - naive.log_likelihood).abs() <= 1e-9);
        assert!((dense - naive.log_likelihood).abs() <= 1e-9);
        checked += 1;
    }
    assert!(checked >= 3);
}
