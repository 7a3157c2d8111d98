//! Rough timing pilot for the desk-scale presets. Not part of the test suite.

use std::time::Instant;

use num_complex::{Complex32, Complex64};
use otoc_core::correlate::{
    estimate_request, CorrelatorRequest, Ensemble, FamilyGrid, KrylovBackend, StrobeBackend, VSite,
};
use otoc_core::operators::Axis;
use otoc_core::seed::SeedTree;
use otoc_core::system::{sample_disorder, CavityConfig, Drive, Geometry, SystemSpec};

fn weak_link_request(sites: Vec<usize>, times: Vec<f64>) -> CorrelatorRequest {
    CorrelatorRequest::new(
        vec![
            FamilyGrid::TwoPointToc {
                axes: vec![Axis::X, Axis::Z],
                v_sites: sites.clone(),
                w_sites: sites.clone(),
            },
            FamilyGrid::LocalOtoc {
                v_sites: sites.iter().map(|&s| VSite::Site(s)).collect(),
                w_sites: sites,
            },
        ],
        times,
    )
}

fn probe_request(l: usize, times: Vec<f64>) -> CorrelatorRequest {
    let sites: Vec<usize> = (1..l).collect();
    CorrelatorRequest::new(
        vec![
            FamilyGrid::AutoToc {
                v_axes: vec![Axis::X, Axis::Z],
            },
            FamilyGrid::PerturbedToc {
                axes: vec![Axis::X, Axis::Z],
                w_sites: sites.clone(),
            },
            FamilyGrid::LocalOtoc {
                v_sites: vec![VSite::Probe],
                w_sites: sites,
            },
        ],
        times,
    )
}

fn main() {
    let l = 10;
    let g = Geometry::weak_link_ring(l).unwrap();
    let dis = sample_disorder(&g, Some(0.3), SeedTree::new(1).child("d"));
    let spec = SystemSpec::new(g.clone(), dis, Drive::floquet());
    let sites = g.link_neighborhood(2).unwrap();
    let times: Vec<f64> = vec![1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 12.0];
    let req = weak_link_request(sites.clone(), times.clone());

    let t0 = Instant::now();
    let strobe32 = StrobeBackend::<Complex32>::for_request(&spec, &req).unwrap();
    println!("strobe build (c32, L=10): {:?}", t0.elapsed());

    let ens = Ensemble::haar(2, SeedTree::new(7).child("haar"));
    let t0 = Instant::now();
    let table = estimate_request(&strobe32, &spec, &req, &ens).unwrap();
    println!(
        "weak-link request c32, {} entries x 2 states: {:?}  (per state {:?})",
        table.n_entries(),
        t0.elapsed(),
        t0.elapsed() / 2
    );

    let t0 = Instant::now();
    let strobe64 = StrobeBackend::<Complex64>::for_request(&spec, &req).unwrap();
    println!("strobe build (c64): {:?}", t0.elapsed());
    let t0 = Instant::now();
    let _ = estimate_request(&strobe64, &spec, &req, &ens).unwrap();
    println!("weak-link request c64: {:?}", t0.elapsed());

    // probe-family request (fisher / probe task shape)
    let preq = probe_request(l, vec![2.0, 4.0, 6.0, 8.0, 10.0, 12.0]);
    let gc = Geometry::crossed_chains(l, 4).unwrap();
    let disc = sample_disorder(&gc, None, SeedTree::new(2).child("d"));
    let cspec = SystemSpec::new(gc, disc, Drive::floquet());
    let t0 = Instant::now();
    let strobe32p = StrobeBackend::<Complex32>::for_request(&cspec, &preq).unwrap();
    println!("strobe build crossed (c32): {:?}", t0.elapsed());
    let t0 = Instant::now();
    let table = estimate_request(&strobe32p, &cspec, &preq, &ens).unwrap();
    println!(
        "probe request c32, {} entries x 2 states: {:?}",
        table.n_entries(),
        t0.elapsed()
    );

    // cavity weak-link (criterion-6 shape): Krylov backend, cutoff 2
    let dis = sample_disorder(&g, Some(0.3), SeedTree::new(3).child("d"));
    let cav_spec = SystemSpec::new(g.clone(), dis, Drive::floquet()).with_cavity(CavityConfig {
        g: 0.25,
        omega: 1.7,
        cutoff: 2,
    });
    let creq = weak_link_request(sites, vec![2.0, 4.0, 7.0, 10.0]);
    let t0 = Instant::now();
    let kb = KrylovBackend::new(&cav_spec).unwrap();
    println!("cavity krylov build (dim {}): {:?}", cav_spec.dim(), t0.elapsed());
    let ens1 = Ensemble::haar(1, SeedTree::new(8).child("haar"));
    let t0 = Instant::now();
    let table = estimate_request(&kb, &cav_spec, &creq, &ens1).unwrap();
    println!(
        "cavity weak-link request, {} entries x 1 state: {:?}",
        table.n_entries(),
        t0.elapsed()
    );
}
