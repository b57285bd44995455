use rotalign_core::angular::periodic_grid;
use rotalign_core::coefficients::build_table_on;
use rotalign_core::vmf::NoiseParam;
use rotalign_ibm::checkpoint::{read_checkpoint, write_checkpoint};
use rotalign_ibm::sampling::{uniform_angles, uniform_positions};
use rotalign_ibm::system::init_rng;
use rotalign_ibm::{IbmParams, Law, ParticleSystem, PsiTable};

fn system(seed: u64) -> (ParticleSystem, PsiTable) {
    let grid = periodic_grid(128).unwrap();
    let table = build_table_on(NoiseParam::new(0.5).unwrap(), 3.0, 12, &grid).unwrap();
    let psi = PsiTable::from_table(&table).unwrap();
    let params = IbmParams { diff: 0.5, radius: 0.15, ..Default::default() };
    let n = 400;
    let mut rng = init_rng(seed);
    let pos = uniform_positions(n, params.box_len, &mut rng);
    let theta = uniform_angles(n, &mut rng);
    let w: Vec<f64> = (0..n).map(|k| [-2.0, -0.5, 0.5, 2.0][k % 4]).collect();
    (ParticleSystem::new(params, Law::L, pos, theta, w, Some(psi.clone()), seed).unwrap(), psi)
}

#[test]
fn psi_is_odd_and_increasing_in_w() {
    let (sys, _) = system(3);
    // Particles cycle through W = -2, -0.5, 0.5, 2.
    assert!((sys.psi_of(0) + sys.psi_of(3)).abs() < 1e-12);
    assert!((sys.psi_of(1) + sys.psi_of(2)).abs() < 1e-12);
    assert!(sys.psi_of(3) > sys.psi_of(2) && sys.psi_of(2) > 0.0);
    let (lo, hi) = sys.psi_table().unwrap().range();
    assert!(lo < -2.0 && hi > 2.0);
}

#[test]
fn checkpoint_reload_continues_bitwise() {
    let (mut a, psi) = system(9);
    a.serial = true;
    a.run(30).unwrap();
    let mut buf = Vec::new();
    write_checkpoint(&a, &mut buf).unwrap();
    let mut b = read_checkpoint(buf.as_slice(), Some(psi)).unwrap();
    b.serial = true;
    a.run(40).unwrap();
    b.run(40).unwrap();
    assert_eq!(a.theta, b.theta);
    assert_eq!(a.pos, b.pos);
    assert_eq!(a.checksum(), b.checksum());
}

#[test]
fn parallel_and_serial_runs_agree() {
    let (mut a, _) = system(5);
    let (mut b, _) = system(5);
    a.serial = true;
    a.run(25).unwrap();
    b.run(25).unwrap();
    assert_eq!(a.checksum(), b.checksum());
}
