use polyspike::config::RunConfig;
use polyspike::deadcore::{core_target, find_c_tau, solve_radial_sublinear};
use polyspike::energy::construct;
use polyspike::grid::GridSpec;
use polyspike::groundstate::solve_ground_state;
use polyspike::reduction::Reduction;

#[test]
fn coarse_construction_is_a_nonnegative_fixed_point() {
    let cfg = RunConfig::defaults(8);
    let base = solve_ground_state(4.0, 2, 1e-10).unwrap();
    let spec = GridSpec { h: 0.2, ..cfg.grid.clone() };
    let (pb, fp) = construct(&cfg.bump, &spec, &base, &cfg.fixed_point).unwrap();
    assert!(fp.converged);
    assert!(fp.history.len() <= 60);
    assert!(fp.history.last().unwrap().d < 1e-10);
    let (umin, vmin) = fp.outer.min_values();
    assert!(umin >= -1e-10 && vmin >= -1e-10);

    assert!(fp.t_defect <= 10.0 * cfg.fixed_point.tol, "d(Tz, z) = {}", fp.t_defect);
    let red = Reduction::new(&pb).unwrap();
    let (tp, _) = red.t_map(&pb, &fp.phi, &fp.psi).unwrap();
    assert_eq!(tp.len(), pb.n());

    // The pair keeps the bump ordering: u peaks on the inner ring, v on the outer.
    let near = |c: &[f64; 2]| (0..pb.n()).min_by(|&a, &b| {
        let da = (pb.grid.x[a] - c[0]).hypot(pb.grid.y[a] - c[1]);
        let db = (pb.grid.x[b] - c[0]).hypot(pb.grid.y[b] - c[1]);
        da.partial_cmp(&db).unwrap()
    }).unwrap();
    let ax = near(&pb.x_centers[0]);
    let ay = near(&pb.y_centers[0]);
    assert!(fp.outer.u[ax] > 10.0 * fp.outer.u[ay]);
    assert!(fp.outer.v[ay] > 10.0 * fp.outer.v[ax]);
}

#[test]
fn c_tau_solution_meets_core_target() {
    let cfg = RunConfig::defaults(12);
    let b = &cfg.bump;
    let ct = find_c_tau(b.tau, b.m, b.sigma_prime, 2).unwrap();
    let sol = solve_radial_sublinear(ct.c_tau, b.sigma_prime, 2, 1e-10).unwrap();
    assert!(sol.core_radius >= core_target(b.m, b.tau));
    assert!(sol.values.iter().all(|&w| w >= 0.0));
    assert!(sol.values.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn config_file_round_trip() {
    let dir = std::env::temp_dir().join(format!("polyspike-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("run.toml");
    let c = RunConfig::parse("[geometry]\nell = 10\n[grid]\nh = 0.1\n[run]\nseed = 5\n").unwrap();
    std::fs::write(&path, c.to_toml()).unwrap();
    let back = RunConfig::from_file(&path).unwrap();
    assert_eq!(back.content_hash(), c.content_hash());
    assert_eq!(back.bump.n_smooth, (4.0 * 10f64.ln().powi(5)).ceil() as usize + 1);
    std::fs::remove_dir_all(&dir).unwrap();
}
