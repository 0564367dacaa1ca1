use irsim::manifest::{manifest_path, Manifest};
use irsim::sweep::{run_sweep_with_threads, Axis, Instants, SweepSpec};
use irsim::{read_csv, run_sweep, write_csv, RunError};
use irsim_core::{ReceiverKind, SystemConfig};
use toml::Value;

fn desk_spec() -> SweepSpec {
    SweepSpec {
        base: SystemConfig::desk(),
        trials: 40,
        instants: Instants::Stride(20),
        block_size: 8,
        seed: 11,
        ..SweepSpec::default()
    }
}

fn csv_bytes(spec: &SweepSpec, threads: Option<usize>) -> Vec<u8> {
    let out = run_sweep_with_threads(spec, threads).unwrap();
    let mut buf = Vec::new();
    write_csv(&mut buf, &out.axes, &out.rows).unwrap();
    buf
}

#[test]
fn row_count_is_points_times_receivers_times_instants() {
    let mut spec = desk_spec();
    spec.axes = vec![
        Axis::new("bits", [Value::Integer(2), Value::Integer(4)]),
        Axis::new("velocity_kmh", [Value::Integer(72), Value::Integer(144), Value::Integer(0)]),
    ];
    let out = run_sweep(&spec).unwrap();
    // instants 3, 23, 43, 60
    assert_eq!(out.rows.len(), 6 * 3 * 4);
    assert_eq!(out.points.len(), 6);
    assert_eq!(out.rows[0].axes, ["2", "72"]);
    assert_eq!(out.rows.last().unwrap().axes, ["4", "0"]);
    let mrc_rows = out.rows.iter().filter(|r| r.receiver == ReceiverKind::Mrc);
    assert!(mrc_rows.clone().all(|r| r.mui_closed_form.is_some()));
    assert!(out.rows.iter().filter(|r| r.receiver != ReceiverKind::Mrc).all(|r| r.mui_closed_form.is_none()));
    // static point has no aging term
    assert!(out.rows.iter().filter(|r| r.axes[1] == "0").all(|r| r.terms.ca == 0.0));
}

#[test]
fn csv_is_identical_across_thread_counts_and_reruns() {
    let mut spec = desk_spec();
    spec.axes = vec![Axis::new("irs_side", [Value::Integer(2), Value::Integer(4)])];
    let one = csv_bytes(&spec, Some(1));
    assert_eq!(one, csv_bytes(&spec, Some(4)));
    assert_eq!(one, csv_bytes(&spec, None));
    assert_eq!(one, csv_bytes(&spec, Some(1)));
}

#[test]
fn a_point_does_not_depend_on_its_neighbours() {
    let mut wide = desk_spec();
    wide.axes = vec![Axis::new("bits", [Value::Integer(2), Value::Integer(4)])];
    let mut narrow = desk_spec();
    narrow.axes = vec![Axis::new("bits", [Value::Integer(4)])];
    let w = run_sweep(&wide).unwrap();
    let n = run_sweep(&narrow).unwrap();
    let w4: Vec<_> = w.rows.into_iter().filter(|r| r.axes[0] == "4").collect();
    assert_eq!(w4, n.rows);
}

#[test]
fn csv_file_round_trip() {
    let out = run_sweep(&desk_spec()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    write_csv(std::fs::File::create(&path).unwrap(), &out.axes, &out.rows).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(!text.contains('\r'));
    assert_eq!(text.lines().count(), out.rows.len() + 1);
    let (axes, rows) = read_csv(text.as_bytes()).unwrap();
    assert!(axes.is_empty());
    for (a, b) in rows.iter().zip(&out.rows) {
        assert_eq!((a.receiver, a.n, a.seed), (b.receiver, b.n, b.seed));
        for (x, y) in a.terms.to_array().iter().zip(b.terms.to_array()) {
            assert!((x - y).abs() <= 1e-9 * y.abs());
        }
        assert!((a.se - b.se).abs() <= 1e-9 * b.se);
    }
}

#[test]
fn manifest_digest_tracks_the_spec() {
    let a = desk_spec();
    let mut b = desk_spec();
    b.seed += 1;
    let mut c = desk_spec();
    c.hardware.kappa_bs = 0.2;
    let mut d = desk_spec();
    d.axes = vec![Axis::new("bits", [Value::Integer(4)])];
    let digests: Vec<String> = [&a, &b, &c, &d].iter().map(|s| Manifest::new(s, 1, 1, 1, 0.0, 0.0).config_digest).collect();
    for i in 0..4 {
        for j in 0..i {
            assert_ne!(digests[i], digests[j]);
        }
    }
    assert_eq!(Manifest::new(&desk_spec(), 1, 1, 7, 0.0, 1.0).config_digest, digests[0]);
    assert!(manifest_path("x/out.csv".as_ref()).ends_with("out.csv.manifest.json"));
}

#[test]
fn errors_surface_before_any_compute() {
    let mut spec = desk_spec();
    // first point is fine, the last one is not
    spec.axes = vec![Axis::new("users_per_cell", [Value::Integer(1), Value::Integer(3)])];
    let t0 = std::time::Instant::now();
    assert!(matches!(run_sweep(&spec), Err(RunError::Config(_))));
    assert!(t0.elapsed().as_millis() < 500);
    let mut spec = desk_spec();
    spec.instants = Instants::Explicit(vec![1]);
    assert!(matches!(run_sweep(&spec), Err(RunError::Config(_))));
}
