use irsim::sweep::Instants;
use irsim::{parse_config, ConfigError, HardwareKnobs, SweepSpec};
use irsim_core::config::{dbm_to_watts, SPEED_OF_LIGHT};
use irsim_core::{HardwareProfile, ReceiverKind, Resolution, SystemConfig};

#[test]
fn empty_file_gives_reference_defaults() {
    let spec = parse_config("").unwrap();
    let c = &spec.base;
    assert_eq!((c.cells, c.users_per_cell), (4, 5));
    assert_eq!((c.bs_dims, c.irs_dims), ((8, 8), (10, 10)));
    assert_eq!((c.tau_c, c.tau_p), (500, 5));
    assert!((c.p_data_w - 0.1).abs() < 1e-15 && (c.p_pilot_w - 0.1).abs() < 1e-15);
    assert!((c.ue_speed_mps - 20.0).abs() < 1e-12);
    assert_eq!((c.carrier_hz, c.area_km, c.direct_extra_loss_db), (2e9, 0.5, 70.0));
    assert_eq!(spec.hardware.profile().unwrap(), HardwareProfile::reference());
    assert_eq!(spec.hardware, HardwareKnobs { kappa_ue: 0.05, kappa_bs: 0.1, bits_ue: Resolution::Bits(4), bits_bs: Resolution::Bits(4) });
    assert_eq!(spec.receivers, ReceiverKind::ALL.to_vec());
    assert!(spec.axes.is_empty());
}

#[test]
fn bits_ideal_gives_the_ideal_profile() {
    let spec = parse_config("bits = \"ideal\"\nkappa_ue = 0\nkappa_bs = 0\n").unwrap();
    assert!(spec.hardware.profile().unwrap().is_ideal());
    let half = parse_config("bits = \"ideal\"").unwrap();
    assert_eq!(half.hardware.bits_ue, Resolution::Ideal);
    assert!(!half.hardware.profile().unwrap().is_ideal());
}

#[test]
fn velocity_sets_the_doppler_shift() {
    let spec = parse_config("velocity_kmh = 144").unwrap();
    let want = 144.0 / 3.6 * 2e9 / SPEED_OF_LIGHT;
    assert!((spec.base.doppler_hz() - want).abs() < 1e-9 * want);
}

#[test]
fn unknown_keys_are_errors() {
    assert_eq!(parse_config("antennas = 64").unwrap_err(), ConfigError::UnknownKey("antennas".into()));
    assert!(matches!(parse_config("[geometry]\nfoo = 1"), Err(ConfigError::UnknownKey(_))));
    assert!(matches!(parse_config("[sweep]\nfoo = [1]"), Err(ConfigError::UnknownKey(_))));
    assert!(matches!(parse_config("[extras]\nx = 1"), Err(ConfigError::UnknownKey(_))));
}

#[test]
fn type_mismatches_are_errors() {
    assert!(matches!(parse_config("cells = \"four\""), Err(ConfigError::Type { .. })));
    assert!(matches!(parse_config("p_data_dbm = true"), Err(ConfigError::Type { .. })));
    assert!(matches!(parse_config("[sweep]\nbits = 4"), Err(ConfigError::Type { .. })));
    assert!(matches!(parse_config("trials = 0"), Err(ConfigError::Invalid(_))));
}

#[test]
fn run_keys_and_file_order() {
    let spec = parse_config(
        "seed = 42\ntrials = 300\nreceivers = [\"daa-mmse\", \"mrc\"]\ninstants = [3, 30]\nblock_size = 5\n\
         noise_dbm = -140\nirs_side = 6\nirs_v = 2\nbits = 3\nbits_bs = 5\n\
         [geometry]\nirs_distance_km = 0.05\n\
         [sweep]\nvelocity_kmh = [36, 144]\nusers_per_cell = [1, 2]\n",
    )
    .unwrap();
    assert_eq!((spec.seed, spec.trials, spec.block_size), (42, 300, 5));
    assert_eq!(spec.receivers, vec![ReceiverKind::DaaMmse, ReceiverKind::Mrc]);
    assert_eq!(spec.instants, Instants::Explicit(vec![3, 30]));
    assert!((spec.base.noise_power_w - dbm_to_watts(-140.0)).abs() < 1e-30);
    assert_eq!(spec.base.irs_dims, (6, 2));
    assert_eq!((spec.hardware.bits_ue, spec.hardware.bits_bs), (Resolution::Bits(3), Resolution::Bits(5)));
    assert_eq!(spec.base.irs_distance_km, 0.05);
    let names: Vec<&str> = spec.axes.iter().map(|a| a.name.as_str()).collect();
    assert_eq!(names, ["velocity_kmh", "users_per_cell"]);
    // axes do not touch the base configuration
    assert_eq!(spec.base.ue_speed_mps, SystemConfig::default().ue_speed_mps);
}

#[test]
fn rendered_defaults_parse_back() {
    let text = irsim::render_config(&SweepSpec::default());
    let spec = parse_config(&text).unwrap();
    assert_eq!(irsim::render_config(&spec), text);
    for key in ["tau_c", "tau_p", "carrier_ghz", "sample_period_us", "noise_dbm"] {
        let line = text.lines().find(|l| l.starts_with(&format!("{key} ="))).unwrap();
        assert!(line.contains("assumed default"), "{line}");
    }
    let line = text.lines().find(|l| l.starts_with("users_per_cell =")).unwrap();
    assert!(!line.contains("assumed"));
}
