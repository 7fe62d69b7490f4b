//! Parse suite for the scenario format: accepted forms, defaults, and every
//! rejection path with its diagnostic.

use emergent_cli::scenario::{SamplerName, Scenario, StateKind, DEFAULT_AUTO_K};
use emergent_cli::CliError;

const MINIMAL: &str = "[[slits]]\ncenter = 0.0\nsigma = 1.0\n";

fn invalid_field(text: &str) -> String {
    match Scenario::parse(text) {
        Err(CliError::Invalid { field, .. }) => field,
        other => panic!("expected a field error, got {other:?}"),
    }
}

fn parse_error(text: &str) -> (String, Option<(usize, usize)>) {
    match Scenario::parse(text) {
        Err(CliError::Parse { message, location }) => (message, location),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn minimal_scenario_takes_defaults() {
    let s = Scenario::parse(MINIMAL).unwrap();
    assert_eq!(s.physics.hbar, 1.0);
    assert_eq!(s.physics.mass, 1.0);
    assert_eq!(s.slits.len(), 1);
    assert_eq!(s.slits[0].velocity, 0.0);
    assert_eq!(s.slits[0].phase_offset, 0.0);
    assert_eq!(s.slits[0].amplitude, 1.0);
    assert_eq!(s.grid.x_min, None);
    assert_eq!(s.grid.auto_k, DEFAULT_AUTO_K);
    assert_eq!(s.ensemble.sampler, SamplerName::Born);
    assert_eq!(s.ensemble.seed, 42);
    assert_eq!(s.screen.bins, 50);
    assert_eq!(s.t1(), s.grid.t_max);
    assert_eq!(s.t_screen(), s.t1());
    assert!(s.nparticle.is_none());
    assert_eq!(s.thresholds.velocity, 1e-10);
}

#[test]
fn full_scenario_round_trips_every_field() {
    let text = r#"
[physics]
hbar = 0.5
mass = 2.0

[[slits]]
center = -1.5
sigma = 0.4
velocity = 0.1
phase_offset = 1.0
amplitude = 0.8

[[slits]]
center = 1.5
sigma = 0.4

[grid]
x_min = -10.0
x_max = 10.0
nx = 64
t_min = 0.5
t_max = 2.5
nt = 32
levels = 4

[ensemble]
sampler = "per_slit_gaussian"
n_traj = 12
seed = 7
tol = 1e-9
t0 = 0.5
t1 = 2.0
samples = 5
with_acceleration = true

[screen]
t_screen = 1.5
bins = 20

[outputs]
dir = "somewhere"

[nparticle]
state = "antisymmetric"
modes = [1, 0]
n_traj = 30
t1 = 1.0
bins = 6
identity_checks = 10
displacement = 0.25
samples = 4

[thresholds]
velocity = 1e-9
screen_l1 = 0.1
"#;
    let s = Scenario::parse(text).unwrap();
    assert_eq!(s.physics.hbar, 0.5);
    assert_eq!(s.slits[0].amplitude, 0.8);
    assert_eq!(s.grid.x_min, Some(-10.0));
    assert_eq!(s.grid.levels, 4);
    assert_eq!(s.ensemble.sampler, SamplerName::PerSlitGaussian);
    assert!(s.ensemble.with_acceleration);
    assert_eq!(s.t_screen(), 1.5);
    assert_eq!(s.outputs.dir.to_str(), Some("somewhere"));
    let np = s.nparticle.as_ref().unwrap();
    assert_eq!(np.state, StateKind::Antisymmetric);
    assert_eq!(np.modes, [1, 0]);
    assert_eq!(np.displacement, Some(0.25));
    assert_eq!(s.thresholds.velocity, 1e-9);
    assert_eq!(s.thresholds.force, 1e-4);
    let g = s.grid().unwrap();
    assert_eq!((g.x_min, g.x_max, g.nx, g.nt), (-10.0, 10.0, 64, 32));
}

#[test]
fn auto_grid_covers_declared_k_sigma_at_t_max() {
    let s = Scenario::parse("[[slits]]\ncenter = 1.0\nsigma = 0.5\nvelocity = 0.4\n[grid]\nt_max = 2.0\n").unwrap();
    let g = s.grid().unwrap();
    let m = s.modes().unwrap()[0];
    assert!(g.x_max >= m.center_at(2.0) + DEFAULT_AUTO_K * m.width_at(2.0) - 1e-12);
    assert!(g.x_min <= m.center_at(2.0) - DEFAULT_AUTO_K * m.width_at(2.0) + 1e-12);
}

#[test]
fn comments_and_whitespace_are_ignored() {
    let text = "# a comment\n\n[[slits]]   # trailing\n  center = 0.0\n\tsigma = 1.0\n";
    assert!(Scenario::parse(text).is_ok());
}

#[test]
fn integers_are_accepted_for_real_fields() {
    let s = Scenario::parse("[[slits]]\ncenter = 2\nsigma = 1\n").unwrap();
    assert_eq!(s.slits[0].center, 2.0);
}

#[test]
fn syntax_errors_report_line_and_column() {
    let (_, loc) = parse_error("[[slits]]\ncenter = 0.0\nsigma = = 1.0\n");
    assert_eq!(loc.map(|l| l.0), Some(3));
    let (_, loc) = parse_error("[physics\nhbar = 1\n");
    assert_eq!(loc.map(|l| l.0), Some(1));
}

#[test]
fn unknown_keys_and_sections_are_rejected() {
    let (msg, loc) = parse_error(&format!("{MINIMAL}[grid]\nnx = 10\nbogus = 1\n"));
    assert!(msg.contains("bogus"), "{msg}");
    assert_eq!(loc.map(|l| l.0), Some(6));
    let (msg, _) = parse_error(&format!("{MINIMAL}[extra]\na = 1\n"));
    assert!(msg.contains("extra"), "{msg}");
}

#[test]
fn type_and_presence_errors_name_the_field() {
    let (msg, _) = parse_error("[[slits]]\ncenter = \"left\"\nsigma = 1.0\n");
    assert!(msg.contains("invalid type"), "{msg}");
    let (msg, _) = parse_error("[[slits]]\ncenter = 0.0\n");
    assert!(msg.contains("sigma"), "{msg}");
    let (msg, _) = parse_error("[physics]\nhbar = 1.0\n");
    assert!(msg.contains("slits"), "{msg}");
    let (msg, _) = parse_error(&format!("{MINIMAL}[ensemble]\nsampler = \"uniform\"\n"));
    assert!(msg.contains("uniform"), "{msg}");
    let (msg, _) = parse_error(&format!("{MINIMAL}[ensemble]\nn_traj = -3\n"));
    assert!(!msg.is_empty());
}

#[test]
fn value_errors_name_the_field() {
    let cases = [
        ("[physics]\nhbar = 0.0\n[[slits]]\ncenter = 0.0\nsigma = 1.0\n", "physics.hbar"),
        ("[physics]\nmass = -1.0\n[[slits]]\ncenter = 0.0\nsigma = 1.0\n", "physics.mass"),
        ("slits = []\n", "slits"),
        ("[[slits]]\ncenter = 0.0\nsigma = 0.0\n", "slits[0].sigma"),
        ("[[slits]]\ncenter = 0.0\nsigma = 1.0\n[[slits]]\ncenter = nan\nsigma = 1.0\n", "slits[1].center"),
        ("[[slits]]\ncenter = 0.0\nsigma = 1.0\namplitude = 0.0\n", "slits[0].amplitude"),
        ("[[slits]]\ncenter = 0.0\nsigma = 1.0\nvelocity = inf\n", "slits[0].velocity"),
    ];
    for (text, field) in cases {
        assert_eq!(invalid_field(text), field, "{text}");
    }
    let grid_cases = [
        ("[grid]\nnx = 1\n", "grid.nx"),
        ("[grid]\nnt = 1\n", "grid.nt"),
        ("[grid]\nt_min = 2.0\nt_max = 1.0\n", "grid.t_max"),
        ("[grid]\nx_min = 1.0\nx_max = 1.0\n", "grid.x_max"),
        ("[grid]\nx_min = 1.0\n", "grid.x_min"),
        ("[grid]\nauto_k = 0.0\n", "grid.auto_k"),
        ("[grid]\nlevels = 1\n", "grid.levels"),
        ("[ensemble]\nn_traj = 0\n", "ensemble.n_traj"),
        ("[ensemble]\ntol = 0.0\n", "ensemble.tol"),
        ("[ensemble]\nt0 = 5.0\n", "ensemble.t1"),
        ("[ensemble]\nsamples = 1\n", "ensemble.samples"),
        ("[screen]\nt_screen = 10.0\n", "screen.t_screen"),
        ("[screen]\nbins = 0\n", "screen.bins"),
        ("[nparticle]\nstate = \"product\"\nmodes = [0, 3]\n", "nparticle.modes[1]"),
        ("[nparticle]\nstate = \"product\"\nmodes = [0, 0]\nn_traj = 0\n", "nparticle.n_traj"),
        ("[nparticle]\nstate = \"product\"\nmodes = [0, 0]\ndisplacement = 0.0\n", "nparticle.displacement"),
        ("[thresholds]\nvelocity = 0.0\n", "thresholds.velocity"),
        ("[thresholds]\ncontinuity_ratio_min = 5.0\n", "thresholds.continuity_ratio_max"),
    ];
    for (section, field) in grid_cases {
        assert_eq!(invalid_field(&format!("{MINIMAL}{section}")), field, "{section}");
    }
}

#[test]
fn hash_ignores_output_directory_only() {
    let a = Scenario::parse(&format!("{MINIMAL}[outputs]\ndir = \"a\"\n")).unwrap();
    let b = Scenario::parse(&format!("{MINIMAL}[outputs]\ndir = \"b\"\n")).unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 64);
    let c = Scenario::parse(&format!("{MINIMAL}[ensemble]\nseed = 43\n")).unwrap();
    assert_ne!(a.hash(), c.hash());
    // spelled-out defaults hash like omitted ones
    let d = Scenario::parse(&format!("{MINIMAL}[ensemble]\nseed = 42\n")).unwrap();
    assert_eq!(a.hash(), d.hash());
}

#[test]
fn shipped_scenarios_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 3);
}
